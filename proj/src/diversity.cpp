#include "epidiv/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "epidiv/rng.hpp"

namespace epidiv {

namespace {

double shannon_entropy_nats(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double coverage_from_stats(int64_t n, int64_t f1, int64_t f2) {
    if (f1 == 0) return 1.0;
    double nn = static_cast<double>(n);
    double a = static_cast<double>(f1) / nn;
    double numer = (nn - 1.0) * static_cast<double>(f1);
    double denom = numer + 2.0 * static_cast<double>(f2);
    return 1.0 - a * (numer / denom);
}

}  // namespace

double hill_diversity(const AbundanceVector& v, HillOrder order) {
    if (v.empty()) {
        throw EpidivError(ErrorCode::EmptyAbundance, "hill_diversity on empty abundance vector");
    }
    std::vector<double> probs = v.probabilities();
    double l = order.l;
    if (l == 0.0) {
        return std::exp(shannon_entropy_nats(probs));
    }
    double sum = 0.0;
    for (double p : probs) {
        // p * (1/p)^l = p^(1-l)
        sum += std::pow(p, 1.0 - l);
    }
    return std::pow(sum, 1.0 / l);
}

double hill_shannon_diversity(const AbundanceVector& v) {
    return hill_diversity(v, HillOrder{0.0});
}

CoverageEstimate estimate_coverage(const AbundanceVector& v) {
    if (v.n() <= 1) {
        return {0.0, false};
    }
    return {coverage_from_stats(v.n(), v.f1(), v.f2()), true};
}

namespace {

// Running abundance over a growing prefix with O(1) coverage updates.
class PrefixCounter {
public:
    void add(int cluster_id) {
        int64_t& count = counts_[cluster_id];
        if (count == 1) --f1_;
        if (count == 2) --f2_;
        ++count;
        if (count == 1) ++f1_;
        if (count == 2) ++f2_;
        ++n_;
    }

    int64_t n() const { return n_; }

    // Undefined (reported as 0) below n = 2, matching the estimator contract.
    double coverage() const {
        if (n_ <= 1) return 0.0;
        return coverage_from_stats(n_, f1_, f2_);
    }

    AbundanceVector abundance() const {
        std::vector<int64_t> counts;
        counts.reserve(counts_.size());
        for (const auto& [cluster, count] : counts_) counts.push_back(count);
        std::sort(counts.begin(), counts.end());
        return AbundanceVector(std::move(counts));
    }

private:
    std::unordered_map<int, int64_t> counts_;
    int64_t f1_ = 0;
    int64_t f2_ = 0;
    int64_t n_ = 0;
};

AbundanceVector abundance_of_sequence(const std::vector<int>& class_sequence) {
    PrefixCounter counter;
    for (int c : class_sequence) counter.add(c);
    return counter.abundance();
}

}  // namespace

std::vector<AbundanceVector> rarefy_to_coverage(const std::vector<int>& class_sequence,
                                                const RarefactionPlan& plan) {
    if (plan.resamples < 1) {
        throw EpidivError(ErrorCode::DistributionInvalid, "rarefaction needs resamples >= 1");
    }
    if (plan.target_coverage <= 0.0 || plan.target_coverage > 1.0) {
        throw EpidivError(ErrorCode::DistributionInvalid, "target coverage must be in (0, 1]");
    }
    if (class_sequence.empty()) {
        throw EpidivError(ErrorCode::EmptyAbundance, "rarefaction on empty claim sequence");
    }
    AbundanceVector full = abundance_of_sequence(class_sequence);
    double full_coverage = estimate_coverage(full).value;
    if (plan.target_coverage > full_coverage + 1e-9) {
        throw EpidivError(ErrorCode::TargetUnreachable,
                          "target coverage " + std::to_string(plan.target_coverage) +
                              " exceeds full-sample coverage " + std::to_string(full_coverage));
    }

    std::vector<AbundanceVector> samples;
    samples.reserve(static_cast<size_t>(plan.resamples));

    // Target equal to the full-sample coverage short-circuits to the full vector.
    if (std::abs(plan.target_coverage - full_coverage) <= 1e-12) {
        for (int r = 0; r < plan.resamples; ++r) samples.push_back(full);
        return samples;
    }

    for (int r = 0; r < plan.resamples; ++r) {
        Rng rng(derive_seed(plan.seed, "rarefy", std::to_string(r)));
        std::vector<int> order = class_sequence;
        rng.shuffle(order);
        PrefixCounter counter;
        bool stopped = false;
        for (int cluster : order) {
            counter.add(cluster);
            if (counter.n() >= 2 && counter.coverage() >= plan.target_coverage) {
                stopped = true;
                break;
            }
        }
        // The full permutation reaches full coverage >= target by construction.
        (void)stopped;
        samples.push_back(counter.abundance());
    }
    return samples;
}

RarefiedHsd rarefied_hsd(const std::vector<AbundanceVector>& samples) {
    RarefiedHsd result;
    if (samples.empty()) {
        throw EpidivError(ErrorCode::EmptyAbundance, "rarefied_hsd on zero samples");
    }
    result.per_resample.reserve(samples.size());
    for (const auto& sample : samples) {
        result.per_resample.push_back(hill_shannon_diversity(sample));
    }
    double sum = std::accumulate(result.per_resample.begin(), result.per_resample.end(), 0.0);
    result.mean = sum / static_cast<double>(result.per_resample.size());
    if (result.per_resample.size() > 1) {
        double ss = 0.0;
        for (double v : result.per_resample) {
            double d = v - result.mean;
            ss += d * d;
        }
        result.sd = std::sqrt(ss / static_cast<double>(result.per_resample.size() - 1));
    }
    return result;
}

double jensen_shannon_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty()) {
        throw EpidivError(ErrorCode::DistributionInvalid,
                          "JSD inputs must share one non-empty class index");
    }
    double sum_p = 0.0, sum_q = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw EpidivError(ErrorCode::DistributionInvalid, "negative probability");
        }
        sum_p += p[i];
        sum_q += q[i];
    }
    if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9) {
        throw EpidivError(ErrorCode::DistributionInvalid, "JSD inputs must each sum to 1");
    }
    double jsd = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) jsd += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) jsd += 0.5 * q[i] * std::log(q[i] / m);
    }
    return jsd;
}

BootstrapInterval bootstrap_ci(const std::vector<double>& values, int replicates, double level,
                               uint64_t seed) {
    if (values.empty()) {
        throw EpidivError(ErrorCode::EmptyAbundance, "bootstrap_ci on empty values");
    }
    if (replicates < 1 || level <= 0.0 || level >= 1.0) {
        throw EpidivError(ErrorCode::DistributionInvalid, "invalid bootstrap parameters");
    }
    size_t n = values.size();
    Rng rng(seed);
    std::vector<double> means;
    means.reserve(static_cast<size_t>(replicates));
    for (int b = 0; b < replicates; ++b) {
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            sum += values[rng.next_below(n)];
        }
        means.push_back(sum / static_cast<double>(n));
    }
    std::sort(means.begin(), means.end());
    auto percentile = [&](double q) {
        double pos = q * static_cast<double>(means.size() - 1);
        size_t lo = static_cast<size_t>(pos);
        double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= means.size()) return means.back();
        return means[lo] + (means[lo + 1] - means[lo]) * frac;
    };
    double alpha = (1.0 - level) / 2.0;
    return {percentile(alpha), percentile(1.0 - alpha)};
}

DiversityReport build_diversity_report(const std::string& generator_id,
                                       const std::string& topic_id, GenerationSetting setting,
                                       const std::vector<int>& class_sequence,
                                       const ReportOptions& options) {
    DiversityReport report;
    report.generator_id = generator_id;
    report.topic_id = topic_id;
    report.setting = setting;
    report.n = static_cast<int64_t>(class_sequence.size());
    if (class_sequence.empty()) {
        report.flags.push_back("empty");
        return report;
    }
    AbundanceVector full = abundance_of_sequence(class_sequence);
    report.num_classes = static_cast<int>(full.num_classes());
    report.f1 = full.f1();
    report.f2 = full.f2();
    CoverageEstimate cov = estimate_coverage(full);
    report.coverage = cov.value;
    if (!cov.defined) report.flags.push_back("undefined_coverage");
    report.hsd = hill_shannon_diversity(full);

    if (options.plan != nullptr) {
        const RarefactionPlan& plan = *options.plan;
        if (plan.target_coverage > cov.value + 1e-9) {
            report.flags.push_back("not_rarefied");
        } else {
            auto samples = rarefy_to_coverage(class_sequence, plan);
            RarefiedHsd stats = rarefied_hsd(samples);
            report.hsd = stats.mean;
            report.rarefied_to_coverage = plan.target_coverage;
            if (stats.per_resample.size() > 1) {
                auto ci = bootstrap_ci(stats.per_resample, options.bootstrap_replicates,
                                       options.bootstrap_level,
                                       derive_seed(plan.seed, "bootstrap-ci", topic_id));
                report.ci_low = ci.low;
                report.ci_high = ci.high;
            }
        }
    }
    return report;
}

}  // namespace epidiv
