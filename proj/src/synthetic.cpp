#include "epidiv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epidiv/rng.hpp"

namespace epidiv {

PopulationSpec PopulationSpec::uniform(int s, int64_t n, uint64_t seed) {
    PopulationSpec spec;
    spec.family = Family::Uniform;
    spec.num_classes = s;
    spec.n_samples = n;
    spec.seed = seed;
    return spec;
}

PopulationSpec PopulationSpec::zipf(int s, double exponent, int64_t n, uint64_t seed) {
    PopulationSpec spec;
    spec.family = Family::Zipf;
    spec.num_classes = s;
    spec.exponent = exponent;
    spec.n_samples = n;
    spec.seed = seed;
    return spec;
}

PopulationSpec PopulationSpec::geometric(int s, double ratio, int64_t n, uint64_t seed) {
    PopulationSpec spec;
    spec.family = Family::Geometric;
    spec.num_classes = s;
    spec.ratio = ratio;
    spec.n_samples = n;
    spec.seed = seed;
    return spec;
}

PopulationSpec PopulationSpec::explicit_probs(std::vector<double> probs, int64_t n,
                                              uint64_t seed) {
    PopulationSpec spec;
    spec.family = Family::Explicit;
    spec.probs = std::move(probs);
    spec.num_classes = static_cast<int>(spec.probs.size());
    spec.n_samples = n;
    spec.seed = seed;
    return spec;
}

std::vector<double> population_distribution(const PopulationSpec& spec) {
    std::vector<double> probs;
    switch (spec.family) {
        case PopulationSpec::Family::Uniform: {
            if (spec.num_classes < 1) {
                throw EpidivError(ErrorCode::DistributionInvalid, "uniform needs S >= 1");
            }
            probs.assign(static_cast<size_t>(spec.num_classes),
                         1.0 / static_cast<double>(spec.num_classes));
            break;
        }
        case PopulationSpec::Family::Zipf: {
            if (spec.num_classes < 1) {
                throw EpidivError(ErrorCode::DistributionInvalid, "zipf needs S >= 1");
            }
            probs.reserve(static_cast<size_t>(spec.num_classes));
            for (int i = 1; i <= spec.num_classes; ++i) {
                probs.push_back(std::pow(static_cast<double>(i), -spec.exponent));
            }
            break;
        }
        case PopulationSpec::Family::Geometric: {
            if (spec.num_classes < 1 || spec.ratio <= 0.0) {
                throw EpidivError(ErrorCode::DistributionInvalid, "geometric needs S >= 1, r > 0");
            }
            double w = 1.0;
            for (int i = 0; i < spec.num_classes; ++i) {
                probs.push_back(w);
                w *= spec.ratio;
            }
            break;
        }
        case PopulationSpec::Family::Explicit: {
            probs = spec.probs;
            break;
        }
    }
    double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (probs.empty() || sum <= 0.0) {
        throw EpidivError(ErrorCode::DistributionInvalid, "population has no probability mass");
    }
    for (double& p : probs) p /= sum;
    if (spec.family == PopulationSpec::Family::Explicit) {
        double raw = std::accumulate(spec.probs.begin(), spec.probs.end(), 0.0);
        if (std::abs(raw - 1.0) > 1e-9) {
            throw EpidivError(ErrorCode::DistributionInvalid,
                              "explicit probabilities must sum to 1");
        }
    }
    return probs;
}

std::string render_tagged_claim(const std::string& tag_syntax, int class_index,
                                int64_t draw_index) {
    std::string out = tag_syntax;
    auto replace_all = [&](const std::string& token, const std::string& value) {
        size_t pos = 0;
        while ((pos = out.find(token, pos)) != std::string::npos) {
            out.replace(pos, token.size(), value);
            pos += value.size();
        }
    };
    replace_all("{class}", std::to_string(class_index));
    replace_all("{n}", std::to_string(draw_index));
    return out;
}

SampledPopulation sample_population(const PopulationSpec& spec) {
    SampledPopulation sampled;
    sampled.distribution = population_distribution(spec);
    if (spec.n_samples < 0) {
        throw EpidivError(ErrorCode::DistributionInvalid, "n_samples must be >= 0");
    }
    std::vector<double> cdf(sampled.distribution.size());
    std::partial_sum(sampled.distribution.begin(), sampled.distribution.end(), cdf.begin());
    cdf.back() = 1.0;

    Rng rng(spec.seed);
    sampled.claims.reserve(static_cast<size_t>(spec.n_samples));
    sampled.classes.reserve(static_cast<size_t>(spec.n_samples));
    for (int64_t i = 0; i < spec.n_samples; ++i) {
        double u = rng.next_double();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        int cls = static_cast<int>(std::min<size_t>(
            static_cast<size_t>(it - cdf.begin()), cdf.size() - 1));
        sampled.classes.push_back(cls);
        sampled.claims.push_back(render_tagged_claim(spec.tag_syntax, cls, i));
    }
    return sampled;
}

double true_hsd(const std::vector<double>& distribution) {
    double sum = std::accumulate(distribution.begin(), distribution.end(), 0.0);
    if (distribution.empty() || std::abs(sum - 1.0) > 1e-9) {
        throw EpidivError(ErrorCode::DistributionInvalid, "distribution must sum to 1");
    }
    double h = 0.0;
    for (double p : distribution) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::exp(h);
}

double true_coverage(const std::vector<double>& distribution,
                     const std::vector<int>& observed) {
    std::vector<bool> seen(distribution.size(), false);
    for (int cls : observed) {
        if (cls < 0 || static_cast<size_t>(cls) >= distribution.size()) {
            throw EpidivError(ErrorCode::DistributionInvalid,
                              "observed class outside the population support");
        }
        seen[static_cast<size_t>(cls)] = true;
    }
    double mass = 0.0;
    for (size_t i = 0; i < distribution.size(); ++i) {
        if (seen[i]) mass += distribution[i];
    }
    return mass;
}

std::optional<int> extract_class_tag(const std::string& text) {
    size_t start = text.find("[[k");
    if (start == std::string::npos) return std::nullopt;
    size_t digits = start + 3;
    size_t end = digits;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end == digits || end + 1 >= text.size() || text[end] != ']' || text[end + 1] != ']') {
        return std::nullopt;
    }
    return std::stoi(text.substr(digits, end - digits));
}

}  // namespace epidiv
