#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "epidiv/diversity.hpp"
#include "epidiv/rng.hpp"
#include "epidiv/synthetic.hpp"

using namespace epidiv;

namespace {

AbundanceVector av(std::vector<int64_t> counts) { return AbundanceVector(std::move(counts)); }

// Independent entropy route used to cross-check hill_diversity at l=0.
double entropy_oracle(const std::vector<int64_t>& counts) {
    double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), int64_t{0}));
    double h = 0.0;
    for (int64_t c : counts) {
        double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return std::exp(h);
}

std::vector<int> sequence_of(const std::vector<int64_t>& counts) {
    std::vector<int> seq;
    for (size_t cls = 0; cls < counts.size(); ++cls) {
        for (int64_t i = 0; i < counts[cls]; ++i) seq.push_back(static_cast<int>(cls));
    }
    return seq;
}

}  // namespace

TEST_CASE("hill diversity closed forms") {
    CHECK(hill_diversity(av({25, 25, 25, 25}), HillOrder{0.0}) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(hill_diversity(av({100}), HillOrder{0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    // counts [2,1,1]: H = 1.5 ln 2, D = 2^1.5
    CHECK(hill_diversity(av({2, 1, 1}), HillOrder{0.0}) ==
          doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
    CHECK(hill_diversity(av({2, 1, 1}), HillOrder{0.0}) ==
          doctest::Approx(entropy_oracle({2, 1, 1})).epsilon(1e-12));
    // l = 1 reduces to richness
    CHECK(hill_diversity(av({7, 2, 1}), HillOrder{1.0}) == doctest::Approx(3.0).epsilon(1e-12));
    // l = -1 is inverse Simpson: 1 / sum p^2
    AbundanceVector v({3, 1});
    double simpson = 1.0 / (0.75 * 0.75 + 0.25 * 0.25);
    CHECK(hill_diversity(v, HillOrder{-1.0}) == doctest::Approx(simpson).epsilon(1e-12));
}

TEST_CASE("hill diversity rejects empty input") {
    AbundanceVector empty;
    CHECK_THROWS_AS(hill_diversity(empty, HillOrder{0.0}), EpidivError);
}

TEST_CASE("abundance vector rejects zero counts") {
    CHECK_THROWS_AS(AbundanceVector({1, 0, 2}), EpidivError);
}

TEST_CASE("Shannon-limit continuity") {
    Rng rng(91);
    std::vector<std::vector<int64_t>> fixtures;
    // uniform profiles across sizes
    for (int s : {1, 2, 17, 400, 1000}) {
        fixtures.push_back(std::vector<int64_t>(static_cast<size_t>(s), 5));
    }
    // moderately uneven random counts, S up to 1000
    for (int s : {10, 100, 1000}) {
        std::vector<int64_t> counts;
        for (int i = 0; i < s; ++i) {
            counts.push_back(50 + static_cast<int64_t>(rng.next_below(100)));
        }
        fixtures.push_back(std::move(counts));
    }
    // skewed zipf-like profile
    {
        std::vector<int64_t> counts;
        for (int i = 1; i <= 200; ++i) {
            counts.push_back(std::max<int64_t>(1, static_cast<int64_t>(2000.0 / std::pow(i, 1.1))));
        }
        fixtures.push_back(std::move(counts));
    }
    for (const auto& counts : fixtures) {
        AbundanceVector v(counts);
        double at_zero = hill_diversity(v, HillOrder{0.0});
        CHECK(std::abs(hill_diversity(v, HillOrder{1e-6}) - at_zero) <= 1e-4);
        CHECK(std::abs(hill_diversity(v, HillOrder{-1e-6}) - at_zero) <= 1e-4);
    }
}

TEST_CASE("replication principle: disjoint pooling doubles D") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int64_t> counts;
        size_t s = 1 + rng.next_below(40);
        for (size_t i = 0; i < s; ++i) {
            counts.push_back(1 + static_cast<int64_t>(rng.next_below(30)));
        }
        std::vector<int64_t> pooled = counts;
        pooled.insert(pooled.end(), counts.begin(), counts.end());
        double d = hill_diversity(AbundanceVector(counts), HillOrder{0.0});
        double d2 = hill_diversity(AbundanceVector(pooled), HillOrder{0.0});
        CHECK(d2 == doctest::Approx(2.0 * d).epsilon(1e-9));
    }
}

TEST_CASE("bounds: 1 <= D <= S, equality iff uniform") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int64_t> counts;
        size_t s = 1 + rng.next_below(30);
        for (size_t i = 0; i < s; ++i) {
            counts.push_back(1 + static_cast<int64_t>(rng.next_below(20)));
        }
        AbundanceVector v(counts);
        bool uniform = true;
        for (int64_t c : counts) uniform = uniform && c == counts[0];
        for (double l : {-1.0, 0.0, 1.0}) {
            double d = hill_diversity(v, HillOrder{l});
            CHECK(d >= 1.0 - 1e-9);
            CHECK(d <= static_cast<double>(s) + 1e-9);
            if (uniform) {
                CHECK(d == doctest::Approx(static_cast<double>(s)).epsilon(1e-9));
            }
        }
        if (!uniform) {
            CHECK(hill_diversity(v, HillOrder{0.0}) < static_cast<double>(s) - 1e-9);
        }
    }
}

TEST_CASE("coverage estimator analytic fixtures") {
    // all singletons: f1 = n, f2 = 0 -> 0
    CHECK(estimate_coverage(av(std::vector<int64_t>(10, 1))).value ==
          doctest::Approx(0.0).epsilon(1e-12));
    // no singletons -> 1 regardless of f2
    CHECK(estimate_coverage(av({3, 3, 2, 2})).value == doctest::Approx(1.0).epsilon(1e-12));
    // n=10, f1=2, f2=1: 1 - 0.2 * (18/20) = 0.82
    CHECK(estimate_coverage(av({6, 2, 1, 1})).value ==
          doctest::Approx(0.82).epsilon(1e-12));
}

TEST_CASE("coverage undefined below n=2") {
    CoverageEstimate est = estimate_coverage(av({1}));
    CHECK_FALSE(est.defined);
    CHECK(est.value == 0.0);
}

TEST_CASE("coverage calibration against the true estimand") {
    // zipf(1000, 1.1), n=1000: mean |estimate - true coverage| <= 0.05 over 50 seeds
    double total_error = 0.0;
    const int seeds = 50;
    for (int seed = 0; seed < seeds; ++seed) {
        PopulationSpec spec = PopulationSpec::zipf(1000, 1.1, 1000, 1000 + seed);
        SampledPopulation sampled = sample_population(spec);
        std::vector<int64_t> counts;
        {
            std::map<int, int64_t> by_class;
            for (int cls : sampled.classes) ++by_class[cls];
            for (const auto& [cls, count] : by_class) counts.push_back(count);
        }
        double estimated = estimate_coverage(AbundanceVector(counts)).value;
        double truth = true_coverage(sampled.distribution, sampled.classes);
        total_error += std::abs(estimated - truth);
    }
    CHECK(total_error / seeds <= 0.05);
}

TEST_CASE("rarefaction stopping rule") {
    SUBCASE("target equals full coverage: every resample is the full vector") {
        std::vector<int> seq = sequence_of({4, 3, 2, 1, 1});
        double full = estimate_coverage(av({4, 3, 2, 1, 1})).value;
        RarefactionPlan plan{full, 7, 11};
        auto samples = rarefy_to_coverage(seq, plan);
        REQUIRE(samples.size() == 7);
        for (const auto& s : samples) {
            std::vector<int64_t> counts = s.counts();
            std::sort(counts.begin(), counts.end());
            CHECK(counts == std::vector<int64_t>{1, 1, 2, 3, 4});
        }
    }
    SUBCASE("two-class [500,500], target 0.5: stops well before the full sample") {
        std::vector<int> seq = sequence_of({500, 500});
        RarefactionPlan plan{0.5, 50, 3};
        auto samples = rarefy_to_coverage(seq, plan);
        double mean_n = 0.0;
        for (const auto& s : samples) mean_n += static_cast<double>(s.n());
        mean_n /= static_cast<double>(samples.size());
        CHECK(mean_n < 1000.0);
        // every prefix indeed reached the target
        for (const auto& s : samples) {
            CHECK(estimate_coverage(s).value >= 0.5);
        }
    }
    SUBCASE("unreachable target") {
        std::vector<int> seq = sequence_of(std::vector<int64_t>(10, 1));  // coverage 0
        RarefactionPlan plan{1.0, 3, 1};
        CHECK_THROWS_AS(rarefy_to_coverage(seq, plan), EpidivError);
    }
    SUBCASE("stopping rule takes the smallest qualifying prefix") {
        // single class: any 2-prefix has f1=0 -> coverage 1 >= any target
        std::vector<int> seq(100, 0);
        RarefactionPlan plan{0.9, 5, 9};
        auto samples = rarefy_to_coverage(seq, plan);
        for (const auto& s : samples) CHECK(s.n() == 2);
    }
}

TEST_CASE("rarefied hsd aggregation") {
    SUBCASE("identical full-vector samples: mean = point HSD, sd = 0") {
        std::vector<int> seq = sequence_of({4, 4, 4, 4});
        double full = estimate_coverage(av({4, 4, 4, 4})).value;
        auto samples = rarefy_to_coverage(seq, RarefactionPlan{full, 5, 13});
        RarefiedHsd stats = rarefied_hsd(samples);
        CHECK(stats.mean == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(stats.sd == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("single resample: sd = 0 by convention") {
        RarefiedHsd stats = rarefied_hsd({av({2, 1})});
        CHECK(stats.sd == 0.0);
    }
    SUBCASE("uniform 4-class population with generous target: mean near 4") {
        PopulationSpec spec = PopulationSpec::uniform(4, 2000, 77);
        SampledPopulation sampled = sample_population(spec);
        double full_cov;
        {
            std::map<int, int64_t> by_class;
            for (int cls : sampled.classes) ++by_class[cls];
            std::vector<int64_t> counts;
            for (const auto& [cls, count] : by_class) counts.push_back(count);
            full_cov = estimate_coverage(AbundanceVector(counts)).value;
        }
        auto samples = rarefy_to_coverage(sampled.classes, RarefactionPlan{full_cov, 20, 3});
        RarefiedHsd stats = rarefied_hsd(samples);
        CHECK(stats.mean == doctest::Approx(4.0).epsilon(0.05));
    }
}

TEST_CASE("rarefaction ordering fidelity") {
    // true HSD 10 vs 100; equal-coverage comparison orders them correctly
    // in >= 95 of 100 seeded trials
    int correct = 0;
    for (int seed = 0; seed < 100; ++seed) {
        SampledPopulation low = sample_population(PopulationSpec::uniform(10, 300, 40000 + seed));
        SampledPopulation high =
            sample_population(PopulationSpec::uniform(100, 300, 50000 + seed));
        auto coverage_of = [](const std::vector<int>& classes) {
            std::map<int, int64_t> by_class;
            for (int cls : classes) ++by_class[cls];
            std::vector<int64_t> counts;
            for (const auto& [cls, count] : by_class) counts.push_back(count);
            return estimate_coverage(AbundanceVector(counts)).value;
        };
        double target = std::min(coverage_of(low.classes), coverage_of(high.classes));
        if (target <= 0.0) continue;
        RarefactionPlan plan{target, 10, static_cast<uint64_t>(seed)};
        double hsd_low = rarefied_hsd(rarefy_to_coverage(low.classes, plan)).mean;
        double hsd_high = rarefied_hsd(rarefy_to_coverage(high.classes, plan)).mean;
        if (hsd_high > hsd_low) ++correct;
    }
    CHECK(correct >= 95);
}

TEST_CASE("jsd analytic fixtures") {
    CHECK(jensen_shannon_divergence({0.3, 0.7}, {0.3, 0.7}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(jensen_shannon_divergence({1.0, 0.0}, {0.0, 1.0}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // p=(1,0), q=(.5,.5): 0.5*ln(4/3) + 0.25*ln(2/3) + 0.25*ln(2) = 0.215762...
    double expected = 0.5 * std::log(1.0 / 0.75) +
                      0.5 * (0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(0.5 / 0.25));
    CHECK(expected == doctest::Approx(0.215762).epsilon(1e-5));
    CHECK(jensen_shannon_divergence({1.0, 0.0}, {0.5, 0.5}) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("jsd validates inputs") {
    CHECK_THROWS_AS(jensen_shannon_divergence({0.5, 0.6}, {0.5, 0.5}), EpidivError);
    CHECK_THROWS_AS(jensen_shannon_divergence({1.0}, {0.5, 0.5}), EpidivError);
    CHECK_THROWS_AS(jensen_shannon_divergence({}, {}), EpidivError);
}

TEST_CASE("jsd metric properties") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        size_t s = 2 + rng.next_below(20);
        std::vector<double> p(s), q(s);
        double sp = 0.0, sq = 0.0;
        for (size_t i = 0; i < s; ++i) {
            p[i] = rng.next_double() + 1e-12;
            q[i] = rng.next_double() + 1e-12;
            sp += p[i];
            sq += q[i];
        }
        for (size_t i = 0; i < s; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        double ab = jensen_shannon_divergence(p, q);
        double ba = jensen_shannon_divergence(q, p);
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= std::log(2.0) + 1e-12);
        CHECK(jensen_shannon_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("bootstrap percentile interval") {
    SUBCASE("constant values") {
        BootstrapInterval ci = bootstrap_ci({7.0, 7.0, 7.0}, 500, 0.95, 3);
        CHECK(ci.low == doctest::Approx(7.0).epsilon(1e-12));
        CHECK(ci.high == doctest::Approx(7.0).epsilon(1e-12));
    }
    SUBCASE("single value degenerates to a point") {
        BootstrapInterval ci = bootstrap_ci({4.25}, 100, 0.95, 1);
        CHECK(ci.low == doctest::Approx(4.25).epsilon(1e-12));
        CHECK(ci.high == doctest::Approx(4.25).epsilon(1e-12));
    }
    SUBCASE("1..100 interval straddles the mean") {
        std::vector<double> values(100);
        for (int i = 0; i < 100; ++i) values[static_cast<size_t>(i)] = i + 1.0;
        BootstrapInterval ci = bootstrap_ci(values, 2000, 0.95, 42);
        CHECK(ci.low < 50.5);
        CHECK(ci.high > 50.5);
        // CLT sanity: half-width near 1.96 * sd/sqrt(n) ~ 5.7
        CHECK(ci.high - ci.low > 5.0);
        CHECK(ci.high - ci.low < 15.0);
    }
}

TEST_CASE("diversity report assembly") {
    SUBCASE("empty cell") {
        DiversityReport report =
            build_diversity_report("g", "t", GenerationSetting::IFT, {}, ReportOptions{});
        CHECK(report.n == 0);
        CHECK(report.hsd == 0.0);
        REQUIRE(report.flags.size() == 1);
        CHECK(report.flags[0] == "empty");
    }
    SUBCASE("rarefied report keeps the point inside the interval") {
        std::vector<int> seq = sequence_of({30, 20, 10, 5, 2, 1, 1});
        double cov = estimate_coverage(av({30, 20, 10, 5, 2, 1, 1})).value;
        RarefactionPlan plan{cov * 0.9, 50, 7};
        ReportOptions options;
        options.plan = &plan;
        options.bootstrap_replicates = 400;
        DiversityReport report =
            build_diversity_report("g", "t", GenerationSetting::IFT, seq, options);
        REQUIRE(report.ci_low.has_value());
        REQUIRE(report.ci_high.has_value());
        CHECK(*report.ci_low <= report.hsd + 1e-9);
        CHECK(*report.ci_high >= report.hsd - 1e-9);
        CHECK(report.rarefied_to_coverage == doctest::Approx(cov * 0.9));
    }
}
