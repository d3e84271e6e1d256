#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "epidiv/domain.hpp"

namespace epidiv {

// Order of the Hill diversity family. l = 0 is the Shannon point, l = 1 is
// richness, l = -1 is inverse Simpson.
struct HillOrder {
    double l = 0.0;
};

struct RarefactionPlan {
    double target_coverage = 1.0;  // in (0, 1]
    int resamples = 100;
    uint64_t seed = 0;
};

// D = (sum_i p_i^(1-l))^(1/l); at l = 0 the analytic limit exp(-sum p ln p).
double hill_diversity(const AbundanceVector& v, HillOrder order);

// Hill diversity at the Shannon point: e raised to the entropy in nats.
double hill_shannon_diversity(const AbundanceVector& v);

struct CoverageEstimate {
    double value = 0.0;
    bool defined = true;  // false when n <= 1
};

// Sample-coverage estimator from singleton/doubleton counts:
//   1 - (f1/n) * ((n-1) f1) / ((n-1) f1 + 2 f2)
CoverageEstimate estimate_coverage(const AbundanceVector& v);

// Coverage-based rarefaction: repeatedly permutes the claim-level class
// sequence, grows a prefix until its estimated coverage reaches the target,
// and emits the prefix's abundance vector. `class_sequence` holds one cluster
// id per claim, in persisted claim order.
std::vector<AbundanceVector> rarefy_to_coverage(const std::vector<int>& class_sequence,
                                                const RarefactionPlan& plan);

struct RarefiedHsd {
    double mean = 0.0;
    double sd = 0.0;  // 0 by convention for a single resample
    std::vector<double> per_resample;
};

RarefiedHsd rarefied_hsd(const std::vector<AbundanceVector>& samples);

// Jensen-Shannon divergence in nats between two distributions over a shared
// class index; bounded by ln 2.
double jensen_shannon_divergence(const std::vector<double>& p, const std::vector<double>& q);

struct BootstrapInterval {
    double low = 0.0;
    double high = 0.0;
};

// Percentile bootstrap of the mean over `values`.
BootstrapInterval bootstrap_ci(const std::vector<double>& values, int replicates = 1000,
                               double level = 0.95, uint64_t seed = 0);

// Assembles a per-cell report; rarefies when `plan` is provided and the cell
// qualifies, attaching a bootstrap interval over the resample HSDs.
struct ReportOptions {
    const RarefactionPlan* plan = nullptr;  // null: no rarefaction
    int bootstrap_replicates = 1000;
    double bootstrap_level = 0.95;
};

DiversityReport build_diversity_report(const std::string& generator_id,
                                       const std::string& topic_id, GenerationSetting setting,
                                       const std::vector<int>& class_sequence,
                                       const ReportOptions& options);

}  // namespace epidiv
