#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epidiv/domain.hpp"

namespace epidiv {

// Synthetic claim populations with known class distributions. These back the
// estimator calibration tests: the sampled claims carry [[k<class>]] tags so
// the full pipeline can run against them with mock backends.
struct PopulationSpec {
    enum class Family { Uniform, Zipf, Geometric, Explicit };

    Family family = Family::Uniform;
    int num_classes = 1;         // S (Uniform/Zipf/Geometric)
    double exponent = 1.0;       // Zipf s
    double ratio = 0.5;          // Geometric r
    std::vector<double> probs;   // Explicit
    int64_t n_samples = 0;
    uint64_t seed = 0;
    // Rendered claim template; {class} and {n} are substituted per draw.
    std::string tag_syntax = "Observation {n} concerns the subject tagged [[k{class}]].";

    static PopulationSpec uniform(int s, int64_t n, uint64_t seed);
    static PopulationSpec zipf(int s, double exponent, int64_t n, uint64_t seed);
    static PopulationSpec geometric(int s, double ratio, int64_t n, uint64_t seed);
    static PopulationSpec explicit_probs(std::vector<double> probs, int64_t n, uint64_t seed);
};

// Exact class distribution of a spec; probabilities sum to 1.
std::vector<double> population_distribution(const PopulationSpec& spec);

struct SampledPopulation {
    std::vector<std::string> claims;  // rendered texts with embedded tags
    std::vector<int> classes;         // ground-truth class per claim
    std::vector<double> distribution;
};

SampledPopulation sample_population(const PopulationSpec& spec);

// exp of the exact Shannon entropy in nats.
double true_hsd(const std::vector<double>& distribution);

// Probability mass of the observed classes.
double true_coverage(const std::vector<double>& distribution, const std::vector<int>& observed);

// Hidden class tag embedded in mock claim texts, e.g. "[[k12]]" -> 12.
std::optional<int> extract_class_tag(const std::string& text);

// Renders tag_syntax with {class} and {n} substituted.
std::string render_tagged_claim(const std::string& tag_syntax, int class_index, int64_t draw_index);

}  // namespace epidiv
