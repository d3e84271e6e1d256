#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "epidiv/errors.hpp"

namespace epidiv {

struct Topic {
    std::string id;
    std::string label;
    std::optional<std::string> country;   // ISO-3166 alpha-2 or "general"
    std::optional<std::string> language;  // BCP-47, for representativeness references
};

// A prompt template carrying exactly one `{topic}` placeholder.
struct PromptTemplate {
    std::string id;
    std::string text;
};

enum class GenerationSetting { IFT, RAG, SEARCH };

std::string to_string(GenerationSetting setting);
GenerationSetting setting_from_string(const std::string& name);

struct ResponseRef {
    std::string generator_id;
    std::optional<std::string> prompt_id;  // absent for SEARCH records
    GenerationSetting setting = GenerationSetting::IFT;
    uint64_t seed = 0;

    bool operator==(const ResponseRef&) const = default;
};

struct ResponseRecord {
    std::string generator_id;
    std::string topic_id;
    std::optional<std::string> prompt_id;
    GenerationSetting setting = GenerationSetting::IFT;
    std::string text;
    std::vector<std::string> context_ids;  // empty unless RAG
    uint64_t seed = 0;
    std::string created_at;  // ISO-8601 UTC

    ResponseRef ref() const { return {generator_id, prompt_id, setting, seed}; }
    // Uniqueness key within a run.
    std::string cell_key() const;

    bool operator==(const ResponseRecord&) const = default;
};

struct Claim {
    std::string id;
    std::string topic_id;
    ResponseRef response_ref;
    int chunk_index = 0;
    std::string text;

    bool operator==(const Claim&) const = default;
};

// Stable claim id from its provenance coordinates.
std::string make_claim_id(const std::string& topic_id, const ResponseRef& ref,
                          int chunk_index, int line_index);

// Partition of claims into meaning classes with abundance counts.
struct MeaningClassTable {
    std::unordered_map<std::string, int> cluster_of;  // claim id -> cluster id
    std::map<int, int64_t> counts;                    // cluster id -> x_i
    int64_t n = 0;

    int num_classes() const { return static_cast<int>(counts.size()); }
};

// Ordered list of class counts; the sole input to the diversity statistics.
class AbundanceVector {
public:
    AbundanceVector() = default;
    explicit AbundanceVector(std::vector<int64_t> counts);

    static AbundanceVector from_table(const MeaningClassTable& table);

    const std::vector<int64_t>& counts() const { return counts_; }
    bool empty() const { return counts_.empty(); }
    size_t num_classes() const { return counts_.size(); }
    int64_t n() const { return n_; }
    int64_t f1() const;  // singleton classes
    int64_t f2() const;  // doubleton classes
    std::vector<double> probabilities() const;

private:
    std::vector<int64_t> counts_;
    int64_t n_ = 0;
};

struct DiversityReport {
    std::string generator_id;
    std::string topic_id;
    GenerationSetting setting = GenerationSetting::IFT;
    int64_t n = 0;
    int num_classes = 0;
    int64_t f1 = 0;
    int64_t f2 = 0;
    double coverage = 0.0;
    double hsd = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::optional<double> rarefied_to_coverage;
    std::vector<std::string> flags;  // e.g. "empty", "undefined_coverage", "not_rarefied"

    bool operator==(const DiversityReport&) const = default;
};

enum class BackendKind { Generation, Embedding, Entailment };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

struct RetryPolicy {
    int max_attempts = 5;
    int base_backoff_ms = 500;

    bool operator==(const RetryPolicy&) const = default;
};

struct BackendDescriptor {
    BackendKind kind = BackendKind::Generation;
    std::string endpoint_url;
    std::string model_name;
    std::string credential_env;  // name of env var holding the secret
    int max_in_flight = 8;
    RetryPolicy retry;
    int timeout_ms = 60000;
    bool multilingual = false;  // embedding backends only

    bool operator==(const BackendDescriptor&) const = default;
};

// Substitutes the topic label into the single `{topic}` placeholder.
// Throws MissingPlaceholder unless the token occurs exactly once, and
// MissingLabel for an empty label.
std::string render_prompt(const PromptTemplate& tmpl, const Topic& topic);

// Occurrences of the `{topic}` placeholder in a template.
int count_topic_placeholders(const std::string& text);

struct Violation {
    std::string code;     // machine-readable, e.g. "DuplicateTopicId"
    std::string context;  // field path, e.g. "topics[2].id"
    std::string message;
};

}  // namespace epidiv
