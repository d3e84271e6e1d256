#include "epidiv/domain.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "epidiv/rng.hpp"

namespace epidiv {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::ResponseMalformed: return "ResponseMalformed";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
        case ErrorCode::MissingLabel: return "MissingLabel";
        case ErrorCode::EmptyAbundance: return "EmptyAbundance";
        case ErrorCode::TargetUnreachable: return "TargetUnreachable";
        case ErrorCode::DistributionInvalid: return "DistributionInvalid";
        case ErrorCode::NoParagraphs: return "NoParagraphs";
        case ErrorCode::MetadataMissing: return "MetadataMissing";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::CheckpointMissing: return "CheckpointMissing";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

std::string to_string(GenerationSetting setting) {
    switch (setting) {
        case GenerationSetting::IFT: return "IFT";
        case GenerationSetting::RAG: return "RAG";
        case GenerationSetting::SEARCH: return "SEARCH";
    }
    return "IFT";
}

GenerationSetting setting_from_string(const std::string& name) {
    if (name == "IFT") return GenerationSetting::IFT;
    if (name == "RAG") return GenerationSetting::RAG;
    if (name == "SEARCH") return GenerationSetting::SEARCH;
    throw EpidivError(ErrorCode::ConfigError, "unknown generation setting: " + name);
}

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::Generation: return "generation";
        case BackendKind::Embedding: return "embedding";
        case BackendKind::Entailment: return "entailment";
    }
    return "generation";
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "generation") return BackendKind::Generation;
    if (name == "embedding") return BackendKind::Embedding;
    if (name == "entailment") return BackendKind::Entailment;
    throw EpidivError(ErrorCode::ConfigError, "unknown backend kind: " + name);
}

std::string ResponseRecord::cell_key() const {
    std::string key = generator_id;
    key += '\x1f';
    key += topic_id;
    key += '\x1f';
    key += prompt_id.value_or("");
    key += '\x1f';
    key += to_string(setting);
    key += '\x1f';
    key += std::to_string(seed);
    return key;
}

std::string make_claim_id(const std::string& topic_id, const ResponseRef& ref,
                          int chunk_index, int line_index) {
    std::string key = topic_id;
    key += '\x1f';
    key += ref.generator_id;
    key += '\x1f';
    key += ref.prompt_id.value_or("");
    key += '\x1f';
    key += to_string(ref.setting);
    key += '\x1f';
    key += std::to_string(ref.seed);
    key += '\x1f';
    key += std::to_string(chunk_index);
    key += '\x1f';
    key += std::to_string(line_index);
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
    return std::string(buf);
}

AbundanceVector::AbundanceVector(std::vector<int64_t> counts) : counts_(std::move(counts)) {
    for (int64_t c : counts_) {
        if (c < 1) {
            throw EpidivError(ErrorCode::DistributionInvalid,
                              "abundance counts must be >= 1, got " + std::to_string(c));
        }
    }
    n_ = std::accumulate(counts_.begin(), counts_.end(), int64_t{0});
}

AbundanceVector AbundanceVector::from_table(const MeaningClassTable& table) {
    std::vector<int64_t> counts;
    counts.reserve(table.counts.size());
    for (const auto& [cluster_id, count] : table.counts) {
        counts.push_back(count);
    }
    return AbundanceVector(std::move(counts));
}

int64_t AbundanceVector::f1() const {
    return std::count(counts_.begin(), counts_.end(), int64_t{1});
}

int64_t AbundanceVector::f2() const {
    return std::count(counts_.begin(), counts_.end(), int64_t{2});
}

std::vector<double> AbundanceVector::probabilities() const {
    std::vector<double> probs;
    probs.reserve(counts_.size());
    for (int64_t c : counts_) {
        probs.push_back(static_cast<double>(c) / static_cast<double>(n_));
    }
    return probs;
}

int count_topic_placeholders(const std::string& text) {
    static const std::string token = "{topic}";
    int count = 0;
    size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        ++count;
        pos += token.size();
    }
    return count;
}

std::string render_prompt(const PromptTemplate& tmpl, const Topic& topic) {
    int occurrences = count_topic_placeholders(tmpl.text);
    if (occurrences != 1) {
        throw EpidivError(ErrorCode::MissingPlaceholder,
                          "template '" + tmpl.id + "' must contain {topic} exactly once, found " +
                              std::to_string(occurrences));
    }
    if (topic.label.empty()) {
        throw EpidivError(ErrorCode::MissingLabel, "topic '" + topic.id + "' has an empty label");
    }
    std::string out = tmpl.text;
    size_t pos = out.find("{topic}");
    out.replace(pos, 7, topic.label);
    return out;
}

}  // namespace epidiv
