#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "epidiv/domain.hpp"

namespace epidiv {

struct GenerationRequest {
    std::string prompt;
    double top_p = 0.9;
    double temperature = 1.0;
    int max_tokens = 2100;
    uint64_t seed = 0;
};

struct EmbeddingVector {
    std::vector<double> values;

    size_t dim() const { return values.size(); }
    void l2_normalize();
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EntailmentLabel { Entailment, Neutral, Contradiction };

std::string to_string(EntailmentLabel label);

struct EntailmentJudgment {
    EntailmentLabel label = EntailmentLabel::Neutral;
    std::map<std::string, double> prob;  // label name -> probability

    // Enforces prob-sum and argmax invariants (ties resolve to neutral).
    static EntailmentJudgment from_probs(double entailment, double neutral, double contradiction);

    double prob_of(EntailmentLabel label) const;
    bool is_entailment() const { return label == EntailmentLabel::Entailment; }
};

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string generate(const GenerationRequest& request) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    // Raw service call for one batch; the public embed_batch wrapper below
    // handles normalization, chunking, and dim checks.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

class EntailmentBackend {
public:
    virtual ~EntailmentBackend() = default;
    virtual EntailmentJudgment entails(const std::string& premise, const std::string& hypothesis) = 0;
};

// L2-normalized embeddings in input order. Batches larger than max_batch are
// split transparently; empty input is an EmptyBatch error and inconsistent
// service dims raise DimMismatch.
std::vector<EmbeddingVector> embed_batch(EmbeddingBackend& backend,
                                         const std::vector<std::string>& texts,
                                         size_t max_batch = 64);

// Per-run entailment cache keyed on the exact (premise, hypothesis) strings.
// A repeated pair performs exactly one upstream call, even under concurrency.
class CachedEntailmentBackend : public EntailmentBackend {
public:
    explicit CachedEntailmentBackend(std::shared_ptr<EntailmentBackend> upstream);
    ~CachedEntailmentBackend() override;

    EntailmentJudgment entails(const std::string& premise, const std::string& hypothesis) override;

    int64_t upstream_calls() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// HTTP(S) clients speaking the wire protocols described in the README:
// generation is OpenAI-compatible chat completions; embedding and entailment
// are plain JSON POST endpoints. Every client enforces the descriptor's
// max_in_flight admission cap and retry policy.
std::shared_ptr<GenerationBackend> make_http_generation_backend(const BackendDescriptor& descriptor);
std::shared_ptr<EmbeddingBackend> make_http_embedding_backend(const BackendDescriptor& descriptor);
std::shared_ptr<EntailmentBackend> make_http_entailment_backend(const BackendDescriptor& descriptor);

}  // namespace epidiv
