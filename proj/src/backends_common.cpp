#include "epidiv/backends.hpp"

#include <cmath>
#include <future>
#include <mutex>
#include <unordered_map>

namespace epidiv {

void EmbeddingVector::l2_normalize() {
    double norm_sq = 0.0;
    for (double v : values) norm_sq += v * v;
    if (norm_sq <= 0.0) return;
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : values) v *= inv;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim() || a.values.empty()) {
        throw EpidivError(ErrorCode::DimMismatch, "cosine over mismatched dims");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

std::string to_string(EntailmentLabel label) {
    switch (label) {
        case EntailmentLabel::Entailment: return "entailment";
        case EntailmentLabel::Neutral: return "neutral";
        case EntailmentLabel::Contradiction: return "contradiction";
    }
    return "neutral";
}

EntailmentJudgment EntailmentJudgment::from_probs(double entailment, double neutral,
                                                  double contradiction) {
    double sum = entailment + neutral + contradiction;
    if (sum <= 0.0 || std::abs(sum - 1.0) > 1e-6) {
        throw EpidivError(ErrorCode::ResponseMalformed, "entailment probabilities must sum to 1");
    }
    EntailmentJudgment judgment;
    judgment.prob = {{"entailment", entailment},
                     {"neutral", neutral},
                     {"contradiction", contradiction}};
    // argmax label; ties break toward neutral
    judgment.label = EntailmentLabel::Neutral;
    double best = neutral;
    if (entailment > best) {
        best = entailment;
        judgment.label = EntailmentLabel::Entailment;
    }
    if (contradiction > best) {
        judgment.label = EntailmentLabel::Contradiction;
    }
    return judgment;
}

double EntailmentJudgment::prob_of(EntailmentLabel label) const {
    auto it = prob.find(to_string(label));
    return it == prob.end() ? 0.0 : it->second;
}

std::vector<EmbeddingVector> embed_batch(EmbeddingBackend& backend,
                                         const std::vector<std::string>& texts,
                                         size_t max_batch) {
    if (texts.empty()) {
        throw EpidivError(ErrorCode::EmptyBatch, "embed_batch on empty text list");
    }
    if (max_batch == 0) max_batch = 1;
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (size_t start = 0; start < texts.size(); start += max_batch) {
        size_t end = std::min(texts.size(), start + max_batch);
        std::vector<std::string> chunk(texts.begin() + static_cast<ptrdiff_t>(start),
                                       texts.begin() + static_cast<ptrdiff_t>(end));
        std::vector<EmbeddingVector> vectors = backend.embed(chunk);
        if (vectors.size() != chunk.size()) {
            throw EpidivError(ErrorCode::ResponseMalformed,
                              "embedding service returned wrong batch size");
        }
        for (auto& v : vectors) {
            v.l2_normalize();
            out.push_back(std::move(v));
        }
    }
    size_t dim = out.front().dim();
    for (const auto& v : out) {
        if (v.dim() != dim) {
            throw EpidivError(ErrorCode::DimMismatch,
                              "embedding service returned inconsistent dims within one run");
        }
    }
    return out;
}

struct CachedEntailmentBackend::Impl {
    std::shared_ptr<EntailmentBackend> upstream;
    std::mutex mutex;
    // shared_future so concurrent callers of an in-flight pair all wait on
    // the single upstream call instead of issuing their own.
    std::unordered_map<std::string, std::shared_future<EntailmentJudgment>> cache;
    std::atomic<int64_t> upstream_calls{0};
};

CachedEntailmentBackend::CachedEntailmentBackend(std::shared_ptr<EntailmentBackend> upstream)
    : impl_(std::make_unique<Impl>()) {
    impl_->upstream = std::move(upstream);
}

CachedEntailmentBackend::~CachedEntailmentBackend() = default;

EntailmentJudgment CachedEntailmentBackend::entails(const std::string& premise,
                                                    const std::string& hypothesis) {
    std::string key;
    key.reserve(premise.size() + hypothesis.size() + 1);
    key += premise;
    key += '\x1f';
    key += hypothesis;

    std::shared_future<EntailmentJudgment> future;
    bool owner = false;
    std::promise<EntailmentJudgment> promise;
    {
        std::lock_guard<std::mutex> lock(impl_->mutex);
        auto it = impl_->cache.find(key);
        if (it != impl_->cache.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            impl_->cache.emplace(key, future);
            owner = true;
        }
    }
    if (owner) {
        try {
            impl_->upstream_calls.fetch_add(1);
            promise.set_value(impl_->upstream->entails(premise, hypothesis));
        } catch (...) {
            {
                // Failed probes must not be cached as poison.
                std::lock_guard<std::mutex> lock(impl_->mutex);
                impl_->cache.erase(key);
            }
            promise.set_exception(std::current_exception());
        }
    }
    return future.get();
}

int64_t CachedEntailmentBackend::upstream_calls() const {
    return impl_->upstream_calls.load();
}

}  // namespace epidiv
