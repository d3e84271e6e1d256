#include <algorithm>
#include <chrono>
#include <thread>

#include "epidiv/executor.hpp"
#include "epidiv/mock_backends.hpp"
#include "epidiv/rng.hpp"
#include "epidiv/sentences.hpp"

namespace epidiv {

void MockStats::enter() {
    int now = concurrent_now.fetch_add(1) + 1;
    int peak = concurrent_peak.load();
    while (now > peak && !concurrent_peak.compare_exchange_weak(peak, now)) {
    }
}

void MockStats::leave() {
    concurrent_now.fetch_sub(1);
}

void MockStats::reset() {
    generation_calls = 0;
    embedding_calls = 0;
    embedding_texts = 0;
    entailment_calls = 0;
    concurrent_now = 0;
    concurrent_peak = 0;
}

std::shared_ptr<MockStats> global_mock_stats() {
    static std::shared_ptr<MockStats> stats = std::make_shared<MockStats>();
    return stats;
}

namespace {

// Noise layout: the last 128 axes carry two small text-hash components, the
// rest are one-hot tag axes. Same-tag pairs land at cosine >= 1/1.08 ~ 0.926
// and cross-tag pairs at <= 0.08/1.08 ~ 0.074.
constexpr int kNoiseAxes = 128;
constexpr double kNoiseAmplitude = 0.2;

struct ScopedCall {
    explicit ScopedCall(MockStats* stats, int latency_ms) : stats_(stats) {
        if (stats_ != nullptr) stats_->enter();
        if (latency_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms));
    }
    ~ScopedCall() {
        if (stats_ != nullptr) stats_->leave();
    }
    MockStats* stats_;
};

class MockGenerationBackend : public GenerationBackend {
public:
    explicit MockGenerationBackend(MockSpec spec)
        : spec_(std::move(spec)), distribution_(population_distribution(spec_.population)) {
        cdf_.resize(distribution_.size());
        double acc = 0.0;
        for (size_t i = 0; i < distribution_.size(); ++i) {
            acc += distribution_[i];
            cdf_[i] = acc;
        }
        cdf_.back() = 1.0;
    }

    std::string generate(const GenerationRequest& request) override {
        ScopedCall call(spec_.stats.get(), spec_.latency_ms);
        spec_.stats->generation_calls.fetch_add(1);
        Rng rng(derive_seed(request.seed, "mock-generation", request.prompt));
        std::string text;
        int64_t char_budget = static_cast<int64_t>(request.max_tokens) * 4;
        for (int i = 0; i < spec_.sentences_per_response; ++i) {
            double u = rng.next_double();
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            int cls = static_cast<int>(
                std::min<size_t>(static_cast<size_t>(it - cdf_.begin()), cdf_.size() - 1));
            int64_t salt = static_cast<int64_t>(rng.next_below(1000000000));
            std::string sentence =
                render_tagged_claim(spec_.population.tag_syntax, cls, salt);
            if (static_cast<int64_t>(text.size() + sentence.size()) + 1 > char_budget) break;
            if (!text.empty()) text += ' ';
            text += sentence;
        }
        return text;
    }

private:
    MockSpec spec_;
    std::vector<double> distribution_;
    std::vector<double> cdf_;
};

class MockEmbeddingBackend : public EmbeddingBackend {
public:
    explicit MockEmbeddingBackend(MockSpec spec) : spec_(std::move(spec)) {
        if (spec_.embedding_dim < kNoiseAxes + 32) {
            throw EpidivError(ErrorCode::ConfigError, "mock embedding dim must be >= 160");
        }
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        ScopedCall call(spec_.stats.get(), spec_.latency_ms);
        spec_.stats->embedding_calls.fetch_add(1);
        spec_.stats->embedding_texts.fetch_add(static_cast<int64_t>(texts.size()));
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        int tag_axes = spec_.embedding_dim - kNoiseAxes;
        for (const auto& text : texts) {
            EmbeddingVector v;
            v.values.assign(static_cast<size_t>(spec_.embedding_dim), 0.0);
            if (auto tag = extract_class_tag(text)) {
                v.values[static_cast<size_t>(*tag % tag_axes)] = 1.0;
            }
            uint64_t h = fnv1a64(text);
            size_t axis1 = static_cast<size_t>(tag_axes) + static_cast<size_t>(h % 64);
            size_t axis2 = static_cast<size_t>(tag_axes) + 64 + static_cast<size_t>((h >> 8) % 64);
            v.values[axis1] += kNoiseAmplitude;
            v.values[axis2] += kNoiseAmplitude;
            out.push_back(std::move(v));
        }
        return out;
    }

private:
    MockSpec spec_;
};

class MockEntailmentBackend : public EntailmentBackend {
public:
    explicit MockEntailmentBackend(MockSpec spec) : spec_(std::move(spec)) {}

    EntailmentJudgment entails(const std::string& premise, const std::string& hypothesis) override {
        ScopedCall call(spec_.stats.get(), spec_.latency_ms);
        spec_.stats->entailment_calls.fetch_add(1);
        auto tag_p = extract_class_tag(premise);
        auto tag_h = extract_class_tag(hypothesis);
        if (tag_p.has_value() && tag_h.has_value() && *tag_p == *tag_h) {
            return EntailmentJudgment::from_probs(0.9, 0.08, 0.02);
        }
        return EntailmentJudgment::from_probs(0.1, 0.85, 0.05);
    }

private:
    MockSpec spec_;
};

// Identity decomposer: echoes the sentences of the content block embedded in
// a decomposition prompt, one per line.
class MockDecomposerBackend : public GenerationBackend {
public:
    explicit MockDecomposerBackend(std::shared_ptr<MockStats> stats) : stats_(std::move(stats)) {}

    std::string generate(const GenerationRequest& request) override {
        ScopedCall call(stats_.get(), 0);
        if (stats_ != nullptr) stats_->generation_calls.fetch_add(1);
        std::string content = extract_content(request.prompt);
        std::vector<std::string> sentences = split_sentences(content);
        if (sentences.empty()) return "EMPTY";
        std::string out;
        for (const auto& s : sentences) {
            out += s;
            out += '\n';
        }
        return out;
    }

private:
    static std::string extract_content(const std::string& prompt) {
        static const std::string marker = "Here is the text:";
        size_t pos = prompt.rfind(marker);
        if (pos != std::string::npos) {
            return prompt.substr(pos + marker.size());
        }
        size_t blank = prompt.find("\n\n");
        if (blank != std::string::npos) {
            return prompt.substr(blank + 2);
        }
        return prompt;
    }

    std::shared_ptr<MockStats> stats_;
};

template <typename Interface>
class CappedBackend;

template <>
class CappedBackend<GenerationBackend> : public GenerationBackend {
public:
    CappedBackend(std::shared_ptr<GenerationBackend> inner, int cap)
        : inner_(std::move(inner)), admission_(std::max(1, cap)) {}
    std::string generate(const GenerationRequest& request) override {
        SemaphoreGuard guard(admission_);
        return inner_->generate(request);
    }

private:
    std::shared_ptr<GenerationBackend> inner_;
    Semaphore admission_;
};

template <>
class CappedBackend<EmbeddingBackend> : public EmbeddingBackend {
public:
    CappedBackend(std::shared_ptr<EmbeddingBackend> inner, int cap)
        : inner_(std::move(inner)), admission_(std::max(1, cap)) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        SemaphoreGuard guard(admission_);
        return inner_->embed(texts);
    }

private:
    std::shared_ptr<EmbeddingBackend> inner_;
    Semaphore admission_;
};

template <>
class CappedBackend<EntailmentBackend> : public EntailmentBackend {
public:
    CappedBackend(std::shared_ptr<EntailmentBackend> inner, int cap)
        : inner_(std::move(inner)), admission_(std::max(1, cap)) {}
    EntailmentJudgment entails(const std::string& premise, const std::string& hypothesis) override {
        SemaphoreGuard guard(admission_);
        return inner_->entails(premise, hypothesis);
    }

private:
    std::shared_ptr<EntailmentBackend> inner_;
    Semaphore admission_;
};

std::map<std::string, std::string> parse_query(const std::string& url) {
    std::map<std::string, std::string> params;
    size_t q = url.find('?');
    if (q == std::string::npos) return params;
    std::string query = url.substr(q + 1);
    size_t start = 0;
    while (start < query.size()) {
        size_t end = query.find('&', start);
        if (end == std::string::npos) end = query.size();
        std::string pair = query.substr(start, end - start);
        size_t eq = pair.find('=');
        if (eq != std::string::npos) {
            params[pair.substr(0, eq)] = pair.substr(eq + 1);
        }
        start = end + 1;
    }
    return params;
}

}  // namespace

bool is_mock_endpoint(const std::string& url) {
    return url.rfind("mock://", 0) == 0;
}

MockSpec mock_spec_from_url(const std::string& url, uint64_t seed) {
    MockSpec spec;
    spec.population.seed = seed;
    auto params = parse_query(url);
    std::string family = params.count("family") ? params["family"] : "uniform";
    if (params.count("classes")) spec.population.num_classes = std::stoi(params["classes"]);
    if (family == "uniform") {
        spec.population.family = PopulationSpec::Family::Uniform;
    } else if (family == "zipf") {
        spec.population.family = PopulationSpec::Family::Zipf;
        if (params.count("exponent")) spec.population.exponent = std::stod(params["exponent"]);
    } else if (family == "geometric") {
        spec.population.family = PopulationSpec::Family::Geometric;
        if (params.count("ratio")) spec.population.ratio = std::stod(params["ratio"]);
    } else if (family == "explicit") {
        spec.population.family = PopulationSpec::Family::Explicit;
        std::string probs = params.count("probs") ? params["probs"] : "";
        size_t start = 0;
        while (start < probs.size()) {
            size_t end = probs.find(',', start);
            if (end == std::string::npos) end = probs.size();
            spec.population.probs.push_back(std::stod(probs.substr(start, end - start)));
            start = end + 1;
        }
        spec.population.num_classes = static_cast<int>(spec.population.probs.size());
    } else {
        throw EpidivError(ErrorCode::ConfigError, "unknown mock population family: " + family);
    }
    if (params.count("sentences")) spec.sentences_per_response = std::stoi(params["sentences"]);
    if (params.count("dim")) spec.embedding_dim = std::stoi(params["dim"]);
    if (params.count("latency_ms")) spec.latency_ms = std::stoi(params["latency_ms"]);
    return spec;
}

MockSuite mock_suite(const MockSpec& spec) {
    MockSuite suite;
    suite.stats = spec.stats;
    suite.generation = std::make_shared<MockGenerationBackend>(spec);
    suite.embedding = std::make_shared<MockEmbeddingBackend>(spec);
    suite.entailment = std::make_shared<MockEntailmentBackend>(spec);
    return suite;
}

std::shared_ptr<GenerationBackend> make_mock_decomposer(std::shared_ptr<MockStats> stats) {
    return std::make_shared<MockDecomposerBackend>(std::move(stats));
}

std::shared_ptr<GenerationBackend> with_admission_cap(std::shared_ptr<GenerationBackend> inner,
                                                      int max_in_flight) {
    return std::make_shared<CappedBackend<GenerationBackend>>(std::move(inner), max_in_flight);
}

std::shared_ptr<GenerationBackend> make_generation_backend(const BackendDescriptor& descriptor) {
    if (!is_mock_endpoint(descriptor.endpoint_url)) {
        return make_http_generation_backend(descriptor);
    }
    if (descriptor.endpoint_url.rfind("mock://decomposer", 0) == 0) {
        return make_mock_decomposer(global_mock_stats());
    }
    MockSpec spec = mock_spec_from_url(descriptor.endpoint_url, 0);
    spec.stats = global_mock_stats();
    return std::make_shared<CappedBackend<GenerationBackend>>(
        std::make_shared<MockGenerationBackend>(spec), descriptor.max_in_flight);
}

std::shared_ptr<EmbeddingBackend> make_embedding_backend(const BackendDescriptor& descriptor) {
    if (!is_mock_endpoint(descriptor.endpoint_url)) {
        return make_http_embedding_backend(descriptor);
    }
    MockSpec spec = mock_spec_from_url(descriptor.endpoint_url, 0);
    spec.stats = global_mock_stats();
    return std::make_shared<CappedBackend<EmbeddingBackend>>(
        std::make_shared<MockEmbeddingBackend>(spec), descriptor.max_in_flight);
}

std::shared_ptr<EntailmentBackend> make_entailment_backend(const BackendDescriptor& descriptor) {
    std::shared_ptr<EntailmentBackend> inner;
    if (is_mock_endpoint(descriptor.endpoint_url)) {
        MockSpec spec = mock_spec_from_url(descriptor.endpoint_url, 0);
        spec.stats = global_mock_stats();
        inner = std::make_shared<CappedBackend<EntailmentBackend>>(
            std::make_shared<MockEntailmentBackend>(spec), descriptor.max_in_flight);
    } else {
        inner = make_http_entailment_backend(descriptor);
    }
    return std::make_shared<CachedEntailmentBackend>(std::move(inner));
}

}  // namespace epidiv
