#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "epidiv/backends.hpp"
#include "epidiv/synthetic.hpp"

namespace epidiv {

// Call accounting shared by the mock backends; tests assert on these to
// verify caching, idempotent reruns, and the admission cap.
struct MockStats {
    std::atomic<int64_t> generation_calls{0};
    std::atomic<int64_t> embedding_calls{0};
    std::atomic<int64_t> embedding_texts{0};
    std::atomic<int64_t> entailment_calls{0};
    std::atomic<int> concurrent_now{0};
    std::atomic<int> concurrent_peak{0};

    void enter();
    void leave();
    void reset();
};

// Process-wide stats shared by every factory-built mock backend, so tests
// can assert that a rerun of completed work performs zero service calls.
std::shared_ptr<MockStats> global_mock_stats();

// Behavioural knobs for the deterministic in-process mocks. Same-tag texts
// embed within cosine >= 0.9 of each other, cross-tag pairs at <= 0.3, and
// entailment is mutual iff the hidden [[k<int>]] tags match. Everything is a
// pure function of (input, seed).
struct MockSpec {
    PopulationSpec population;      // class distribution behind generated text
    int sentences_per_response = 6;
    int embedding_dim = 384;        // >= 160; tag axes take dim - 128
    // Artificial per-call latency, for exercising the admission cap in tests.
    int latency_ms = 0;

    std::shared_ptr<MockStats> stats = std::make_shared<MockStats>();
};

struct MockSuite {
    std::shared_ptr<GenerationBackend> generation;
    std::shared_ptr<EmbeddingBackend> embedding;
    std::shared_ptr<EntailmentBackend> entailment;
    std::shared_ptr<MockStats> stats;
};

// The three service mocks driven by one spec.
MockSuite mock_suite(const MockSpec& spec);

// Identity decomposer: extracts the content block from a decomposition
// prompt and returns its sentences one per line, preserving hidden tags.
std::shared_ptr<GenerationBackend> make_mock_decomposer(std::shared_ptr<MockStats> stats = nullptr);

// Admission-capped wrappers around the mocks, mirroring the HTTP clients'
// concurrency behaviour so the cap invariant is testable offline.
std::shared_ptr<GenerationBackend> with_admission_cap(std::shared_ptr<GenerationBackend> inner,
                                                      int max_in_flight);

// Builds backends from a descriptor, dispatching mock:// endpoints to the
// in-process mocks and http(s):// endpoints to the wire clients.
std::shared_ptr<GenerationBackend> make_generation_backend(const BackendDescriptor& descriptor);
std::shared_ptr<EmbeddingBackend> make_embedding_backend(const BackendDescriptor& descriptor);
std::shared_ptr<EntailmentBackend> make_entailment_backend(const BackendDescriptor& descriptor);

// Parses a mock:// endpoint URL into a MockSpec (see README for the syntax:
// mock://population?family=uniform&classes=6&sentences=8&dim=384).
MockSpec mock_spec_from_url(const std::string& url, uint64_t seed);

bool is_mock_endpoint(const std::string& url);

}  // namespace epidiv
