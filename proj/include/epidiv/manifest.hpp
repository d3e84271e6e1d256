#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epidiv/clustering.hpp"
#include "epidiv/corpus.hpp"
#include "epidiv/domain.hpp"
#include "epidiv/jsonl.hpp"
#include "epidiv/retrieval.hpp"
#include "epidiv/synthetic.hpp"

namespace epidiv {

struct GeneratorConfig {
    std::string id;
    BackendDescriptor backend;
    std::vector<GenerationSetting> settings;  // IFT and/or RAG
    // Pass-through metadata for report series (optional).
    std::optional<std::string> family;
    std::optional<std::string> size_label;
    std::optional<std::string> release_date;
};

struct SimulateConfig {
    PopulationSpec population;
    std::string topic_id = "synthetic";
    std::string generator_id = "sim";
};

struct RunManifest {
    std::string run_id = "run";
    uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    std::vector<Topic> topics;
    std::vector<PromptTemplate> templates;
    std::vector<GeneratorConfig> generators;

    BackendDescriptor decomposition_backend;
    BackendDescriptor embedding_backend;
    BackendDescriptor entailment_backend;

    DecompositionPromptId decomposition_prompt = DecompositionPromptId::P3;
    std::filesystem::path prompts_dir = "prompts";
    std::filesystem::path search_dir;      // optional: search baseline input
    std::filesystem::path references_dir;  // optional: representativeness input
    std::optional<std::filesystem::path> abbreviations_file;
    std::optional<std::filesystem::path> social_domains_file;

    int responses_per_cell = 1;
    double sampling_top_p = 0.9;
    double sampling_temperature = 1.0;
    int sampling_max_tokens = 2100;

    ClusterParams cluster;

    int rarefaction_resamples = 100;
    std::optional<double> rarefaction_target;  // default: per-topic minimum coverage

    int bootstrap_replicates = 1000;
    double bootstrap_level = 0.95;

    RetrievalConfig retrieval;
    bool similarity_floor_auto = false;

    GenerationSetting compare_setting = GenerationSetting::IFT;
    int represent_top_k = 6;
    std::string generation_language = "en";

    std::optional<SimulateConfig> simulate;

    int workers = 4;

    // Derived paths under output_dir / run_id.
    std::filesystem::path run_dir() const { return output_dir / run_id; }
    std::filesystem::path responses_path() const { return run_dir() / "responses.jsonl"; }
    std::filesystem::path claims_path() const { return run_dir() / "claims.jsonl"; }
    std::filesystem::path clusters_path() const { return run_dir() / "clusters.jsonl"; }
    std::filesystem::path cluster_meta_path() const { return run_dir() / "cluster_meta.json"; }
    std::filesystem::path diversity_path() const { return run_dir() / "diversity.jsonl"; }
    std::filesystem::path failures_path() const { return run_dir() / "failures.jsonl"; }
    std::filesystem::path pages_path() const { return run_dir() / "pages.jsonl"; }
    std::filesystem::path paragraphs_path() const { return run_dir() / "paragraphs.jsonl"; }
    std::filesystem::path rag_contexts_path() const { return run_dir() / "rag_contexts.jsonl"; }
    std::filesystem::path jsd_matrix_path() const { return run_dir() / "jsd_matrix.json"; }
    std::filesystem::path matches_path() const { return run_dir() / "matches.jsonl"; }
    std::filesystem::path representativeness_path() const {
        return run_dir() / "representativeness.jsonl";
    }
    std::filesystem::path truth_path() const { return run_dir() / "truth.json"; }
    std::filesystem::path run_meta_path() const { return run_dir() / "run_meta.json"; }
    std::filesystem::path report_dir() const { return run_dir() / "report"; }
    std::filesystem::path cluster_state_dir() const { return run_dir() / "cluster_state"; }
};

// Parses a manifest JSON document. Relative paths resolve against the
// manifest file's directory.
RunManifest load_manifest(const std::filesystem::path& path);
RunManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir);

// Semantic manifest content (no output paths) used for the config hash.
Json manifest_to_json(const RunManifest& manifest);
std::string manifest_config_hash(const RunManifest& manifest);

// Structural validation; an empty result means the manifest satisfies every
// invariant. Violations carry machine-readable codes.
std::vector<Violation> validate_run_manifest(const RunManifest& manifest);

}  // namespace epidiv
