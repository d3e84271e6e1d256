#include "epidiv/manifest.hpp"

#include <sstream>
#include <unordered_set>

#include "epidiv/jsonl.hpp"
#include "epidiv/mock_backends.hpp"
#include "epidiv/rng.hpp"

namespace epidiv {

namespace {

// One domain per line; blanks and # comments skipped.
std::vector<std::string> load_domain_list(const std::filesystem::path& path) {
    std::vector<std::string> domains;
    std::istringstream stream(read_text_file(path));
    std::string line;
    while (std::getline(stream, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        domains.push_back(line);
    }
    return domains;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& path) {
    if (path.empty() || path.is_absolute()) return path;
    return base / path;
}

PopulationSpec population_from_json(const Json& j) {
    PopulationSpec spec;
    std::string family = j.value("family", std::string{"uniform"});
    if (family == "uniform") {
        spec.family = PopulationSpec::Family::Uniform;
    } else if (family == "zipf") {
        spec.family = PopulationSpec::Family::Zipf;
        spec.exponent = j.value("exponent", 1.0);
    } else if (family == "geometric") {
        spec.family = PopulationSpec::Family::Geometric;
        spec.ratio = j.value("ratio", 0.5);
    } else if (family == "explicit") {
        spec.family = PopulationSpec::Family::Explicit;
        spec.probs = j.value("probs", std::vector<double>{});
    } else {
        throw EpidivError(ErrorCode::ConfigError, "unknown population family: " + family);
    }
    spec.num_classes = j.value("classes", static_cast<int>(spec.probs.size()));
    spec.n_samples = j.value("n_samples", int64_t{0});
    spec.seed = j.value("seed", uint64_t{0});
    if (j.contains("tag_syntax")) spec.tag_syntax = j.at("tag_syntax").get<std::string>();
    return spec;
}

Json population_to_json(const PopulationSpec& spec) {
    Json j;
    switch (spec.family) {
        case PopulationSpec::Family::Uniform: j["family"] = "uniform"; break;
        case PopulationSpec::Family::Zipf:
            j["family"] = "zipf";
            j["exponent"] = spec.exponent;
            break;
        case PopulationSpec::Family::Geometric:
            j["family"] = "geometric";
            j["ratio"] = spec.ratio;
            break;
        case PopulationSpec::Family::Explicit:
            j["family"] = "explicit";
            j["probs"] = spec.probs;
            break;
    }
    j["classes"] = spec.num_classes;
    j["n_samples"] = spec.n_samples;
    j["seed"] = spec.seed;
    j["tag_syntax"] = spec.tag_syntax;
    return j;
}

}  // namespace

RunManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir) {
    RunManifest m;
    m.run_id = j.value("run_id", std::string{"run"});
    m.seed = j.value("seed", uint64_t{0});
    m.output_dir = resolve(base_dir, j.value("output_dir", std::string{"out"}));

    for (const auto& t : j.value("topics", Json::array())) {
        m.topics.push_back(topic_from_json(t));
    }
    for (const auto& t : j.value("templates", Json::array())) {
        m.templates.push_back(template_from_json(t));
    }
    for (const auto& g : j.value("generators", Json::array())) {
        GeneratorConfig gen;
        gen.id = g.value("id", std::string{});
        if (g.contains("backend")) gen.backend = backend_from_json(g.at("backend"));
        for (const auto& s : g.value("settings", Json::array())) {
            gen.settings.push_back(setting_from_string(s.get<std::string>()));
        }
        if (gen.settings.empty()) gen.settings.push_back(GenerationSetting::IFT);
        if (g.contains("family")) gen.family = g.at("family").get<std::string>();
        if (g.contains("size")) gen.size_label = g.at("size").get<std::string>();
        if (g.contains("release_date")) gen.release_date = g.at("release_date").get<std::string>();
        m.generators.push_back(std::move(gen));
    }

    if (j.contains("decomposition_backend")) {
        m.decomposition_backend = backend_from_json(j.at("decomposition_backend"));
    }
    if (j.contains("embedding_backend")) {
        m.embedding_backend = backend_from_json(j.at("embedding_backend"));
    }
    if (j.contains("entailment_backend")) {
        m.entailment_backend = backend_from_json(j.at("entailment_backend"));
    }

    if (j.contains("decomposition_prompt")) {
        m.decomposition_prompt =
            decomposition_prompt_from_string(j.at("decomposition_prompt").get<std::string>());
    }
    m.prompts_dir = resolve(base_dir, j.value("prompts_dir", std::string{"prompts"}));
    if (j.contains("search_dir")) {
        m.search_dir = resolve(base_dir, j.at("search_dir").get<std::string>());
    }
    if (j.contains("references_dir")) {
        m.references_dir = resolve(base_dir, j.at("references_dir").get<std::string>());
    }
    if (j.contains("abbreviations_file")) {
        m.abbreviations_file = resolve(base_dir, j.at("abbreviations_file").get<std::string>());
    }
    if (j.contains("social_domains_file")) {
        m.social_domains_file = resolve(base_dir, j.at("social_domains_file").get<std::string>());
    }

    m.responses_per_cell = j.value("responses_per_cell", 1);
    if (j.contains("sampling")) {
        const Json& s = j.at("sampling");
        m.sampling_top_p = s.value("top_p", 0.9);
        m.sampling_temperature = s.value("temperature", 1.0);
        m.sampling_max_tokens = s.value("max_tokens", 2100);
    }

    if (j.contains("cluster")) {
        const Json& c = j.at("cluster");
        m.cluster.max_retrieval = c.value("max_retrieval", 6);
        m.cluster.split_threshold = c.value("split_threshold", 50);
        m.cluster.dbscan_eps = c.value("dbscan_eps", 0.2);
        m.cluster.dbscan_min_pts = c.value("dbscan_min_pts", 3);
    }

    if (j.contains("rarefaction")) {
        const Json& r = j.at("rarefaction");
        m.rarefaction_resamples = r.value("resamples", 100);
        if (r.contains("target_coverage")) {
            m.rarefaction_target = r.at("target_coverage").get<double>();
        }
    }
    if (j.contains("bootstrap")) {
        const Json& b = j.at("bootstrap");
        m.bootstrap_replicates = b.value("replicates", 1000);
        m.bootstrap_level = b.value("level", 0.95);
    }

    if (j.contains("rag")) {
        const Json& r = j.at("rag");
        m.retrieval.token_budget = r.value("token_budget", 1000);
        m.retrieval.min_paragraph_chars = r.value("min_paragraph_chars", int64_t{100});
        m.retrieval.min_page_chars = r.value("min_page_chars", int64_t{1000});
    }
    if (j.contains("similarity_floor")) {
        if (j.at("similarity_floor").is_string()) {
            m.similarity_floor_auto = j.at("similarity_floor").get<std::string>() == "auto";
        } else {
            m.retrieval.similarity_floor = j.at("similarity_floor").get<double>();
        }
    }
    if (m.social_domains_file.has_value()) {
        m.retrieval.social_domains = load_domain_list(*m.social_domains_file);
    } else {
        m.retrieval.social_domains = RetrievalConfig::default_social_domains();
    }

    if (j.contains("compare")) {
        m.compare_setting =
            setting_from_string(j.at("compare").value("setting", std::string{"IFT"}));
    }
    if (j.contains("represent")) {
        m.represent_top_k = j.at("represent").value("top_k", 6);
    }
    m.generation_language = j.value("generation_language", std::string{"en"});

    if (j.contains("simulate")) {
        SimulateConfig sim;
        sim.population = population_from_json(j.at("simulate"));
        sim.topic_id = j.at("simulate").value("topic_id", std::string{"synthetic"});
        sim.generator_id = j.at("simulate").value("generator_id", std::string{"sim"});
        m.simulate = std::move(sim);
    }

    m.workers = j.value("workers", 4);
    return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
    Json j;
    try {
        j = read_json_file(path);
    } catch (const nlohmann::json::exception& e) {
        throw EpidivError(ErrorCode::ConfigError,
                          "manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    return manifest_from_json(j, path.parent_path());
}

Json manifest_to_json(const RunManifest& m) {
    Json j;
    j["run_id"] = m.run_id;
    j["seed"] = m.seed;
    Json topics = Json::array();
    for (const auto& t : m.topics) topics.push_back(to_json(t));
    j["topics"] = topics;
    Json templates = Json::array();
    for (const auto& t : m.templates) templates.push_back(to_json(t));
    j["templates"] = templates;
    Json generators = Json::array();
    for (const auto& g : m.generators) {
        Json gen;
        gen["id"] = g.id;
        gen["backend"] = to_json(g.backend);
        Json settings = Json::array();
        for (auto s : g.settings) settings.push_back(to_string(s));
        gen["settings"] = settings;
        if (g.family) gen["family"] = *g.family;
        if (g.size_label) gen["size"] = *g.size_label;
        if (g.release_date) gen["release_date"] = *g.release_date;
        generators.push_back(std::move(gen));
    }
    j["generators"] = generators;
    j["decomposition_backend"] = to_json(m.decomposition_backend);
    j["embedding_backend"] = to_json(m.embedding_backend);
    j["entailment_backend"] = to_json(m.entailment_backend);
    j["decomposition_prompt"] = to_string(m.decomposition_prompt);
    j["responses_per_cell"] = m.responses_per_cell;
    j["sampling"] = Json{{"top_p", m.sampling_top_p},
                         {"temperature", m.sampling_temperature},
                         {"max_tokens", m.sampling_max_tokens}};
    j["cluster"] = Json{{"max_retrieval", m.cluster.max_retrieval},
                        {"split_threshold", m.cluster.split_threshold},
                        {"dbscan_eps", m.cluster.dbscan_eps},
                        {"dbscan_min_pts", m.cluster.dbscan_min_pts}};
    Json rarefaction;
    rarefaction["resamples"] = m.rarefaction_resamples;
    if (m.rarefaction_target) rarefaction["target_coverage"] = *m.rarefaction_target;
    j["rarefaction"] = rarefaction;
    j["bootstrap"] =
        Json{{"replicates", m.bootstrap_replicates}, {"level", m.bootstrap_level}};
    j["rag"] = Json{{"token_budget", m.retrieval.token_budget},
                    {"min_paragraph_chars", m.retrieval.min_paragraph_chars},
                    {"min_page_chars", m.retrieval.min_page_chars}};
    j["similarity_floor"] =
        m.similarity_floor_auto ? Json("auto") : Json(m.retrieval.similarity_floor);
    j["compare"] = Json{{"setting", to_string(m.compare_setting)}};
    j["represent"] = Json{{"top_k", m.represent_top_k}};
    j["generation_language"] = m.generation_language;
    if (m.simulate) {
        Json sim = population_to_json(m.simulate->population);
        sim["topic_id"] = m.simulate->topic_id;
        sim["generator_id"] = m.simulate->generator_id;
        j["simulate"] = sim;
    }
    return j;
}

std::string manifest_config_hash(const RunManifest& manifest) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx",
             static_cast<unsigned long long>(fnv1a64(manifest_to_json(manifest).dump())));
    return std::string(buf);
}

namespace {

void check_backend(const BackendDescriptor& backend, BackendKind expected_kind,
                   const std::string& context, std::vector<Violation>& violations) {
    auto add = [&](const std::string& message) {
        violations.push_back({"InvalidBackend", context, message});
    };
    if (backend.endpoint_url.empty()) add("endpoint_url is empty");
    if (backend.kind != expected_kind) {
        add("kind must be " + to_string(expected_kind) + ", got " + to_string(backend.kind));
    }
    if (backend.max_in_flight < 1) add("max_in_flight must be >= 1");
    if (backend.retry.max_attempts < 1) add("retry.max_attempts must be >= 1");
    if (backend.retry.base_backoff_ms < 0) add("retry.base_backoff_ms must be >= 0");
    if (backend.timeout_ms < 1) add("timeout_ms must be >= 1");
}

}  // namespace

std::vector<Violation> validate_run_manifest(const RunManifest& m) {
    std::vector<Violation> violations;

    std::unordered_set<std::string> topic_ids;
    for (size_t i = 0; i < m.topics.size(); ++i) {
        const Topic& topic = m.topics[i];
        std::string path = "topics[" + std::to_string(i) + "]";
        if (topic.id.empty()) {
            violations.push_back({"EmptyTopicId", path, "topic id is empty"});
        } else if (!topic_ids.insert(topic.id).second) {
            violations.push_back({"DuplicateTopicId", path, "duplicate topic id " + topic.id});
        }
        if (topic.label.empty()) {
            violations.push_back({"EmptyTopicLabel", path, "topic label is empty"});
        }
    }

    std::unordered_set<std::string> template_ids;
    for (size_t i = 0; i < m.templates.size(); ++i) {
        const PromptTemplate& tmpl = m.templates[i];
        std::string path = "templates[" + std::to_string(i) + "]";
        if (tmpl.id.empty()) {
            violations.push_back({"EmptyTemplateId", path, "template id is empty"});
        } else if (!template_ids.insert(tmpl.id).second) {
            violations.push_back({"DuplicateTemplateId", path, "duplicate template id " + tmpl.id});
        }
        int occurrences = count_topic_placeholders(tmpl.text);
        if (occurrences != 1) {
            violations.push_back({"MissingPlaceholder", path,
                                  "template must contain {topic} exactly once, found " +
                                      std::to_string(occurrences)});
        }
    }

    std::unordered_set<std::string> generator_ids;
    for (size_t i = 0; i < m.generators.size(); ++i) {
        const GeneratorConfig& gen = m.generators[i];
        std::string path = "generators[" + std::to_string(i) + "]";
        if (gen.id.empty()) {
            violations.push_back({"EmptyGeneratorId", path, "generator id is empty"});
        } else if (!generator_ids.insert(gen.id).second) {
            violations.push_back(
                {"DuplicateGeneratorId", path, "duplicate generator id " + gen.id});
        }
        if (gen.id == "search") {
            violations.push_back(
                {"ReservedGeneratorId", path, "generator id 'search' is reserved"});
        }
        for (auto setting : gen.settings) {
            if (setting == GenerationSetting::SEARCH) {
                violations.push_back({"InvalidSetting", path + ".settings",
                                      "SEARCH is not a generator setting; it comes from pages"});
            }
        }
        check_backend(gen.backend, BackendKind::Generation, path + ".backend", violations);
    }

    check_backend(m.decomposition_backend, BackendKind::Generation, "decomposition_backend",
                  violations);
    check_backend(m.embedding_backend, BackendKind::Embedding, "embedding_backend", violations);
    check_backend(m.entailment_backend, BackendKind::Entailment, "entailment_backend", violations);

    if (m.cluster.max_retrieval < 1) {
        violations.push_back(
            {"InvalidClusterParams", "cluster.max_retrieval", "must be >= 1"});
    }
    if (m.cluster.dbscan_eps <= 0.0 || m.cluster.dbscan_eps >= 2.0) {
        violations.push_back({"InvalidClusterParams", "cluster.dbscan_eps", "must be in (0, 2)"});
    }
    if (m.cluster.dbscan_min_pts < 1) {
        violations.push_back({"InvalidClusterParams", "cluster.dbscan_min_pts", "must be >= 1"});
    }
    if (m.cluster.split_threshold < m.cluster.dbscan_min_pts) {
        violations.push_back({"InvalidClusterParams", "cluster.split_threshold",
                              "must be >= dbscan_min_pts"});
    }
    if (m.rarefaction_resamples < 1) {
        violations.push_back({"InvalidRarefaction", "rarefaction.resamples", "must be >= 1"});
    }
    if (m.rarefaction_target &&
        (*m.rarefaction_target <= 0.0 || *m.rarefaction_target > 1.0)) {
        violations.push_back(
            {"InvalidRarefaction", "rarefaction.target_coverage", "must be in (0, 1]"});
    }
    if (m.bootstrap_replicates < 1) {
        violations.push_back({"InvalidBootstrap", "bootstrap.replicates", "must be >= 1"});
    }
    if (m.bootstrap_level <= 0.0 || m.bootstrap_level >= 1.0) {
        violations.push_back({"InvalidBootstrap", "bootstrap.level", "must be in (0, 1)"});
    }
    if (m.responses_per_cell < 1) {
        violations.push_back({"InvalidSampling", "responses_per_cell", "must be >= 1"});
    }
    if (m.retrieval.token_budget < 1) {
        violations.push_back({"InvalidRag", "rag.token_budget", "must be >= 1"});
    }
    if (m.output_dir.empty()) {
        violations.push_back({"MissingOutputDir", "output_dir", "output_dir is empty"});
    }
    if (m.workers < 1) {
        violations.push_back({"InvalidWorkers", "workers", "must be >= 1"});
    }
    return violations;
}

}  // namespace epidiv
