#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <cmath>
#include <map>

#include "epidiv/commands.hpp"
#include "epidiv/jsonl.hpp"
#include "epidiv/mock_backends.hpp"
#include "epidiv/sentences.hpp"
#include "epidiv/synthetic.hpp"

using namespace epidiv;

namespace {

std::filesystem::path source_dir() {
    const char* dir = std::getenv("EPIDIV_SOURCE_DIR");
    REQUIRE(dir != nullptr);
    return dir;
}

std::filesystem::path fresh_dir(const std::string& name) {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

BackendDescriptor mock_backend(BackendKind kind, const std::string& url) {
    BackendDescriptor b;
    b.kind = kind;
    b.endpoint_url = url;
    b.model_name = "mock";
    return b;
}

RunManifest mock_manifest(const std::filesystem::path& out, int topics = 2, int templates = 3) {
    RunManifest m;
    m.run_id = "testrun";
    m.seed = 11;
    m.output_dir = out;
    m.prompts_dir = source_dir() / "prompts";
    for (int i = 0; i < topics; ++i) {
        std::string id = "topic" + std::to_string(i);
        m.topics.push_back({id, "label " + id, "general", "en"});
    }
    const char* shapes[] = {"write an essay about {topic}", "explain {topic} plainly",
                            "what matters about {topic}?"};
    for (int i = 0; i < templates; ++i) {
        m.templates.push_back({"t" + std::to_string(i), shapes[i % 3]});
    }
    GeneratorConfig a;
    a.id = "mockA";
    a.backend = mock_backend(BackendKind::Generation,
                             "mock://population?family=uniform&classes=2&sentences=6");
    a.settings = {GenerationSetting::IFT};
    m.generators.push_back(a);
    m.decomposition_backend = mock_backend(BackendKind::Generation, "mock://decomposer");
    m.embedding_backend = mock_backend(BackendKind::Embedding, "mock://embedding");
    m.entailment_backend = mock_backend(BackendKind::Entailment, "mock://entailment");
    m.rarefaction_resamples = 20;
    m.bootstrap_replicates = 200;
    m.workers = 2;
    return m;
}

void write_search_fixture(const std::filesystem::path& dir, const RunManifest& m) {
    for (const auto& topic : m.topics) {
        std::filesystem::path topic_dir = dir / topic.id;
        std::filesystem::create_directories(topic_dir);
        for (int page = 0; page < 2; ++page) {
            std::string text;
            for (int para = 0; para < 3; ++para) {
                std::string body;
                for (int s = 0; s < 4; ++s) {
                    body += render_tagged_claim(
                        "Observation {n} concerns the subject tagged [[k{class}]]. ",
                        (page * 3 + para) % 5, page * 100 + para * 10 + s);
                }
                while (body.size() < 150) body += " pad";
                text += body + "\n\n";
            }
            while (text.size() < 1200) text += "filler text to reach the length floor. ";
            write_text_file(topic_dir / (std::to_string(page) + ".txt"), text);
            Json meta;
            meta["url"] = "https://news.example.com/" + topic.id + "/" + std::to_string(page);
            meta["content_type"] = "text/html";
            write_json_file(topic_dir / (std::to_string(page) + ".meta.json"), meta);
        }
    }
}

CommandOptions quiet() {
    CommandOptions options;
    options.quiet = true;
    return options;
}

int64_t count_lines(const std::filesystem::path& path) {
    return static_cast<int64_t>(read_jsonl(path).size());
}

}  // namespace

TEST_CASE("full mock pipeline runs every stage") {
    std::filesystem::path out = fresh_dir("epidiv_cli_full");
    RunManifest m = mock_manifest(out);
    GeneratorConfig b;
    b.id = "mockB";
    b.backend = mock_backend(BackendKind::Generation,
                             "mock://population?family=uniform&classes=6&sentences=6");
    b.settings = {GenerationSetting::IFT};
    m.generators.push_back(b);

    CHECK(cmd_generate(m, quiet()) == kExitOk);
    CHECK(cmd_decompose(m, quiet()) == kExitOk);
    CHECK(cmd_cluster(m, quiet()) == kExitOk);
    CHECK(cmd_diversity(m, quiet()) == kExitOk);
    CHECK(cmd_compare(m, quiet()) == kExitOk);
    CHECK(cmd_report(m, quiet()) == kExitOk);

    CHECK(std::filesystem::exists(m.responses_path()));
    CHECK(std::filesystem::exists(m.claims_path()));
    CHECK(std::filesystem::exists(m.clusters_path()));
    CHECK(std::filesystem::exists(m.cluster_meta_path()));
    CHECK(std::filesystem::exists(m.diversity_path()));
    CHECK(std::filesystem::exists(m.jsd_matrix_path()));
    CHECK(std::filesystem::exists(m.report_dir() / "hsd_table.csv"));
    CHECK(std::filesystem::exists(m.report_dir() / "summary.md"));

    // 2 generators x 2 topics x 3 templates, IFT only -> 12 records
    CHECK(count_lines(m.responses_path()) == 12);

    // diversity rows: one per (generator, topic, setting) cell
    auto reports = read_jsonl(m.diversity_path());
    CHECK(reports.size() == 4);

    // the 6-class generator out-ranks the 2-class generator on every topic
    std::map<std::string, double> hsd;
    for (const auto& j : reports) {
        DiversityReport r = diversity_report_from_json(j);
        hsd[r.generator_id + "/" + r.topic_id] = r.hsd;
    }
    CHECK(hsd.at("mockB/topic0") > hsd.at("mockA/topic0"));
    CHECK(hsd.at("mockB/topic1") > hsd.at("mockA/topic1"));

    // jsd matrix: symmetric, zero diagonal, values mirrored into fig4
    Json jsd = read_json_file(m.jsd_matrix_path());
    auto generators = jsd.at("generators").get<std::vector<std::string>>();
    REQUIRE(generators.size() == 2);
    auto matrix = jsd.at("matrix");
    CHECK(matrix.at(0).at(0).get<double>() == 0.0);
    CHECK(matrix.at(1).at(1).get<double>() == 0.0);
    CHECK(matrix.at(0).at(1).get<double>() ==
          doctest::Approx(matrix.at(1).at(0).get<double>()).epsilon(1e-12));
    CHECK(matrix.at(0).at(1).get<double>() > 0.0);
    Json fig4 = read_json_file(m.report_dir() / "fig4_jsd_heatmap.json");
    CHECK(fig4.at("matrix") == matrix);

    // fig3 histogram lists at most 10 clusters in descending order
    Json fig3 = read_json_file(m.report_dir() / "fig3_top_clusters.json");
    for (const auto& cell : fig3.at("cells")) {
        const auto& clusters = cell.at("clusters");
        CHECK(clusters.size() <= 10);
        for (size_t i = 1; i < clusters.size(); ++i) {
            CHECK(clusters.at(i - 1).at("count").get<int64_t>() >=
                  clusters.at(i).at("count").get<int64_t>());
        }
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("stage ordering: diversity without clusters exits 2") {
    std::filesystem::path out = fresh_dir("epidiv_cli_order");
    RunManifest m = mock_manifest(out, 1, 1);
    CHECK(cmd_generate(m, quiet()) == kExitOk);
    CHECK(cmd_decompose(m, quiet()) == kExitOk);
    CHECK(cmd_diversity(m, quiet()) == kExitConfigError);
    CHECK(cmd_cluster(m, quiet()) == kExitOk);
    CHECK(cmd_diversity(m, quiet()) == kExitOk);
    std::filesystem::remove_all(out);
}

TEST_CASE("decompose before generate exits 2") {
    std::filesystem::path out = fresh_dir("epidiv_cli_nodep");
    RunManifest m = mock_manifest(out, 1, 1);
    CHECK(cmd_decompose(m, quiet()) == kExitConfigError);
    std::filesystem::remove_all(out);
}

TEST_CASE("invalid manifest exits 2 before any work") {
    std::filesystem::path out = fresh_dir("epidiv_cli_invalid");
    RunManifest m = mock_manifest(out, 1, 1);
    m.generators[0].backend.max_in_flight = 0;
    CHECK(cmd_generate(m, quiet()) == kExitConfigError);
    CHECK_FALSE(std::filesystem::exists(m.responses_path()));
    std::filesystem::remove_all(out);
}

TEST_CASE("rerun of a completed generate performs zero service calls") {
    std::filesystem::path out = fresh_dir("epidiv_cli_rerun");
    RunManifest m = mock_manifest(out, 1, 2);
    CHECK(cmd_generate(m, quiet()) == kExitOk);
    int64_t first_lines = count_lines(m.responses_path());
    global_mock_stats()->reset();
    CHECK(cmd_generate(m, quiet()) == kExitOk);
    CHECK(global_mock_stats()->generation_calls.load() == 0);
    CHECK(count_lines(m.responses_path()) == first_lines);
    std::filesystem::remove_all(out);
}

TEST_CASE("RAG cells attach contexts and search claims carry SEARCH") {
    std::filesystem::path out = fresh_dir("epidiv_cli_rag");
    RunManifest m = mock_manifest(out, 1, 2);
    m.generators[0].settings = {GenerationSetting::IFT, GenerationSetting::RAG};
    m.search_dir = out / "search";
    write_search_fixture(m.search_dir, m);

    CHECK(cmd_generate(m, quiet()) == kExitOk);
    int64_t rag_records = 0, search_records = 0;
    for_each_jsonl(m.responses_path(), [&](const Json& j) {
        ResponseRecord r = response_from_json(j);
        if (r.setting == GenerationSetting::RAG) {
            ++rag_records;
            CHECK_FALSE(r.context_ids.empty());
        }
        if (r.setting == GenerationSetting::SEARCH) {
            ++search_records;
            CHECK(r.generator_id == "search");
            CHECK_FALSE(r.prompt_id.has_value());
        }
    });
    CHECK(rag_records == 2);
    CHECK(search_records == 2);
    CHECK(std::filesystem::exists(m.pages_path()));
    CHECK(std::filesystem::exists(m.paragraphs_path()));
    CHECK(std::filesystem::exists(m.rag_contexts_path()));

    // rag contexts respect the budget
    for_each_jsonl(m.rag_contexts_path(), [&](const Json& j) {
        CHECK(j.at("token_estimate").get<int>() <= m.retrieval.token_budget);
    });

    // filter soundness: every kept page satisfies all three filter rules
    for_each_jsonl(m.pages_path(), [&](const Json& j) {
        if (!j.at("kept").get<bool>()) return;
        CHECK(j.at("char_count").get<int64_t>() >= 1000);
        CHECK(j.at("content_type").get<std::string>().find("pdf") == std::string::npos);
    });

    // search claims decompose like any response, and their counts match an
    // independent per-page sentence recount
    CHECK(cmd_decompose(m, quiet()) == kExitOk);
    std::map<uint64_t, int64_t> expected_per_page, actual_per_page;
    for_each_jsonl(m.responses_path(), [&](const Json& j) {
        ResponseRecord r = response_from_json(j);
        if (r.setting == GenerationSetting::SEARCH) {
            expected_per_page[r.seed] = static_cast<int64_t>(split_sentences(r.text).size());
        }
    });
    for_each_jsonl(m.claims_path(), [&](const Json& j) {
        Claim c = claim_from_json(j);
        if (c.response_ref.setting == GenerationSetting::SEARCH) {
            ++actual_per_page[c.response_ref.seed];
        }
    });
    CHECK_FALSE(actual_per_page.empty());
    CHECK(actual_per_page == expected_per_page);
    std::filesystem::remove_all(out);
}

TEST_CASE("search topics whose pages are all rejected yield zero records") {
    std::filesystem::path out = fresh_dir("epidiv_cli_rejected");
    RunManifest m = mock_manifest(out, 1, 1);
    m.search_dir = out / "search";
    std::filesystem::path topic_dir = m.search_dir / "topic0";
    std::filesystem::create_directories(topic_dir);
    write_text_file(topic_dir / "0.txt", std::string(500, 'x'));  // too short
    write_json_file(topic_dir / "0.meta.json",
                    Json{{"url", "https://news.example.com/x"}, {"content_type", "text/html"}});
    CHECK(cmd_generate(m, quiet()) == kExitOk);
    int64_t search_records = 0;
    for_each_jsonl(m.responses_path(), [&](const Json& j) {
        if (response_from_json(j).setting == GenerationSetting::SEARCH) ++search_records;
    });
    CHECK(search_records == 0);
    // the rejected page is still recorded with its reason
    int64_t rejected = 0;
    for_each_jsonl(m.pages_path(), [&](const Json& j) {
        if (!j.at("kept").get<bool>()) {
            ++rejected;
            CHECK(j.at("reject_reason").get<std::string>() == "TooShort");
        }
    });
    CHECK(rejected == 1);
    std::filesystem::remove_all(out);
}

TEST_CASE("representativeness stage") {
    std::filesystem::path out = fresh_dir("epidiv_cli_repr");
    RunManifest m = mock_manifest(out, 1, 3);
    m.references_dir = out / "references";
    m.embedding_backend.multilingual = true;

    CHECK(cmd_generate(m, quiet()) == kExitOk);
    CHECK(cmd_decompose(m, quiet()) == kExitOk);
    CHECK(cmd_cluster(m, quiet()) == kExitOk);

    // references: one language matching class 0, one matching nothing
    std::filesystem::path refs = m.references_dir / "topic0";
    std::filesystem::create_directories(refs);
    {
        JsonlWriter en(refs / "en.jsonl");
        en.write(Json{{"id", "en0"},
                      {"topic_id", "topic0"},
                      {"language", "en"},
                      {"text", "A reference noting the subject tagged [[k0]]."}});
        JsonlWriter local(refs / "xx.jsonl");
        local.write(Json{{"id", "xx0"},
                         {"topic_id", "topic0"},
                         {"language", "xx"},
                         {"text", "A reference noting the subject tagged [[k99]]."}});
    }

    CHECK(cmd_represent(m, quiet()) == kExitOk);
    REQUIRE(std::filesystem::exists(m.representativeness_path()));
    int64_t en_rows = 0, xx_rows = 0;
    for_each_jsonl(m.representativeness_path(), [&](const Json& j) {
        DiversityReport r = diversity_report_from_json(j);
        if (j.at("language") == "en") {
            ++en_rows;
            CHECK(r.n > 0);
            CHECK(r.num_classes == 1);
            CHECK(r.hsd == doctest::Approx(1.0));
        } else {
            ++xx_rows;
            CHECK(r.n == 0);
            CHECK(r.hsd == 0.0);
        }
    });
    CHECK(en_rows == 1);
    CHECK(xx_rows == 1);

    // monolingual embedding backend refuses cross-lingual matching
    std::filesystem::remove(m.run_dir() / "represent_done.jsonl");
    m.embedding_backend.multilingual = false;
    CHECK(cmd_represent(m, quiet()) == kExitConfigError);
    std::filesystem::remove_all(out);
}

TEST_CASE("simulate feeds the cluster and diversity stages") {
    std::filesystem::path out = fresh_dir("epidiv_cli_sim");
    RunManifest m = mock_manifest(out, 1, 1);
    SimulateConfig sim;
    sim.population = PopulationSpec::uniform(4, 400, 5);
    m.simulate = sim;

    CHECK(cmd_simulate(m, quiet()) == kExitOk);
    CHECK(std::filesystem::exists(m.truth_path()));
    Json truth = read_json_file(m.truth_path());
    CHECK(truth.at("true_hsd").get<double>() == doctest::Approx(4.0));
    CHECK(count_lines(m.claims_path()) == 400);

    CHECK(cmd_cluster(m, quiet()) == kExitOk);
    CHECK(cmd_diversity(m, quiet()) == kExitOk);
    auto reports = read_jsonl(m.diversity_path());
    REQUIRE(reports.size() == 1);
    DiversityReport r = diversity_report_from_json(reports[0]);
    CHECK(r.num_classes == 4);
    CHECK(r.hsd == doctest::Approx(4.0).epsilon(0.05));
    std::filesystem::remove_all(out);
}

TEST_CASE("jsd matrix contracts on hand-written claim streams") {
    std::filesystem::path out = fresh_dir("epidiv_cli_jsd");
    RunManifest m = mock_manifest(out, 1, 1);
    m.generators.clear();
    for (const std::string id : {"g1", "g2", "g3"}) {
        GeneratorConfig g;
        g.id = id;
        g.backend = mock_backend(BackendKind::Generation,
                                 "mock://population?family=uniform&classes=2");
        g.settings = {GenerationSetting::IFT};
        m.generators.push_back(g);
    }
    std::filesystem::create_directories(m.run_dir());
    {
        JsonlWriter writer(m.claims_path());
        auto emit = [&](const std::string& gen, int cls, int i) {
            Claim c;
            c.topic_id = "topic0";
            c.response_ref = {gen, std::string("t0"), GenerationSetting::IFT, 1};
            c.chunk_index = i;
            c.text = render_tagged_claim(
                "Observation {n} concerns the subject tagged [[k{class}]].", cls,
                i + (gen == "g2" ? 0 : 1000) + (gen == "g3" ? 2000 : 0));
            c.id = gen + "-" + std::to_string(i);
            writer.write(to_json(c));
        };
        // g1 and g2 emit identical class streams; g3 uses disjoint classes
        for (int i = 0; i < 30; ++i) {
            int cls = i % 3;
            emit("g1", cls, i);
            emit("g2", cls, i);
            emit("g3", cls + 10, i);
        }
    }
    CHECK(cmd_compare(m, quiet()) == kExitOk);
    Json jsd = read_json_file(m.jsd_matrix_path());
    auto generators = jsd.at("generators").get<std::vector<std::string>>();
    REQUIRE(generators == std::vector<std::string>{"g1", "g2", "g3"});
    const Json& matrix = jsd.at("matrix");
    // 3x3, symmetric, zero diagonal
    REQUIRE(matrix.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(matrix.at(i).at(i).get<double>() == 0.0);
        for (size_t j = 0; j < 3; ++j) {
            bool mirrored =
                matrix.at(i).at(j).get<double>() == matrix.at(j).at(i).get<double>();
            CHECK(mirrored);
        }
    }
    // identical streams -> 0; disjoint hidden classes -> ln 2
    CHECK(matrix.at(0).at(1).get<double>() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(matrix.at(0).at(2).get<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(matrix.at(1).at(2).get<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
    std::filesystem::remove_all(out);
}

TEST_CASE("decomposition recount oracle and idempotence") {
    std::filesystem::path out = fresh_dir("epidiv_cli_recount");
    RunManifest m = mock_manifest(out, 2, 3);
    CHECK(cmd_generate(m, quiet()) == kExitOk);
    CHECK(cmd_decompose(m, quiet()) == kExitOk);

    // independent recount: the identity decomposer yields one claim per
    // sentence, so claims per response = split_sentences(response.text).size()
    std::map<std::string, int64_t> expected;
    for_each_jsonl(m.responses_path(), [&](const Json& j) {
        ResponseRecord r = response_from_json(j);
        expected[r.cell_key()] =
            static_cast<int64_t>(split_sentences(r.text).size());
    });
    std::map<std::string, int64_t> actual;
    for_each_jsonl(m.claims_path(), [&](const Json& j) {
        Claim c = claim_from_json(j);
        ResponseRecord probe;
        probe.generator_id = c.response_ref.generator_id;
        probe.topic_id = c.topic_id;
        probe.prompt_id = c.response_ref.prompt_id;
        probe.setting = c.response_ref.setting;
        probe.seed = c.response_ref.seed;
        ++actual[probe.cell_key()];
    });
    CHECK(actual == expected);

    // rerun performs zero decomposition calls and appends nothing
    int64_t lines = count_lines(m.claims_path());
    global_mock_stats()->reset();
    CHECK(cmd_decompose(m, quiet()) == kExitOk);
    CHECK(global_mock_stats()->generation_calls.load() == 0);
    CHECK(count_lines(m.claims_path()) == lines);
    std::filesystem::remove_all(out);
}

TEST_CASE("fig2 series keep the mean inside the bootstrap interval") {
    std::filesystem::path out = fresh_dir("epidiv_cli_fig2");
    RunManifest m = mock_manifest(out, 2, 3);
    CHECK(cmd_generate(m, quiet()) == kExitOk);
    CHECK(cmd_decompose(m, quiet()) == kExitOk);
    CHECK(cmd_cluster(m, quiet()) == kExitOk);
    CHECK(cmd_diversity(m, quiet()) == kExitOk);
    CHECK(cmd_report(m, quiet()) == kExitOk);
    Json fig2 = read_json_file(m.report_dir() / "fig2_hsd_by_generator.json");
    REQUIRE(fig2.at("series").size() >= 1);
    for (const auto& row : fig2.at("series")) {
        double mean = row.at("hsd_mean").get<double>();
        CHECK(row.at("ci_low").get<double>() <= mean + 1e-9);
        CHECK(row.at("ci_high").get<double>() >= mean - 1e-9);
    }
    std::filesystem::remove_all(out);
}

TEST_CASE("manifest file loading resolves relative paths") {
    std::filesystem::path out = fresh_dir("epidiv_cli_manifest");
    Json j;
    j["run_id"] = "filerun";
    j["seed"] = 3;
    j["output_dir"] = "outputs";
    j["topics"] = Json::array({Json{{"id", "a"}, {"label", "A"}}});
    j["templates"] = Json::array({Json{{"id", "t"}, {"template", "about {topic}"}}});
    j["generators"] = Json::array({Json{
        {"id", "g"},
        {"backend", Json{{"kind", "generation"},
                         {"endpoint_url", "mock://population?family=uniform&classes=2"}}},
        {"settings", Json::array({"IFT"})}}});
    j["decomposition_backend"] =
        Json{{"kind", "generation"}, {"endpoint_url", "mock://decomposer"}};
    j["embedding_backend"] = Json{{"kind", "embedding"}, {"endpoint_url", "mock://embedding"}};
    j["entailment_backend"] =
        Json{{"kind", "entailment"}, {"endpoint_url", "mock://entailment"}};
    write_json_file(out / "manifest.json", j);

    RunManifest m = load_manifest(out / "manifest.json");
    CHECK(m.run_id == "filerun");
    CHECK(m.output_dir == out / "outputs");
    CHECK(validate_run_manifest(m).empty());
    std::filesystem::remove_all(out);
}
