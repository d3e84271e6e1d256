#include "epidiv/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iostream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "epidiv/diversity.hpp"
#include "epidiv/executor.hpp"
#include "epidiv/jsonl.hpp"
#include "epidiv/mock_backends.hpp"
#include "epidiv/report.hpp"
#include "epidiv/represent.hpp"
#include "epidiv/rng.hpp"
#include "epidiv/version.hpp"

namespace epidiv {

namespace {

constexpr int64_t kDeterministicEpoch = 1700000000;  // fixed origin for mock-run timestamps

std::string iso_timestamp(int64_t unix_seconds) {
    std::time_t t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string setting_label(GenerationSetting s) { return to_string(s); }

std::string cell_label(const ResponseRecord& record) {
    return record.generator_id + "/" + record.topic_id + "/" +
           record.prompt_id.value_or("-") + "/" + setting_label(record.setting) + "/" +
           std::to_string(record.seed);
}

// Applies CLI overrides onto a copy of the manifest.
RunManifest with_overrides(const RunManifest& manifest, const CommandOptions& options) {
    RunManifest m = manifest;
    if (options.stage_seed) m.seed = *options.stage_seed;
    if (options.decomp_prompt) {
        m.decomposition_prompt = decomposition_prompt_from_string(*options.decomp_prompt);
    }
    if (options.similarity_floor) {
        if (*options.similarity_floor == "auto") {
            m.similarity_floor_auto = true;
        } else {
            m.similarity_floor_auto = false;
            m.retrieval.similarity_floor = std::stod(*options.similarity_floor);
        }
    }
    return m;
}

int check_manifest(const RunManifest& manifest, const CommandOptions& options) {
    std::vector<Violation> violations = validate_run_manifest(manifest);
    if (violations.empty()) return kExitOk;
    if (!options.quiet) {
        for (const auto& v : violations) {
            std::cerr << "config error [" << v.code << "] at " << v.context << ": " << v.message
                      << "\n";
        }
    }
    return kExitConfigError;
}

// Missing-checkpoint guard shared by every downstream stage.
bool require_checkpoint(const std::filesystem::path& path, const std::string& stage,
                        const CommandOptions& options) {
    if (std::filesystem::exists(path)) return true;
    if (!options.quiet) {
        std::cerr << stage << ": missing checkpoint " << path.filename().string() << " ("
                  << path.string() << "); run the producing stage first\n";
    }
    return false;
}

class FailureLog {
public:
    FailureLog(std::filesystem::path path, std::string stage)
        : path_(std::move(path)), stage_(std::move(stage)) {}

    void record(const std::string& cell, ErrorCode code, const std::string& message) {
        if (!writer_) writer_ = std::make_unique<JsonlWriter>(path_);
        Json j;
        j["stage"] = stage_;
        j["cell"] = cell;
        j["error_code"] = error_code_name(code);
        j["message"] = message;
        writer_->write(j);
        ++count_;
    }

    int64_t count() const { return count_; }

private:
    std::filesystem::path path_;
    std::unique_ptr<JsonlWriter> writer_;
    std::string stage_;
    int64_t count_ = 0;
};

std::unordered_set<std::string> load_done_keys(const std::filesystem::path& path) {
    std::unordered_set<std::string> keys;
    if (!std::filesystem::exists(path)) return keys;
    repair_jsonl_tail(path);
    for_each_jsonl(path, [&](const Json& j) { keys.insert(j.at("key").get<std::string>()); });
    return keys;
}

void append_done_key(const std::filesystem::path& path, const std::string& key) {
    JsonlWriter writer(path);
    writer.write(Json{{"key", key}});
}

// Rebuilds a per-cell JSONL checkpoint keeping only rows of completed cells,
// repairing the aftermath of a kill between row append and done marker.
void compact_to_done_cells(const std::filesystem::path& path,
                           const std::unordered_set<std::string>& done,
                           const std::function<std::string(const Json&)>& key_of) {
    if (!std::filesystem::exists(path)) return;
    repair_jsonl_tail(path);
    std::vector<Json> keep;
    bool dropped = false;
    for_each_jsonl(path, [&](const Json& j) {
        if (done.count(key_of(j))) {
            keep.push_back(j);
        } else {
            dropped = true;
        }
    });
    if (!dropped) return;
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        JsonlWriter writer(tmp, /*append=*/false);
        for (const auto& j : keep) writer.write(j);
    }
    std::filesystem::rename(tmp, path);
}

void update_run_meta(const RunManifest& manifest, const std::string& stage, const Json& summary) {
    Json meta;
    if (std::filesystem::exists(manifest.run_meta_path())) {
        meta = read_json_file(manifest.run_meta_path());
    }
    meta["run_id"] = manifest.run_id;
    meta["config_hash"] = manifest_config_hash(manifest);
    meta["seed"] = manifest.seed;
    meta["tool_version"] = kToolVersion;
    meta["schema_version"] = kSchemaVersion;
    meta["token_proxy"] = "ceil(chars/4)@v1";
    if (!meta.contains("stages")) meta["stages"] = Json::object();
    meta["stages"][stage] = summary;
    write_json_file(manifest.run_meta_path(), meta);
}

void print_summary(const CommandOptions& options, const std::string& stage, const Json& summary) {
    if (options.quiet) return;
    std::cout << stage << ":";
    for (const auto& [key, value] : summary.items()) {
        std::cout << " " << key << "=" << value.dump();
    }
    std::cout << "\n";
}

bool manifest_is_all_mock(const RunManifest& m) {
    for (const auto& gen : m.generators) {
        if (!is_mock_endpoint(gen.backend.endpoint_url)) return false;
    }
    return is_mock_endpoint(m.decomposition_backend.endpoint_url) &&
           is_mock_endpoint(m.embedding_backend.endpoint_url) &&
           is_mock_endpoint(m.entailment_backend.endpoint_url);
}

const Topic* find_topic(const RunManifest& m, const std::string& topic_id) {
    for (const auto& t : m.topics) {
        if (t.id == topic_id) return &t;
    }
    return nullptr;
}

struct GenerationCell {
    size_t generator_index = 0;
    size_t topic_index = 0;
    size_t template_index = 0;
    GenerationSetting setting = GenerationSetting::IFT;
    int replicate = 0;
    uint64_t seed = 0;
    int64_t ordinal = 0;
};

std::string generation_cell_key(const RunManifest& m, const GenerationCell& cell) {
    ResponseRecord probe;
    probe.generator_id = m.generators[cell.generator_index].id;
    probe.topic_id = m.topics[cell.topic_index].id;
    probe.prompt_id = m.templates[cell.template_index].id;
    probe.setting = cell.setting;
    probe.seed = cell.seed;
    return probe.cell_key();
}

// Per-topic search corpus: filtered pages, their paragraphs, and lazily
// computed paragraph embeddings.
struct TopicCorpus {
    std::vector<PageRecord> pages;
    std::vector<Paragraph> paragraphs;
    std::vector<EmbeddingVector> embeddings;
    bool embedded = false;
};

}  // namespace

int cmd_generate(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = with_overrides(manifest_in, options);
    if (int rc = check_manifest(m, options); rc != kExitOk) return rc;

    std::filesystem::create_directories(m.run_dir());
    repair_jsonl_tail(m.responses_path());

    std::unordered_set<std::string> existing;
    if (std::filesystem::exists(m.responses_path())) {
        for_each_jsonl(m.responses_path(), [&](const Json& j) {
            existing.insert(response_from_json(j).cell_key());
        });
    }

    bool deterministic_clock = manifest_is_all_mock(m);

    // --- search-corpus ingestion (also the RAG database) ---
    std::map<std::string, TopicCorpus> corpora;  // topic id -> corpus
    bool have_search = !m.search_dir.empty() && std::filesystem::exists(m.search_dir);
    bool any_rag = false;
    for (const auto& gen : m.generators) {
        for (auto s : gen.settings) {
            if (s == GenerationSetting::RAG) any_rag = true;
        }
    }
    if (have_search) {
        bool write_pages = !std::filesystem::exists(m.pages_path());
        bool write_paragraphs = !std::filesystem::exists(m.paragraphs_path());
        std::unique_ptr<JsonlWriter> pages_writer;
        std::unique_ptr<JsonlWriter> paragraphs_writer;
        if (write_pages) pages_writer = std::make_unique<JsonlWriter>(m.pages_path());
        if (write_paragraphs) {
            paragraphs_writer = std::make_unique<JsonlWriter>(m.paragraphs_path());
        }
        for (const auto& topic : m.topics) {
            TopicCorpus corpus;
            corpus.pages = ingest_pages(m.search_dir / topic.id, topic.id, m.retrieval);
            if (!corpus.pages.empty() && !options.quiet) {
                bool any_kept = false;
                for (const auto& page : corpus.pages) any_kept = any_kept || page.kept;
                if (!any_kept) {
                    std::cerr << "generate: warning: all search pages for topic " << topic.id
                              << " were rejected by the filters\n";
                }
            }
            for (const auto& page : corpus.pages) {
                if (pages_writer) {
                    Json j;
                    j["topic_id"] = page.topic_id;
                    j["url"] = page.url;
                    j["content_type"] = page.content_type;
                    j["char_count"] = page.char_count;
                    j["kept"] = page.kept;
                    if (page.reject_reason) j["reject_reason"] = *page.reject_reason;
                    j["page_id"] = page.page_id;
                    pages_writer->write(j);
                }
                if (!page.kept) continue;
                auto paragraphs = split_paragraphs(page, m.retrieval);
                for (auto& p : paragraphs) {
                    p.id = topic.id + "/" + p.id;
                    if (paragraphs_writer) {
                        Json j;
                        j["id"] = p.id;
                        j["page_ref"] = page.url;
                        j["index"] = p.index;
                        j["text"] = p.text;
                        paragraphs_writer->write(j);
                    }
                    corpus.paragraphs.push_back(std::move(p));
                }
            }
            corpora.emplace(topic.id, std::move(corpus));
        }
    }

    auto embedding = make_embedding_backend(m.embedding_backend);
    auto ensure_embedded = [&](TopicCorpus& corpus) {
        if (corpus.embedded || corpus.paragraphs.empty()) {
            corpus.embedded = true;
            return;
        }
        std::vector<std::string> texts;
        texts.reserve(corpus.paragraphs.size());
        for (const auto& p : corpus.paragraphs) texts.push_back(p.text);
        corpus.embeddings = embed_batch(*embedding, texts);
        corpus.embedded = true;
    };

    // --- similarity floor (auto mode recomputes the corpus mean) ---
    double similarity_floor = m.retrieval.similarity_floor;
    if (m.similarity_floor_auto && any_rag && have_search) {
        std::vector<EmbeddingVector> prompt_vecs;
        std::vector<EmbeddingVector> paragraph_vecs;
        for (const auto& topic : m.topics) {
            auto it = corpora.find(topic.id);
            if (it == corpora.end() || it->second.paragraphs.empty()) continue;
            ensure_embedded(it->second);
            for (const auto& tmpl : m.templates) {
                auto rendered = embed_batch(*embedding, {render_prompt(tmpl, topic)});
                prompt_vecs.push_back(rendered[0]);
            }
            for (const auto& e : it->second.embeddings) paragraph_vecs.push_back(e);
        }
        if (!prompt_vecs.empty() && !paragraph_vecs.empty()) {
            similarity_floor =
                mean_prompt_paragraph_similarity(prompt_vecs, paragraph_vecs);
        }
    }
    RetrievalConfig retrieval = m.retrieval;
    retrieval.similarity_floor = similarity_floor;

    // --- RAG contexts, built ahead of generation in canonical order ---
    repair_jsonl_tail(m.rag_contexts_path());
    std::map<std::string, RagContext> contexts;  // "topic|template|replicate" -> context
    if (std::filesystem::exists(m.rag_contexts_path())) {
        for_each_jsonl(m.rag_contexts_path(), [&](const Json& j) {
            RagContext ctx;
            ctx.prompt_id = j.at("prompt_id").get<std::string>();
            ctx.paragraph_ids = j.at("paragraph_ids").get<std::vector<std::string>>();
            ctx.token_estimate = j.at("token_estimate").get<int>();
            ctx.truncated_chars = j.value("truncated_chars", int64_t{0});
            std::string key = j.at("topic_id").get<std::string>() + "|" + ctx.prompt_id + "|" +
                              std::to_string(j.at("replicate").get<int>());
            contexts.emplace(key, std::move(ctx));
        });
    }

    FailureLog failures(m.failures_path(), "generate");
    int64_t completed = 0, skipped = 0;

    if (any_rag && have_search) {
        JsonlWriter context_writer(m.rag_contexts_path());
        for (size_t ti = 0; ti < m.topics.size(); ++ti) {
            const Topic& topic = m.topics[ti];
            auto corpus_it = corpora.find(topic.id);
            if (corpus_it == corpora.end() || corpus_it->second.paragraphs.empty()) continue;
            ensure_embedded(corpus_it->second);
            for (size_t pi = 0; pi < m.templates.size(); ++pi) {
                for (int rep = 0; rep < m.responses_per_cell; ++rep) {
                    std::string key =
                        topic.id + "|" + m.templates[pi].id + "|" + std::to_string(rep);
                    if (contexts.count(key)) continue;
                    uint64_t ctx_seed = derive_seed(m.seed, "rag-context", key);
                    RagContext ctx = build_rag_context(
                        render_prompt(m.templates[pi], topic), m.templates[pi].id,
                        corpus_it->second.paragraphs, corpus_it->second.embeddings, *embedding,
                        retrieval, ctx_seed);
                    Json j;
                    j["topic_id"] = topic.id;
                    j["prompt_id"] = ctx.prompt_id;
                    j["replicate"] = rep;
                    j["paragraph_ids"] = ctx.paragraph_ids;
                    j["token_estimate"] = ctx.token_estimate;
                    if (ctx.truncated_chars > 0) j["truncated_chars"] = ctx.truncated_chars;
                    context_writer.write(j);
                    contexts.emplace(key, std::move(ctx));
                }
            }
        }
    }

    // --- generation cells in canonical order ---
    std::vector<GenerationCell> cells;
    int64_t ordinal = 0;
    for (size_t gi = 0; gi < m.generators.size(); ++gi) {
        for (size_t ti = 0; ti < m.topics.size(); ++ti) {
            for (size_t pi = 0; pi < m.templates.size(); ++pi) {
                for (GenerationSetting setting : m.generators[gi].settings) {
                    for (int rep = 0; rep < m.responses_per_cell; ++rep) {
                        GenerationCell cell;
                        cell.generator_index = gi;
                        cell.topic_index = ti;
                        cell.template_index = pi;
                        cell.setting = setting;
                        cell.replicate = rep;
                        cell.seed = derive_seed(
                            m.seed, "generate",
                            m.generators[gi].id + "|" + m.topics[ti].id + "|" +
                                m.templates[pi].id + "|" + to_string(setting) + "|" +
                                std::to_string(rep));
                        cell.ordinal = ordinal++;
                        cells.push_back(cell);
                    }
                }
            }
        }
    }

    std::vector<std::shared_ptr<GenerationBackend>> backends;
    backends.reserve(m.generators.size());
    for (const auto& gen : m.generators) {
        backends.push_back(make_generation_backend(gen.backend));
    }

    struct CellResult {
        std::optional<ResponseRecord> record;
        std::optional<std::pair<ErrorCode, std::string>> failure;
    };

    JsonlWriter response_writer(m.responses_path());
    ThreadPool pool(static_cast<size_t>(m.workers));
    std::vector<std::pair<GenerationCell, std::future<CellResult>>> pending;

    for (const GenerationCell& cell : cells) {
        if (existing.count(generation_cell_key(m, cell))) {
            ++skipped;
            continue;
        }
        pending.emplace_back(cell, pool.submit([&, cell]() -> CellResult {
            const GeneratorConfig& gen = m.generators[cell.generator_index];
            const Topic& topic = m.topics[cell.topic_index];
            const PromptTemplate& tmpl = m.templates[cell.template_index];
            CellResult result;
            ResponseRecord record;
            record.generator_id = gen.id;
            record.topic_id = topic.id;
            record.prompt_id = tmpl.id;
            record.setting = cell.setting;
            record.seed = cell.seed;
            record.created_at = deterministic_clock
                                    ? iso_timestamp(kDeterministicEpoch + cell.ordinal)
                                    : iso_timestamp(static_cast<int64_t>(std::time(nullptr)));
            try {
                std::string prompt = render_prompt(tmpl, topic);
                if (cell.setting == GenerationSetting::RAG) {
                    std::string key = topic.id + "|" + tmpl.id + "|" +
                                      std::to_string(cell.replicate);
                    auto ctx_it = contexts.find(key);
                    if (ctx_it == contexts.end()) {
                        throw EpidivError(ErrorCode::NoParagraphs,
                                          "no RAG context available for topic " + topic.id);
                    }
                    auto corpus_it = corpora.find(topic.id);
                    std::string context_text =
                        assemble_context_text(ctx_it->second, corpus_it->second.paragraphs);
                    prompt = context_text + "\n\n" + prompt;
                    record.context_ids = ctx_it->second.paragraph_ids;
                }
                GenerationRequest request;
                request.prompt = prompt;
                request.top_p = m.sampling_top_p;
                request.temperature = m.sampling_temperature;
                request.max_tokens = m.sampling_max_tokens;
                request.seed = cell.seed;
                record.text = backends[cell.generator_index]->generate(request);
                result.record = std::move(record);
            } catch (const EpidivError& e) {
                result.failure = {e.code(), e.what()};
                result.record = std::move(record);  // keeps the cell label
            }
            return result;
        }));
    }

    for (auto& [cell, future] : pending) {
        CellResult result = future.get();
        if (result.failure) {
            failures.record(cell_label(*result.record), result.failure->first,
                            result.failure->second);
            continue;
        }
        response_writer.write(to_json(*result.record));
        ++completed;
    }

    // --- search baseline pseudo-responses ---
    int64_t search_records = 0;
    if (have_search) {
        int64_t search_ordinal = 1 << 20;  // after generator cells in the mock clock
        for (const auto& topic : m.topics) {
            auto it = corpora.find(topic.id);
            if (it == corpora.end()) continue;
            uint64_t page_seed = 0;
            for (const auto& page : it->second.pages) {
                if (!page.kept) {
                    ++page_seed;
                    continue;
                }
                ResponseRecord record;
                record.generator_id = "search";
                record.topic_id = topic.id;
                record.setting = GenerationSetting::SEARCH;
                record.seed = page_seed++;
                record.text = page.text;
                record.created_at = deterministic_clock
                                        ? iso_timestamp(kDeterministicEpoch + search_ordinal++)
                                        : iso_timestamp(static_cast<int64_t>(std::time(nullptr)));
                if (existing.count(record.cell_key())) {
                    ++skipped;
                    continue;
                }
                response_writer.write(to_json(record));
                ++search_records;
            }
        }
    }

    Json summary;
    summary["cells"] = static_cast<int64_t>(cells.size());
    summary["completed"] = completed;
    summary["search_records"] = search_records;
    summary["skipped"] = skipped;
    summary["failed"] = failures.count();
    if (m.similarity_floor_auto) summary["similarity_floor"] = similarity_floor;
    update_run_meta(m, "generate", summary);
    print_summary(options, "generate", summary);
    return failures.count() > 0 ? kExitPartialFailure : kExitOk;
}

int cmd_decompose(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = with_overrides(manifest_in, options);
    if (int rc = check_manifest(m, options); rc != kExitOk) return rc;
    if (!require_checkpoint(m.responses_path(), "decompose", options)) return kExitConfigError;

    PromptSet prompts;
    try {
        prompts = PromptSet::load(m.prompts_dir);
    } catch (const EpidivError& e) {
        if (!options.quiet) std::cerr << "decompose: " << e.what() << "\n";
        return kExitConfigError;
    }
    auto backend = make_generation_backend(m.decomposition_backend);
    Decomposer decomposer(backend, prompts, m.decomposition_prompt);

    std::vector<ResponseRecord> responses;
    for_each_jsonl(m.responses_path(),
                   [&](const Json& j) { responses.push_back(response_from_json(j)); });

    std::filesystem::path done_path = m.run_dir() / "decompose_done.jsonl";
    std::unordered_set<std::string> done = load_done_keys(done_path);

    // Drop rows from responses whose decomposition did not complete.
    compact_to_done_cells(m.claims_path(), done, [&](const Json& j) {
        Claim claim = claim_from_json(j);
        ResponseRecord probe;
        probe.generator_id = claim.response_ref.generator_id;
        probe.topic_id = claim.topic_id;
        probe.prompt_id = claim.response_ref.prompt_id;
        probe.setting = claim.response_ref.setting;
        probe.seed = claim.response_ref.seed;
        return probe.cell_key();
    });

    struct ResponseResult {
        std::vector<Claim> claims;
        bool degenerate = false;
        std::optional<std::pair<ErrorCode, std::string>> failure;
    };

    FailureLog failures(m.failures_path(), "decompose");
    JsonlWriter claim_writer(m.claims_path());
    ThreadPool pool(static_cast<size_t>(m.workers));
    std::vector<std::pair<const ResponseRecord*, std::future<ResponseResult>>> pending;
    int64_t skipped = 0;

    for (const auto& response : responses) {
        if (done.count(response.cell_key())) {
            ++skipped;
            continue;
        }
        pending.emplace_back(&response, pool.submit([&, resp = &response]() -> ResponseResult {
            ResponseResult result;
            Topic topic;
            if (const Topic* t = find_topic(m, resp->topic_id)) {
                topic = *t;
            } else {
                topic.id = resp->topic_id;
                topic.label = resp->topic_id;
            }
            try {
                for (const Chunk& chunk : chunk_response(*resp)) {
                    uint64_t seed = derive_seed(m.seed, "decompose",
                                                resp->cell_key() + "|" +
                                                    std::to_string(chunk.chunk_index));
                    DecomposeResult decomposed = decomposer.decompose_chunk(chunk, topic, seed);
                    result.degenerate = result.degenerate || decomposed.degenerate;
                    for (auto& claim : decomposed.claims) {
                        result.claims.push_back(std::move(claim));
                    }
                }
            } catch (const EpidivError& e) {
                result.failure = {e.code(), e.what()};
            }
            return result;
        }));
    }

    int64_t completed = 0, claims_written = 0;
    for (auto& [response, future] : pending) {
        ResponseResult result = future.get();
        if (result.failure) {
            failures.record(cell_label(*response), result.failure->first,
                            result.failure->second);
            continue;
        }
        if (result.degenerate) {
            failures.record(cell_label(*response), ErrorCode::ResponseMalformed,
                            "decomposition completion exceeded line cap; truncated");
        }
        for (const auto& claim : result.claims) {
            claim_writer.write(to_json(claim));
            ++claims_written;
        }
        append_done_key(done_path, response->cell_key());
        ++completed;
    }

    Json summary;
    summary["responses"] = static_cast<int64_t>(responses.size());
    summary["completed"] = completed;
    summary["skipped"] = skipped;
    summary["claims"] = claims_written;
    summary["failed"] = failures.count();
    summary["prompt"] = to_string(m.decomposition_prompt);
    update_run_meta(m, "decompose", summary);
    print_summary(options, "decompose", summary);
    return failures.count() > 0 ? kExitPartialFailure : kExitOk;
}

namespace {

struct CellClaims {
    std::string generator_id;
    std::string topic_id;
    GenerationSetting setting = GenerationSetting::IFT;
    std::vector<Claim> claims;

    std::string key() const {
        return generator_id + "\x1f" + topic_id + "\x1f" + to_string(setting);
    }
    std::string label() const {
        return generator_id + "/" + topic_id + "/" + to_string(setting);
    }
};

// Claims grouped per (generator, topic, setting) in order of first appearance.
std::vector<CellClaims> group_claims_by_cell(const std::filesystem::path& claims_path) {
    std::vector<CellClaims> cells;
    std::unordered_map<std::string, size_t> index;
    for_each_jsonl(claims_path, [&](const Json& j) {
        Claim claim = claim_from_json(j);
        CellClaims probe;
        probe.generator_id = claim.response_ref.generator_id;
        probe.topic_id = claim.topic_id;
        probe.setting = claim.response_ref.setting;
        auto [it, inserted] = index.emplace(probe.key(), cells.size());
        if (inserted) {
            cells.push_back(std::move(probe));
        }
        cells[it->second].claims.push_back(std::move(claim));
    });
    return cells;
}

}  // namespace

int cmd_cluster(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = with_overrides(manifest_in, options);
    if (int rc = check_manifest(m, options); rc != kExitOk) return rc;
    if (!require_checkpoint(m.claims_path(), "cluster", options)) return kExitConfigError;

    std::vector<CellClaims> cells = group_claims_by_cell(m.claims_path());
    auto embedding = make_embedding_backend(m.embedding_backend);
    auto entailment = make_entailment_backend(m.entailment_backend);

    std::filesystem::path done_path = m.run_dir() / "cluster_done.jsonl";
    std::unordered_set<std::string> done_keys;
    std::map<std::string, Json> done_meta;  // cell key -> per-cell meta
    if (std::filesystem::exists(done_path)) {
        repair_jsonl_tail(done_path);
        for_each_jsonl(done_path, [&](const Json& j) {
            done_keys.insert(j.at("key").get<std::string>());
            done_meta[j.at("key").get<std::string>()] = j;
        });
    }
    // clusters.jsonl rows carry only {claim_id, cluster_id}; cell membership
    // for compaction comes from the claims themselves.
    std::unordered_map<std::string, std::string> claim_to_cell;
    for (const auto& cell : cells) {
        for (const auto& claim : cell.claims) claim_to_cell[claim.id] = cell.key();
    }
    compact_to_done_cells(m.clusters_path(), done_keys, [&](const Json& j) {
        auto it = claim_to_cell.find(j.at("claim_id").get<std::string>());
        return it == claim_to_cell.end() ? std::string{} : it->second;
    });

    FailureLog failures(m.failures_path(), "cluster");
    JsonlWriter cluster_writer(m.clusters_path());
    int64_t completed = 0, skipped = 0;

    for (const auto& cell : cells) {
        if (done_keys.count(cell.key())) {
            ++skipped;
            continue;
        }
        std::filesystem::path state_path =
            m.cluster_state_dir() /
            (std::to_string(fnv1a64(cell.key())) + ".json");
        ClusterState state;
        if (std::filesystem::exists(state_path)) {
            Json j = read_json_file(state_path);
            state.seen_claim_ids = j.at("claim_ids").get<std::vector<std::string>>();
            state.labels = j.at("labels").get<std::vector<int>>();
            state.next_cluster_id = j.at("next_cluster_id").get<int>();
        }
        try {
            std::vector<std::string> texts;
            texts.reserve(cell.claims.size());
            for (const auto& claim : cell.claims) texts.push_back(claim.text);
            std::vector<EmbeddingVector> embeddings = embed_batch(*embedding, texts);

            MeaningClassTable table;
            try {
                table = cluster_claims(cell.claims, embeddings, *entailment, m.cluster, &state);
            } catch (const EpidivError& e) {
                if (e.code() == ErrorCode::BackendUnavailable) {
                    Json j;
                    j["claim_ids"] = state.seen_claim_ids;
                    j["labels"] = state.labels;
                    j["next_cluster_id"] = state.next_cluster_id;
                    write_json_file(state_path, j);
                }
                throw;
            }
            SplitResult split = split_large_clusters(table, cell.claims, embeddings, m.cluster);

            for (const auto& claim : cell.claims) {
                Json j;
                j["claim_id"] = claim.id;
                j["cluster_id"] = split.table.cluster_of.at(claim.id);
                cluster_writer.write(j);
            }
            Json meta;
            meta["key"] = cell.key();
            meta["generator_id"] = cell.generator_id;
            meta["topic_id"] = cell.topic_id;
            meta["setting"] = to_string(cell.setting);
            meta["n"] = split.table.n;
            meta["num_classes"] = split.table.num_classes();
            Json counts = Json::array();
            for (const auto& [cluster_id, count] : split.table.counts) {
                counts.push_back(count);
            }
            meta["counts"] = counts;
            Json audit = Json::array();
            for (const auto& entry : split.audit) {
                Json a;
                a["original_cluster"] = entry.original_cluster;
                a["size"] = entry.size;
                a["piece_sizes"] = entry.piece_sizes;
                a["noise_points"] = entry.noise_points;
                audit.push_back(std::move(a));
            }
            meta["split_audit"] = audit;
            {
                JsonlWriter done_writer(done_path);
                done_writer.write(meta);
            }
            done_meta[cell.key()] = meta;
            std::filesystem::remove(state_path);
            ++completed;
        } catch (const EpidivError& e) {
            failures.record(cell.label(), e.code(), e.what());
        }
    }

    // cluster_meta.json aggregates params and per-cell outcomes.
    Json meta;
    meta["params"] = Json{{"max_retrieval", m.cluster.max_retrieval},
                          {"split_threshold", m.cluster.split_threshold},
                          {"dbscan_eps", m.cluster.dbscan_eps},
                          {"dbscan_min_pts", m.cluster.dbscan_min_pts}};
    Json cells_meta = Json::array();
    for (const auto& cell : cells) {
        auto it = done_meta.find(cell.key());
        if (it != done_meta.end() && it->second.contains("n")) {
            cells_meta.push_back(it->second);
        }
    }
    meta["cells"] = cells_meta;
    write_json_file(m.cluster_meta_path(), meta);

    Json summary;
    summary["cells"] = static_cast<int64_t>(cells.size());
    summary["completed"] = completed;
    summary["skipped"] = skipped;
    summary["failed"] = failures.count();
    update_run_meta(m, "cluster", summary);
    print_summary(options, "cluster", summary);
    return failures.count() > 0 ? kExitPartialFailure : kExitOk;
}

}  // namespace epidiv
