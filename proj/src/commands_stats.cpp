#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "epidiv/commands.hpp"
#include "epidiv/diversity.hpp"
#include "epidiv/jsonl.hpp"
#include "epidiv/mock_backends.hpp"
#include "epidiv/report.hpp"
#include "epidiv/represent.hpp"
#include "epidiv/rng.hpp"
#include "epidiv/version.hpp"

namespace epidiv {

namespace {

RunManifest apply_overrides(const RunManifest& manifest, const CommandOptions& options) {
    RunManifest m = manifest;
    if (options.stage_seed) m.seed = *options.stage_seed;
    if (options.decomp_prompt) {
        m.decomposition_prompt = decomposition_prompt_from_string(*options.decomp_prompt);
    }
    return m;
}

int validate_or_report(const RunManifest& m, const CommandOptions& options) {
    std::vector<Violation> violations = validate_run_manifest(m);
    if (violations.empty()) return kExitOk;
    if (!options.quiet) {
        for (const auto& v : violations) {
            std::cerr << "config error [" << v.code << "] at " << v.context << ": " << v.message
                      << "\n";
        }
    }
    return kExitConfigError;
}

bool checkpoint_or_error(const std::filesystem::path& path, const std::string& stage,
                         const CommandOptions& options) {
    if (std::filesystem::exists(path)) return true;
    if (!options.quiet) {
        std::cerr << stage << ": missing checkpoint " << path.filename().string() << " ("
                  << path.string() << "); run the producing stage first\n";
    }
    return false;
}

void emit_summary(const CommandOptions& options, const std::string& stage, const Json& summary) {
    if (options.quiet) return;
    std::cout << stage << ":";
    for (const auto& [key, value] : summary.items()) {
        std::cout << " " << key << "=" << value.dump();
    }
    std::cout << "\n";
}

void merge_run_meta(const RunManifest& manifest, const std::string& stage, const Json& summary) {
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

struct CellSequence {
    std::string generator_id;
    std::string topic_id;
    GenerationSetting setting = GenerationSetting::IFT;
    std::vector<int> class_sequence;  // cluster id per claim, claim order
    std::vector<std::string> claim_ids;
};

// Joins claims.jsonl with clusters.jsonl into per-cell cluster-id sequences,
// cells ordered by first appearance.
std::vector<CellSequence> load_cell_sequences(const RunManifest& m) {
    std::unordered_map<std::string, int> assignment;
    for_each_jsonl(m.clusters_path(), [&](const Json& j) {
        assignment[j.at("claim_id").get<std::string>()] = j.at("cluster_id").get<int>();
    });
    std::vector<CellSequence> cells;
    std::unordered_map<std::string, size_t> index;
    for_each_jsonl(m.claims_path(), [&](const Json& j) {
        Claim claim = claim_from_json(j);
        auto cluster_it = assignment.find(claim.id);
        if (cluster_it == assignment.end()) {
            throw EpidivError(ErrorCode::CheckpointMissing,
                              "claim " + claim.id + " has no cluster assignment; rerun cluster");
        }
        std::string key = claim.response_ref.generator_id + "\x1f" + claim.topic_id + "\x1f" +
                          to_string(claim.response_ref.setting);
        auto [it, inserted] = index.emplace(key, cells.size());
        if (inserted) {
            CellSequence cell;
            cell.generator_id = claim.response_ref.generator_id;
            cell.topic_id = claim.topic_id;
            cell.setting = claim.response_ref.setting;
            cells.push_back(std::move(cell));
        }
        cells[it->second].class_sequence.push_back(cluster_it->second);
        cells[it->second].claim_ids.push_back(claim.id);
    });
    return cells;
}

}  // namespace

int cmd_diversity(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = apply_overrides(manifest_in, options);
    if (int rc = validate_or_report(m, options); rc != kExitOk) return rc;
    if (!checkpoint_or_error(m.claims_path(), "diversity", options)) return kExitConfigError;
    if (!checkpoint_or_error(m.clusters_path(), "diversity", options)) return kExitConfigError;

    std::vector<CellSequence> cells;
    try {
        cells = load_cell_sequences(m);
    } catch (const EpidivError& e) {
        if (!options.quiet) std::cerr << "diversity: " << e.what() << "\n";
        return kExitConfigError;
    }

    // Per-topic rarefaction target: the minimum coverage achieved by an LLM
    // cell (manifest override wins). Search cells are rarefied only when
    // their own coverage exceeds that minimum.
    std::map<std::string, double> topic_target;
    for (const auto& cell : cells) {
        if (cell.setting == GenerationSetting::SEARCH) continue;
        if (cell.class_sequence.size() < 2) continue;
        AbundanceVector v = AbundanceVector::from_table([&] {
            MeaningClassTable t;
            for (size_t i = 0; i < cell.class_sequence.size(); ++i) {
                ++t.counts[cell.class_sequence[i]];
            }
            t.n = static_cast<int64_t>(cell.class_sequence.size());
            return t;
        }());
        CoverageEstimate cov = estimate_coverage(v);
        if (!cov.defined || cov.value <= 0.0) continue;
        auto [it, inserted] = topic_target.emplace(cell.topic_id, cov.value);
        if (!inserted) it->second = std::min(it->second, cov.value);
    }
    if (m.rarefaction_target) {
        for (auto& [topic, target] : topic_target) target = *m.rarefaction_target;
    }

    JsonlWriter writer(m.diversity_path(), /*append=*/false);
    int64_t reports = 0;
    for (const auto& cell : cells) {
        ReportOptions report_options;
        report_options.bootstrap_replicates = m.bootstrap_replicates;
        report_options.bootstrap_level = m.bootstrap_level;
        RarefactionPlan plan;
        bool rarefy = false;
        auto target_it = topic_target.find(cell.topic_id);
        if (target_it != topic_target.end() && !cell.class_sequence.empty()) {
            plan.target_coverage = target_it->second;
            plan.resamples = m.rarefaction_resamples;
            plan.seed = derive_seed(m.seed, "rarefaction",
                                    cell.generator_id + "|" + cell.topic_id + "|" +
                                        to_string(cell.setting));
            rarefy = true;
            if (cell.setting == GenerationSetting::SEARCH) {
                MeaningClassTable t;
                for (int c : cell.class_sequence) ++t.counts[c];
                t.n = static_cast<int64_t>(cell.class_sequence.size());
                CoverageEstimate cov = estimate_coverage(AbundanceVector::from_table(t));
                // search is a lower bound: only rarefied when above the LLM minimum
                if (!cov.defined || cov.value <= plan.target_coverage) rarefy = false;
            }
        }
        if (rarefy) report_options.plan = &plan;
        DiversityReport report = build_diversity_report(
            cell.generator_id, cell.topic_id, cell.setting, cell.class_sequence, report_options);
        if (!rarefy && target_it != topic_target.end() &&
            cell.setting == GenerationSetting::SEARCH) {
            report.flags.push_back("not_rarefied");
        }
        writer.write(to_json(report));
        ++reports;
    }

    Json summary;
    summary["cells"] = static_cast<int64_t>(cells.size());
    summary["reports"] = reports;
    summary["resamples"] = m.rarefaction_resamples;
    merge_run_meta(m, "diversity", summary);
    emit_summary(options, "diversity", summary);
    return kExitOk;
}

namespace detail {

std::vector<Claim> round_robin_interleave(
    const std::vector<std::pair<std::string, std::vector<Claim>>>& groups) {
    std::vector<Claim> pooled;
    size_t total = 0;
    for (const auto& [key, claims] : groups) total += claims.size();
    pooled.reserve(total);
    size_t round = 0;
    bool any = true;
    while (any) {
        any = false;
        for (const auto& [key, claims] : groups) {
            if (round < claims.size()) {
                pooled.push_back(claims[round]);
                any = true;
            }
        }
        ++round;
    }
    return pooled;
}

}  // namespace detail

int cmd_compare(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = apply_overrides(manifest_in, options);
    if (int rc = validate_or_report(m, options); rc != kExitOk) return rc;
    if (!checkpoint_or_error(m.claims_path(), "compare", options)) return kExitConfigError;

    // groups: per topic, claims of the compare setting per generator, plus
    // SEARCH claims as the pseudo-generator "search"
    std::map<std::string, std::map<std::string, std::vector<Claim>>> by_topic;
    for_each_jsonl(m.claims_path(), [&](const Json& j) {
        Claim claim = claim_from_json(j);
        std::string group;
        if (claim.response_ref.setting == GenerationSetting::SEARCH) {
            group = "search";
        } else if (claim.response_ref.setting == m.compare_setting) {
            group = claim.response_ref.generator_id;
        } else {
            return;
        }
        by_topic[claim.topic_id][group].push_back(std::move(claim));
    });

    // global generator list in manifest order, search last
    std::vector<std::string> generator_ids;
    for (const auto& gen : m.generators) generator_ids.push_back(gen.id);
    bool has_search = false;
    for (const auto& [topic, groups] : by_topic) {
        if (groups.count("search")) has_search = true;
    }
    if (has_search) generator_ids.push_back("search");
    std::unordered_map<std::string, size_t> generator_index;
    for (size_t i = 0; i < generator_ids.size(); ++i) generator_index[generator_ids[i]] = i;

    auto embedding = make_embedding_backend(m.embedding_backend);
    auto entailment = make_entailment_backend(m.entailment_backend);

    size_t g = generator_ids.size();
    std::vector<std::vector<double>> mean(g, std::vector<double>(g, 0.0));
    std::vector<std::vector<int64_t>> mean_n(g, std::vector<int64_t>(g, 0));
    Json topics_json = Json::object();
    int64_t topics_compared = 0;

    // topics in manifest order first, then any extras (e.g. simulated)
    std::vector<std::string> topic_order;
    for (const auto& t : m.topics) {
        if (by_topic.count(t.id)) topic_order.push_back(t.id);
    }
    for (const auto& [topic, groups] : by_topic) {
        if (std::find(topic_order.begin(), topic_order.end(), topic) == topic_order.end()) {
            topic_order.push_back(topic);
        }
    }

    for (const std::string& topic : topic_order) {
        const auto& groups_map = by_topic.at(topic);
        std::vector<std::pair<std::string, std::vector<Claim>>> groups;
        for (const std::string& gid : generator_ids) {
            auto it = groups_map.find(gid);
            if (it != groups_map.end() && !it->second.empty()) {
                groups.emplace_back(gid, it->second);
            }
        }
        if (groups.size() < 2) continue;

        // one joint clustering pass over the interleaved pool
        std::vector<Claim> pooled = detail::round_robin_interleave(groups);
        std::vector<std::string> texts;
        texts.reserve(pooled.size());
        for (const auto& claim : pooled) texts.push_back(claim.text);
        MeaningClassTable table;
        std::vector<EmbeddingVector> embeddings;
        try {
            embeddings = embed_batch(*embedding, texts);
            table = cluster_claims(pooled, embeddings, *entailment, m.cluster);
            table = split_large_clusters(table, pooled, embeddings, m.cluster).table;
        } catch (const EpidivError& e) {
            if (!options.quiet) std::cerr << "compare: topic " << topic << ": " << e.what() << "\n";
            return kExitPartialFailure;
        }

        std::unordered_map<std::string, size_t> group_of_claim;
        for (const auto& [gid, claims] : groups) {
            for (const auto& claim : claims) group_of_claim[claim.id] = generator_index[gid];
        }
        int num_classes = table.num_classes();
        std::vector<std::vector<double>> dist(g, std::vector<double>(num_classes, 0.0));
        std::vector<int64_t> totals(g, 0);
        for (const auto& claim : pooled) {
            size_t gi = group_of_claim[claim.id];
            dist[gi][static_cast<size_t>(table.cluster_of.at(claim.id))] += 1.0;
            ++totals[gi];
        }
        for (size_t gi = 0; gi < g; ++gi) {
            if (totals[gi] == 0) continue;
            for (double& v : dist[gi]) v /= static_cast<double>(totals[gi]);
        }

        std::vector<std::string> present;
        for (const auto& [gid, claims] : groups) present.push_back(gid);
        // each unordered pair computed once and mirrored: exact symmetry
        std::vector<std::vector<double>> values(present.size(),
                                                std::vector<double>(present.size(), 0.0));
        for (size_t a = 0; a < present.size(); ++a) {
            for (size_t b = a + 1; b < present.size(); ++b) {
                size_t ia = generator_index[present[a]];
                size_t ib = generator_index[present[b]];
                double value = jensen_shannon_divergence(dist[ia], dist[ib]);
                values[a][b] = value;
                values[b][a] = value;
                mean[ia][ib] += value;
                mean[ib][ia] += value;
                ++mean_n[ia][ib];
                ++mean_n[ib][ia];
            }
        }
        Json matrix = Json::array();
        for (size_t a = 0; a < present.size(); ++a) {
            Json row = Json::array();
            for (size_t b = 0; b < present.size(); ++b) row.push_back(values[a][b]);
            matrix.push_back(std::move(row));
        }
        Json entry;
        entry["generators"] = present;
        entry["matrix"] = matrix;
        topics_json[topic] = std::move(entry);
        ++topics_compared;
    }

    Json out;
    out["run_id"] = m.run_id;
    out["config_hash"] = manifest_config_hash(m);
    out["generators"] = generator_ids;
    Json mean_matrix = Json::array();
    for (size_t a = 0; a < g; ++a) {
        Json row = Json::array();
        for (size_t b = 0; b < g; ++b) {
            if (a == b) {
                row.push_back(0.0);
            } else if (mean_n[a][b] > 0) {
                row.push_back(mean[a][b] / static_cast<double>(mean_n[a][b]));
            } else {
                row.push_back(nullptr);  // pair never co-occurred in a topic
            }
        }
        mean_matrix.push_back(std::move(row));
    }
    out["matrix"] = mean_matrix;
    out["topics"] = topics_json;
    write_json_file(m.jsd_matrix_path(), out);

    Json summary;
    summary["topics"] = topics_compared;
    summary["generators"] = static_cast<int64_t>(generator_ids.size());
    merge_run_meta(m, "compare", summary);
    emit_summary(options, "compare", summary);
    return kExitOk;
}

int cmd_represent(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = apply_overrides(manifest_in, options);
    if (int rc = validate_or_report(m, options); rc != kExitOk) return rc;
    if (!checkpoint_or_error(m.claims_path(), "represent", options)) return kExitConfigError;
    if (!checkpoint_or_error(m.clusters_path(), "represent", options)) return kExitConfigError;
    if (m.references_dir.empty() || !std::filesystem::exists(m.references_dir)) {
        if (!options.quiet) {
            std::cerr << "represent: references_dir is not configured or does not exist\n";
        }
        return kExitConfigError;
    }

    std::unordered_map<std::string, int> assignment;
    for_each_jsonl(m.clusters_path(), [&](const Json& j) {
        assignment[j.at("claim_id").get<std::string>()] = j.at("cluster_id").get<int>();
    });

    // IFT claims per (topic, generator); RAG claims are excluded so reference
    // text cannot leak into what it is matched against.
    std::map<std::string, std::map<std::string, std::vector<Claim>>> ift_claims;
    for_each_jsonl(m.claims_path(), [&](const Json& j) {
        Claim claim = claim_from_json(j);
        if (claim.response_ref.setting != GenerationSetting::IFT) return;
        ift_claims[claim.topic_id][claim.response_ref.generator_id].push_back(std::move(claim));
    });

    auto embedding = make_embedding_backend(m.embedding_backend);
    auto entailment = make_entailment_backend(m.entailment_backend);

    std::filesystem::path done_path = m.run_dir() / "represent_done.jsonl";
    std::unordered_set<std::string> done;
    if (std::filesystem::exists(done_path)) {
        repair_jsonl_tail(done_path);
        for_each_jsonl(done_path, [&](const Json& j) { done.insert(j.at("key").get<std::string>()); });
    }
    {
        // drop match rows of interrupted units
        std::unordered_set<std::string> done_copy = done;
        repair_jsonl_tail(m.matches_path());
        if (std::filesystem::exists(m.matches_path())) {
            std::vector<Json> keep;
            bool dropped = false;
            for_each_jsonl(m.matches_path(), [&](const Json& j) {
                std::string key = j.at("topic_id").get<std::string>() + "\x1f" +
                                  j.at("language").get<std::string>() + "\x1f" +
                                  j.at("generator_id").get<std::string>();
                if (done_copy.count(key)) {
                    keep.push_back(j);
                } else {
                    dropped = true;
                }
            });
            if (dropped) {
                JsonlWriter rewriter(m.matches_path(), /*append=*/false);
                for (const auto& j : keep) rewriter.write(j);
            }
        }
    }

    MatchParams params;
    params.top_k = m.represent_top_k;
    params.generation_language = m.generation_language;

    JsonlWriter match_writer(m.matches_path());
    JsonlWriter report_writer(m.representativeness_path(), /*append=*/false);
    int64_t units = 0, skipped = 0, match_count = 0;
    // all matches per unit key, for report building (including resumed units)
    std::map<std::string, std::vector<MatchRecord>> unit_matches;
    if (std::filesystem::exists(m.matches_path())) {
        for_each_jsonl(m.matches_path(), [&](const Json& j) {
            MatchRecord record;
            record.reference_claim_id = j.at("reference_claim_id").get<std::string>();
            record.generated_claim_id = j.at("generated_claim_id").get<std::string>();
            record.cosine = j.at("cosine").get<double>();
            std::string key = j.at("topic_id").get<std::string>() + "\x1f" +
                              j.at("language").get<std::string>() + "\x1f" +
                              j.at("generator_id").get<std::string>();
            unit_matches[key].push_back(std::move(record));
        });
    }

    for (const auto& topic : m.topics) {
        std::filesystem::path topic_refs = m.references_dir / topic.id;
        if (!std::filesystem::exists(topic_refs)) continue;
        std::vector<std::filesystem::path> language_files;
        for (const auto& entry : std::filesystem::directory_iterator(topic_refs)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                language_files.push_back(entry.path());
            }
        }
        std::sort(language_files.begin(), language_files.end());
        for (const auto& file : language_files) {
            std::string language = file.stem().string();
            if (language != m.generation_language && !m.embedding_backend.multilingual) {
                if (!options.quiet) {
                    std::cerr << "represent: matching " << language << " references for topic "
                              << topic.id
                              << " requires a multilingual embedding backend (set "
                                 "embedding_backend.multilingual)\n";
                }
                return kExitConfigError;
            }
            std::vector<ReferenceClaim> references;
            for_each_jsonl(file, [&](const Json& j) {
                ReferenceClaim ref;
                ref.id = j.at("id").get<std::string>();
                ref.topic_id = j.value("topic_id", topic.id);
                ref.language = j.value("language", language);
                ref.text = j.at("text").get<std::string>();
                references.push_back(std::move(ref));
            });
            auto topic_it = ift_claims.find(topic.id);
            if (topic_it == ift_claims.end()) continue;
            for (const auto& [generator_id, claims] : topic_it->second) {
                std::string key = topic.id + "\x1f" + language + "\x1f" + generator_id;
                if (done.count(key)) {
                    ++skipped;
                    continue;
                }
                if (references.empty() || claims.empty()) continue;
                std::vector<std::string> texts;
                texts.reserve(claims.size());
                for (const auto& c : claims) texts.push_back(c.text);
                std::vector<MatchRecord> matches;
                try {
                    std::vector<EmbeddingVector> claim_embeddings =
                        embed_batch(*embedding, texts);
                    matches = match_claims(references, claims, claim_embeddings, *embedding,
                                           *entailment, params);
                } catch (const EpidivError& e) {
                    if (!options.quiet) {
                        std::cerr << "represent: " << topic.id << "/" << language << "/"
                                  << generator_id << ": " << e.what() << "\n";
                    }
                    return kExitPartialFailure;
                }
                for (const auto& match : matches) {
                    Json j;
                    j["reference_claim_id"] = match.reference_claim_id;
                    j["generated_claim_id"] = match.generated_claim_id;
                    j["cosine"] = match.cosine;
                    j["mutual_entailment"] = true;
                    j["topic_id"] = topic.id;
                    j["language"] = language;
                    j["generator_id"] = generator_id;
                    match_writer.write(j);
                }
                match_count += static_cast<int64_t>(matches.size());
                unit_matches[key] = std::move(matches);
                JsonlWriter done_writer(done_path);
                done_writer.write(Json{{"key", key}});
                done.insert(key);
                ++units;
            }
        }
    }

    // minimal-representativeness reports for every completed matching unit,
    // reusing the per-cell clustering (zero matches still yields a report)
    std::vector<std::string> unit_keys(done.begin(), done.end());
    std::sort(unit_keys.begin(), unit_keys.end());
    for (const std::string& key : unit_keys) {
        size_t p1 = key.find('\x1f');
        size_t p2 = key.rfind('\x1f');
        if (p1 == std::string::npos || p2 == p1) continue;
        std::string topic_id = key.substr(0, p1);
        std::string language = key.substr(p1 + 1, p2 - p1 - 1);
        std::string generator_id = key.substr(p2 + 1);
        auto topic_it = ift_claims.find(topic_id);
        if (topic_it == ift_claims.end()) continue;
        auto gen_it = topic_it->second.find(generator_id);
        if (gen_it == topic_it->second.end()) continue;
        const std::vector<Claim>& claims = gen_it->second;
        MeaningClassTable table;
        for (const auto& claim : claims) {
            auto it = assignment.find(claim.id);
            if (it == assignment.end()) continue;
            table.cluster_of[claim.id] = it->second;
            ++table.counts[it->second];
            ++table.n;
        }
        auto matches_it = unit_matches.find(key);
        static const std::vector<MatchRecord> kNoMatches;
        const auto& matches = matches_it == unit_matches.end() ? kNoMatches : matches_it->second;
        DiversityReport report = minimal_representativeness_hsd(
            claims, table, matches, generator_id, topic_id, GenerationSetting::IFT);
        Json j = to_json(report);
        j["language"] = language;
        report_writer.write(j);
    }

    Json summary;
    summary["units"] = units;
    summary["skipped"] = skipped;
    summary["matches"] = match_count;
    merge_run_meta(m, "represent", summary);
    emit_summary(options, "represent", summary);
    return kExitOk;
}

int cmd_simulate(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = apply_overrides(manifest_in, options);
    if (!m.simulate) {
        if (!options.quiet) std::cerr << "simulate: manifest has no simulate section\n";
        return kExitConfigError;
    }
    std::filesystem::create_directories(m.run_dir());

    PopulationSpec spec = m.simulate->population;
    if (spec.seed == 0) spec.seed = derive_seed(m.seed, "simulate", m.simulate->topic_id);
    SampledPopulation sampled = sample_population(spec);

    ResponseRef ref;
    ref.generator_id = m.simulate->generator_id;
    ref.setting = GenerationSetting::IFT;
    ref.seed = spec.seed;

    JsonlWriter writer(m.claims_path(), /*append=*/false);
    for (size_t i = 0; i < sampled.claims.size(); ++i) {
        Claim claim;
        claim.topic_id = m.simulate->topic_id;
        claim.response_ref = ref;
        claim.chunk_index = static_cast<int>(i / 3);
        claim.text = sampled.claims[i];
        claim.id = make_claim_id(claim.topic_id, ref, claim.chunk_index,
                                 static_cast<int>(i % 3));
        writer.write(to_json(claim));
    }

    Json truth;
    truth["topic_id"] = m.simulate->topic_id;
    truth["generator_id"] = m.simulate->generator_id;
    truth["distribution"] = sampled.distribution;
    truth["true_hsd"] = true_hsd(sampled.distribution);
    truth["n_samples"] = spec.n_samples;
    truth["seed"] = spec.seed;
    write_json_file(m.truth_path(), truth);

    Json summary;
    summary["claims"] = static_cast<int64_t>(sampled.claims.size());
    summary["classes"] = static_cast<int64_t>(sampled.distribution.size());
    summary["true_hsd"] = true_hsd(sampled.distribution);
    merge_run_meta(m, "simulate", summary);
    emit_summary(options, "simulate", summary);
    return kExitOk;
}

int cmd_report(const RunManifest& manifest_in, const CommandOptions& options) {
    RunManifest m = apply_overrides(manifest_in, options);
    if (!checkpoint_or_error(m.diversity_path(), "report", options)) return kExitConfigError;
    try {
        emit_report(m);
    } catch (const EpidivError& e) {
        if (!options.quiet) std::cerr << "report: " << e.what() << "\n";
        return kExitPartialFailure;
    }
    Json summary;
    summary["report_dir"] = m.report_dir().filename().string();
    merge_run_meta(m, "report", summary);
    emit_summary(options, "report", summary);
    return kExitOk;
}

}  // namespace epidiv
