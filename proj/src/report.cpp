#include "epidiv/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "epidiv/diversity.hpp"
#include "epidiv/jsonl.hpp"
#include "epidiv/rng.hpp"
#include "epidiv/version.hpp"

namespace epidiv {

namespace {

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += "\"";
    return quoted;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

struct MeanWithCi {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int64_t n = 0;
};

MeanWithCi summarize(const std::vector<double>& values, uint64_t seed, int replicates,
                     double level) {
    MeanWithCi out;
    out.n = static_cast<int64_t>(values.size());
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    BootstrapInterval ci = bootstrap_ci(values, replicates, level, seed);
    out.ci_low = ci.low;
    out.ci_high = ci.high;
    return out;
}

}  // namespace

void emit_report(const RunManifest& m) {
    std::vector<DiversityReport> reports;
    for_each_jsonl(m.diversity_path(),
                   [&](const Json& j) { reports.push_back(diversity_report_from_json(j)); });

    std::filesystem::create_directories(m.report_dir());
    const std::string config_hash = manifest_config_hash(m);

    auto stamp = [&](Json& j) {
        j["run_id"] = m.run_id;
        j["config_hash"] = config_hash;
    };

    // --- hsd_table.csv: one row per (generator, topic, setting) cell ---
    {
        std::ofstream csv(m.report_dir() / "hsd_table.csv", std::ios::trunc);
        csv << "# run_id=" << m.run_id << " config_hash=" << config_hash
            << " tool_version=" << kToolVersion << "\n";
        csv << "generator_id,topic_id,setting,n,num_classes,f1,f2,coverage,hsd,"
               "ci_low,ci_high,rarefied_to_coverage,flags\n";
        for (const auto& r : reports) {
            csv << csv_field(r.generator_id) << ',' << csv_field(r.topic_id) << ','
                << to_string(r.setting) << ',' << r.n << ',' << r.num_classes << ',' << r.f1
                << ',' << r.f2 << ',' << format_double(r.coverage) << ','
                << format_double(r.hsd) << ',';
            if (r.ci_low) csv << format_double(*r.ci_low);
            csv << ',';
            if (r.ci_high) csv << format_double(*r.ci_high);
            csv << ',';
            if (r.rarefied_to_coverage) csv << format_double(*r.rarefied_to_coverage);
            csv << ',';
            std::string flags;
            for (const auto& f : r.flags) {
                if (!flags.empty()) flags += ';';
                flags += f;
            }
            csv << csv_field(flags) << "\n";
        }
    }

    // --- fig2: per-(generator, setting) mean HSD over topics with bootstrap CI ---
    {
        std::map<std::pair<std::string, GenerationSetting>, std::vector<double>> series;
        for (const auto& r : reports) {
            if (r.n == 0) continue;
            series[{r.generator_id, r.setting}].push_back(r.hsd);
        }
        Json fig;
        stamp(fig);
        fig["figure"] = "hsd_by_generator";
        Json rows = Json::array();
        for (const auto& [key, values] : series) {
            MeanWithCi s = summarize(values, derive_seed(m.seed, "fig2", key.first),
                                     m.bootstrap_replicates, m.bootstrap_level);
            Json row;
            row["generator_id"] = key.first;
            row["setting"] = to_string(key.second);
            for (const auto& gen : m.generators) {
                if (gen.id != key.first) continue;
                if (gen.family) row["family"] = *gen.family;
                if (gen.size_label) row["size"] = *gen.size_label;
                if (gen.release_date) row["release_date"] = *gen.release_date;
            }
            row["topics"] = s.n;
            row["hsd_mean"] = s.mean;
            row["ci_low"] = s.ci_low;
            row["ci_high"] = s.ci_high;
            rows.push_back(std::move(row));
        }
        fig["series"] = rows;
        write_json_file(m.report_dir() / "fig2_hsd_by_generator.json", fig);
    }

    // --- fig3: top-ten cluster histograms per cell ---
    if (std::filesystem::exists(m.clusters_path()) &&
        std::filesystem::exists(m.claims_path())) {
        std::unordered_map<std::string, int> assignment;
        for_each_jsonl(m.clusters_path(), [&](const Json& j) {
            assignment[j.at("claim_id").get<std::string>()] = j.at("cluster_id").get<int>();
        });
        struct CellHistogram {
            std::map<int, int64_t> counts;
            std::map<int, std::string> sample_text;
        };
        std::map<std::string, CellHistogram> cells;
        for_each_jsonl(m.claims_path(), [&](const Json& j) {
            Claim claim = claim_from_json(j);
            auto it = assignment.find(claim.id);
            if (it == assignment.end()) return;
            std::string key = claim.response_ref.generator_id + "/" + claim.topic_id + "/" +
                              to_string(claim.response_ref.setting);
            CellHistogram& hist = cells[key];
            ++hist.counts[it->second];
            hist.sample_text.emplace(it->second, claim.text);
        });
        Json fig;
        stamp(fig);
        fig["figure"] = "top_clusters";
        Json rows = Json::array();
        for (const auto& [key, hist] : cells) {
            std::vector<std::pair<int64_t, int>> ranked;
            for (const auto& [cluster, count] : hist.counts) {
                ranked.emplace_back(count, cluster);
            }
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            Json clusters = Json::array();
            for (size_t i = 0; i < ranked.size() && i < 10; ++i) {
                Json c;
                c["cluster_id"] = ranked[i].second;
                c["count"] = ranked[i].first;
                c["sample_claim"] = hist.sample_text.at(ranked[i].second);
                clusters.push_back(std::move(c));
            }
            Json row;
            row["cell"] = key;
            row["clusters"] = clusters;
            rows.push_back(std::move(row));
        }
        fig["cells"] = rows;
        write_json_file(m.report_dir() / "fig3_top_clusters.json", fig);
    }

    // --- fig4: JSD heatmap data (pass-through of jsd_matrix.json) ---
    if (std::filesystem::exists(m.jsd_matrix_path())) {
        Json jsd = read_json_file(m.jsd_matrix_path());
        Json fig;
        stamp(fig);
        fig["figure"] = "jsd_heatmap";
        fig["generators"] = jsd.at("generators");
        fig["matrix"] = jsd.at("matrix");
        write_json_file(m.report_dir() / "fig4_jsd_heatmap.json", fig);
    }

    // --- fig5: per-country diversity bars by setting ---
    {
        std::unordered_map<std::string, std::string> topic_country;
        for (const auto& t : m.topics) {
            topic_country[t.id] = t.country.value_or("general");
        }
        std::map<std::pair<std::string, GenerationSetting>, std::vector<double>> series;
        for (const auto& r : reports) {
            if (r.n == 0) continue;
            auto it = topic_country.find(r.topic_id);
            if (it == topic_country.end()) continue;
            series[{it->second, r.setting}].push_back(r.hsd);
        }
        Json fig;
        stamp(fig);
        fig["figure"] = "hsd_by_country";
        Json rows = Json::array();
        for (const auto& [key, values] : series) {
            MeanWithCi s = summarize(values, derive_seed(m.seed, "fig5", key.first),
                                     m.bootstrap_replicates, m.bootstrap_level);
            Json row;
            row["country"] = key.first;
            row["setting"] = to_string(key.second);
            row["cells"] = s.n;
            row["hsd_mean"] = s.mean;
            row["ci_low"] = s.ci_low;
            row["ci_high"] = s.ci_high;
            rows.push_back(std::move(row));
        }
        fig["series"] = rows;
        write_json_file(m.report_dir() / "fig5_hsd_by_country.json", fig);
    }

    // --- fig6: representativeness bars (English vs local) ---
    if (std::filesystem::exists(m.representativeness_path())) {
        std::unordered_map<std::string, std::string> topic_country;
        for (const auto& t : m.topics) {
            topic_country[t.id] = t.country.value_or("general");
        }
        std::map<std::pair<std::string, std::string>, std::vector<double>> series;
        for_each_jsonl(m.representativeness_path(), [&](const Json& j) {
            DiversityReport r = diversity_report_from_json(j);
            std::string language = j.at("language").get<std::string>();
            auto it = topic_country.find(r.topic_id);
            std::string country = it == topic_country.end() ? "general" : it->second;
            series[{country, language}].push_back(r.hsd);
        });
        Json fig;
        stamp(fig);
        fig["figure"] = "representativeness_by_country";
        Json rows = Json::array();
        for (const auto& [key, values] : series) {
            MeanWithCi s =
                summarize(values, derive_seed(m.seed, "fig6", key.first + "|" + key.second),
                          m.bootstrap_replicates, m.bootstrap_level);
            Json row;
            row["country"] = key.first;
            row["language"] = key.second;
            row["units"] = s.n;
            row["hsd_mean"] = s.mean;
            row["ci_low"] = s.ci_low;
            row["ci_high"] = s.ci_high;
            rows.push_back(std::move(row));
        }
        fig["series"] = rows;
        write_json_file(m.report_dir() / "fig6_representativeness.json", fig);
    }

    // --- summary.md: headline numbers ---
    {
        std::ostringstream md;
        md << "# Run summary\n\n";
        md << "- run id: `" << m.run_id << "`\n";
        md << "- config hash: `" << config_hash << "`\n";
        md << "- cells reported: " << reports.size() << "\n\n";
        md << "| generator | topic | setting | n | classes | coverage | HSD |\n";
        md << "|---|---|---|---|---|---|---|\n";
        for (const auto& r : reports) {
            md << "| " << r.generator_id << " | " << r.topic_id << " | " << to_string(r.setting)
               << " | " << r.n << " | " << r.num_classes << " | " << format_double(r.coverage)
               << " | " << format_double(r.hsd) << " |\n";
        }
        write_text_file(m.report_dir() / "summary.md", md.str());
    }
}

}  // namespace epidiv
