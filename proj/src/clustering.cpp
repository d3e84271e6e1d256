#include "epidiv/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace epidiv {

namespace {

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        sum += a.values[i] * b.values[i];
    }
    return sum;
}

MeaningClassTable table_from_state(const std::vector<Claim>& claims, const ClusterState& state) {
    MeaningClassTable table;
    table.n = static_cast<int64_t>(state.labels.size());
    for (size_t i = 0; i < state.labels.size(); ++i) {
        table.cluster_of[claims[i].id] = state.labels[i];
        ++table.counts[state.labels[i]];
    }
    return table;
}

}  // namespace

std::vector<int> top_k_similar(const EmbeddingVector& query,
                               const std::vector<EmbeddingVector>& points, size_t limit, int k) {
    // Embeddings are unit-norm, so dot product ranks identically to cosine.
    std::vector<std::pair<double, int>> best;  // (similarity, index), kept sorted desc
    best.reserve(static_cast<size_t>(k) + 1);
    for (size_t i = 0; i < limit; ++i) {
        double sim = dot(query, points[i]);
        if (best.size() == static_cast<size_t>(k) && sim <= best.back().first) continue;
        auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(sim, static_cast<int>(i)),
                                    [](const auto& a, const auto& b) {
                                        if (a.first != b.first) return a.first > b.first;
                                        return a.second < b.second;
                                    });
        best.insert(pos, {sim, static_cast<int>(i)});
        if (best.size() > static_cast<size_t>(k)) best.pop_back();
    }
    std::vector<int> indices;
    indices.reserve(best.size());
    for (const auto& [sim, idx] : best) indices.push_back(idx);
    return indices;
}

MeaningClassTable cluster_claims(const std::vector<Claim>& claims,
                                 const std::vector<EmbeddingVector>& embeddings,
                                 EntailmentBackend& entailment, const ClusterParams& params,
                                 ClusterState* state) {
    if (claims.size() != embeddings.size()) {
        throw EpidivError(ErrorCode::DimMismatch, "claims and embeddings must align 1:1");
    }
    if (params.max_retrieval < 1) {
        throw EpidivError(ErrorCode::ConfigError, "max_retrieval must be >= 1");
    }
    ClusterState local;
    ClusterState& st = state != nullptr ? *state : local;
    if (st.labels.size() > claims.size()) {
        throw EpidivError(ErrorCode::ConfigError, "cluster state longer than claim list");
    }
    // Resuming: verify the checkpointed prefix matches the input.
    for (size_t i = 0; i < st.seen_claim_ids.size(); ++i) {
        if (st.seen_claim_ids[i] != claims[i].id) {
            throw EpidivError(ErrorCode::ConfigError,
                              "cluster state does not match claim order at index " +
                                  std::to_string(i));
        }
    }
    st.seen_embeddings.assign(embeddings.begin(),
                              embeddings.begin() + static_cast<ptrdiff_t>(st.labels.size()));

    for (size_t j = st.labels.size(); j < claims.size(); ++j) {
        int label;
        if (j == 0) {
            label = 0;
            st.next_cluster_id = 1;
        } else {
            std::vector<int> candidates =
                top_k_similar(embeddings[j], embeddings, j, params.max_retrieval);
            double best_score = -1.0;
            int best_cluster = -1;
            for (int candidate : candidates) {
                EntailmentJudgment forward =
                    entailment.entails(claims[candidate].text, claims[j].text);
                if (!forward.is_entailment()) continue;
                EntailmentJudgment backward =
                    entailment.entails(claims[j].text, claims[candidate].text);
                if (!backward.is_entailment()) continue;
                double score = forward.prob_of(EntailmentLabel::Entailment) *
                               backward.prob_of(EntailmentLabel::Entailment);
                int cluster = st.labels[static_cast<size_t>(candidate)];
                if (score > best_score ||
                    (score == best_score && cluster < best_cluster)) {
                    best_score = score;
                    best_cluster = cluster;
                }
            }
            if (best_cluster < 0) {
                label = st.next_cluster_id++;
            } else {
                label = best_cluster;
            }
        }
        st.labels.push_back(label);
        st.seen_claim_ids.push_back(claims[j].id);
        st.seen_embeddings.push_back(embeddings[j]);
    }
    return table_from_state(claims, st);
}

std::vector<int> dbscan_cosine(const std::vector<const EmbeddingVector*>& points, double eps,
                               int min_pts) {
    const size_t n = points.size();
    std::vector<int> labels(n, -2);  // -2 unvisited, -1 noise

    // Cosine distance; points are unit vectors.
    auto distance = [&](size_t a, size_t b) { return 1.0 - dot(*points[a], *points[b]); };

    auto neighbors_of = [&](size_t p) {
        std::vector<size_t> neighbors;
        for (size_t q = 0; q < n; ++q) {
            if (distance(p, q) <= eps) neighbors.push_back(q);  // includes p itself
        }
        return neighbors;
    };

    int next_label = 0;
    for (size_t p = 0; p < n; ++p) {
        if (labels[p] != -2) continue;
        std::vector<size_t> neighbors = neighbors_of(p);
        if (neighbors.size() < static_cast<size_t>(min_pts)) {
            labels[p] = -1;
            continue;
        }
        int cluster = next_label++;
        labels[p] = cluster;
        std::deque<size_t> queue(neighbors.begin(), neighbors.end());
        while (!queue.empty()) {
            size_t q = queue.front();
            queue.pop_front();
            if (labels[q] == -1) labels[q] = cluster;  // border point
            if (labels[q] != -2) continue;
            labels[q] = cluster;
            std::vector<size_t> q_neighbors = neighbors_of(q);
            if (q_neighbors.size() >= static_cast<size_t>(min_pts)) {
                queue.insert(queue.end(), q_neighbors.begin(), q_neighbors.end());
            }
        }
    }
    return labels;
}

SplitResult split_large_clusters(const MeaningClassTable& table,
                                 const std::vector<Claim>& claims,
                                 const std::vector<EmbeddingVector>& embeddings,
                                 const ClusterParams& params) {
    if (claims.size() != embeddings.size()) {
        throw EpidivError(ErrorCode::DimMismatch, "claims and embeddings must align 1:1");
    }
    // member indices per cluster, in claim order
    std::map<int, std::vector<size_t>> members;
    for (size_t i = 0; i < claims.size(); ++i) {
        auto it = table.cluster_of.find(claims[i].id);
        if (it == table.cluster_of.end()) {
            throw EpidivError(ErrorCode::ConfigError,
                              "claim " + claims[i].id + " missing from cluster table");
        }
        members[it->second].push_back(i);
    }

    SplitResult result;
    // Sub-cluster key per claim index; re-densified afterwards by first appearance.
    std::vector<std::pair<int, int>> assignment(claims.size());  // (cluster, piece)
    for (const auto& [cluster_id, indices] : members) {
        if (static_cast<int64_t>(indices.size()) <= params.split_threshold) {
            for (size_t idx : indices) assignment[idx] = {cluster_id, 0};
            continue;
        }
        std::vector<const EmbeddingVector*> points;
        points.reserve(indices.size());
        for (size_t idx : indices) points.push_back(&embeddings[idx]);
        std::vector<int> sub_labels = dbscan_cosine(points, params.dbscan_eps, params.dbscan_min_pts);

        SplitAuditEntry audit;
        audit.original_cluster = cluster_id;
        audit.size = static_cast<int64_t>(indices.size());
        std::map<int, int64_t> piece_counts;
        int noise_counter = 0;
        for (size_t k = 0; k < indices.size(); ++k) {
            int piece;
            if (sub_labels[k] < 0) {
                // each noise point becomes its own singleton class
                piece = -(++noise_counter);
                ++audit.noise_points;
            } else {
                piece = sub_labels[k];
                ++piece_counts[piece];
            }
            assignment[indices[k]] = {cluster_id, piece};
        }
        for (const auto& [piece, count] : piece_counts) audit.piece_sizes.push_back(count);
        result.audit.push_back(std::move(audit));
    }

    // Re-densify in order of first appearance over the claim sequence.
    std::map<std::pair<int, int>, int> dense_ids;
    result.table.n = table.n;
    for (size_t i = 0; i < claims.size(); ++i) {
        auto key = assignment[i];
        auto it = dense_ids.find(key);
        int dense;
        if (it == dense_ids.end()) {
            dense = static_cast<int>(dense_ids.size());
            dense_ids.emplace(key, dense);
        } else {
            dense = it->second;
        }
        result.table.cluster_of[claims[i].id] = dense;
        ++result.table.counts[dense];
    }
    return result;
}

RetrievalCalibration calibrate_retrieval_depth(const std::vector<Claim>& claims,
                                               const std::vector<EmbeddingVector>& embeddings,
                                               EntailmentBackend& entailment, int max_n,
                                               double target_mass) {
    RetrievalCalibration calibration;
    if (claims.empty()) return calibration;
    calibration.rank_histogram.assign(static_cast<size_t>(max_n), 0);

    ClusterState st;
    for (size_t j = 0; j < claims.size(); ++j) {
        int label;
        if (j == 0) {
            label = 0;
            st.next_cluster_id = 1;
        } else {
            std::vector<int> candidates = top_k_similar(embeddings[j], embeddings, j, max_n);
            double best_score = -1.0;
            int best_cluster = -1;
            int best_rank = -1;
            for (size_t rank = 0; rank < candidates.size(); ++rank) {
                int candidate = candidates[rank];
                EntailmentJudgment forward =
                    entailment.entails(claims[candidate].text, claims[j].text);
                if (!forward.is_entailment()) continue;
                EntailmentJudgment backward =
                    entailment.entails(claims[j].text, claims[candidate].text);
                if (!backward.is_entailment()) continue;
                double score = forward.prob_of(EntailmentLabel::Entailment) *
                               backward.prob_of(EntailmentLabel::Entailment);
                int cluster = st.labels[static_cast<size_t>(candidate)];
                if (score > best_score || (score == best_score && cluster < best_cluster)) {
                    best_score = score;
                    best_cluster = cluster;
                    best_rank = static_cast<int>(rank);
                }
            }
            if (best_cluster < 0) {
                label = st.next_cluster_id++;
            } else {
                label = best_cluster;
                ++calibration.rank_histogram[static_cast<size_t>(best_rank)];
                ++calibration.total_joins;
            }
        }
        st.labels.push_back(label);
    }

    if (calibration.total_joins > 0) {
        int64_t cumulative = 0;
        int64_t needed = static_cast<int64_t>(
            std::ceil(target_mass * static_cast<double>(calibration.total_joins)));
        for (size_t rank = 0; rank < calibration.rank_histogram.size(); ++rank) {
            cumulative += calibration.rank_histogram[rank];
            if (cumulative >= needed) {
                calibration.recommended_n = static_cast<int>(rank) + 1;
                break;
            }
        }
    }
    return calibration;
}

}  // namespace epidiv
