#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "epidiv/backends.hpp"
#include "epidiv/domain.hpp"

namespace epidiv {

struct ClusterParams {
    int max_retrieval = 6;      // N: candidate predecessors per claim
    int split_threshold = 50;   // clusters larger than this are re-examined
    double dbscan_eps = 0.2;    // cosine distance
    int dbscan_min_pts = 3;
};

// Online state of the incremental clustering pass: claims seen so far with
// their embeddings and assigned cluster labels, in input order.
struct ClusterState {
    std::vector<std::string> seen_claim_ids;
    std::vector<EmbeddingVector> seen_embeddings;
    std::vector<int> labels;
    int next_cluster_id = 0;
};

// Incremental mutual-entailment clustering. Each claim retrieves its N most
// cosine-similar predecessors, keeps the candidates it mutually entails
// (argmax entailment both ways), scores them by the product of directional
// entailment probabilities, and joins the best candidate's cluster; with no
// mutually entailed candidate it founds a new cluster. Ties resolve to the
// lowest cluster id. On backend failure the exception carries on after the
// caller persists `state`, which always reflects completed claims only.
MeaningClassTable cluster_claims(const std::vector<Claim>& claims,
                                 const std::vector<EmbeddingVector>& embeddings,
                                 EntailmentBackend& entailment, const ClusterParams& params,
                                 ClusterState* state = nullptr);

struct SplitAuditEntry {
    int original_cluster = 0;
    int64_t size = 0;
    std::vector<int64_t> piece_sizes;
    int64_t noise_points = 0;
};

struct SplitResult {
    MeaningClassTable table;
    std::vector<SplitAuditEntry> audit;
};

// DBSCAN post-processing: clusters above the split threshold are re-clustered
// over cosine distance; each dense component becomes its own meaning class and
// noise points become singletons. Total counts are preserved and cluster ids
// re-densified by first appearance.
SplitResult split_large_clusters(const MeaningClassTable& table,
                                 const std::vector<Claim>& claims,
                                 const std::vector<EmbeddingVector>& embeddings,
                                 const ClusterParams& params);

// Plain DBSCAN over a precomputed point set with cosine distance.
// Returns a label per point; -1 marks noise.
std::vector<int> dbscan_cosine(const std::vector<const EmbeddingVector*>& points, double eps,
                               int min_pts);

struct RetrievalCalibration {
    std::vector<int64_t> rank_histogram;  // index 0 = rank 1
    int64_t total_joins = 0;
    int recommended_n = 1;  // smallest N covering target_mass of joins
};

// Runs the clustering pass at depth max_n and records, for every claim that
// joined an existing cluster, the similarity rank of its chosen candidate.
RetrievalCalibration calibrate_retrieval_depth(const std::vector<Claim>& claims,
                                               const std::vector<EmbeddingVector>& embeddings,
                                               EntailmentBackend& entailment, int max_n = 10,
                                               double target_mass = 0.98);

// Exact top-k most similar predecessors of `query` among points [0, limit),
// ranked by descending cosine (ties to the lower index).
std::vector<int> top_k_similar(const EmbeddingVector& query,
                               const std::vector<EmbeddingVector>& points, size_t limit, int k);

}  // namespace epidiv
