#pragma once

#include <string>
#include <vector>

#include "epidiv/backends.hpp"
#include "epidiv/clustering.hpp"
#include "epidiv/domain.hpp"

namespace epidiv {

struct ReferenceClaim {
    std::string id;
    std::string topic_id;
    std::string language;  // BCP-47
    std::string text;
};

struct MatchRecord {
    std::string reference_claim_id;
    std::string generated_claim_id;
    double cosine = 0.0;
    bool mutual_entailment = true;  // recorded only when true
};

struct MatchParams {
    int top_k = 6;
    // Language of the generated claims; matching references in another
    // language requires a multilingual embedding backend.
    std::string generation_language = "en";
};

// For each reference claim, retrieves the top_k most similar generated claims
// and records every mutually entailed pair (the clustering module's rule).
// The caller must exclude RAG-setting claims from `generated`.
std::vector<MatchRecord> match_claims(const std::vector<ReferenceClaim>& references,
                                      const std::vector<Claim>& generated,
                                      const std::vector<EmbeddingVector>& generated_embeddings,
                                      EmbeddingBackend& embedding, EntailmentBackend& entailment,
                                      const MatchParams& params);

// HSD over the generated claims that matched at least one reference claim,
// using the cell's existing clustering. A generated claim matched by several
// references counts once. Zero matches yields hsd = 0 with an "empty" flag.
DiversityReport minimal_representativeness_hsd(const std::vector<Claim>& generated,
                                               const MeaningClassTable& table,
                                               const std::vector<MatchRecord>& matches,
                                               const std::string& generator_id,
                                               const std::string& topic_id,
                                               GenerationSetting setting);

}  // namespace epidiv
