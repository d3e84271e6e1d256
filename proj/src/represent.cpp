#include "epidiv/represent.hpp"

#include <algorithm>
#include <unordered_set>

#include "epidiv/diversity.hpp"

namespace epidiv {

std::vector<MatchRecord> match_claims(const std::vector<ReferenceClaim>& references,
                                      const std::vector<Claim>& generated,
                                      const std::vector<EmbeddingVector>& generated_embeddings,
                                      EmbeddingBackend& embedding, EntailmentBackend& entailment,
                                      const MatchParams& params) {
    if (references.empty() || generated.empty()) {
        throw EpidivError(ErrorCode::EmptyBatch, "match_claims needs non-empty claim sets");
    }
    if (generated.size() != generated_embeddings.size()) {
        throw EpidivError(ErrorCode::DimMismatch, "generated claims and embeddings must align");
    }
    for (const auto& claim : generated) {
        if (claim.response_ref.setting == GenerationSetting::RAG) {
            throw EpidivError(ErrorCode::ConfigError,
                              "RAG-setting claims must be excluded from matching");
        }
    }

    std::vector<std::string> reference_texts;
    reference_texts.reserve(references.size());
    for (const auto& ref : references) reference_texts.push_back(ref.text);
    std::vector<EmbeddingVector> reference_embeddings = embed_batch(embedding, reference_texts);

    std::vector<MatchRecord> matches;
    for (size_t r = 0; r < references.size(); ++r) {
        std::vector<int> candidates = top_k_similar(reference_embeddings[r], generated_embeddings,
                                                    generated_embeddings.size(), params.top_k);
        for (int candidate : candidates) {
            const Claim& claim = generated[static_cast<size_t>(candidate)];
            EntailmentJudgment forward = entailment.entails(references[r].text, claim.text);
            if (!forward.is_entailment()) continue;
            EntailmentJudgment backward = entailment.entails(claim.text, references[r].text);
            if (!backward.is_entailment()) continue;
            MatchRecord match;
            match.reference_claim_id = references[r].id;
            match.generated_claim_id = claim.id;
            match.cosine = cosine_similarity(reference_embeddings[r],
                                             generated_embeddings[static_cast<size_t>(candidate)]);
            matches.push_back(std::move(match));
        }
    }
    // deterministic merge order
    std::sort(matches.begin(), matches.end(), [](const MatchRecord& a, const MatchRecord& b) {
        if (a.reference_claim_id != b.reference_claim_id) {
            return a.reference_claim_id < b.reference_claim_id;
        }
        return a.generated_claim_id < b.generated_claim_id;
    });
    return matches;
}

DiversityReport minimal_representativeness_hsd(const std::vector<Claim>& generated,
                                               const MeaningClassTable& table,
                                               const std::vector<MatchRecord>& matches,
                                               const std::string& generator_id,
                                               const std::string& topic_id,
                                               GenerationSetting setting) {
    std::unordered_set<std::string> matched_ids;
    for (const auto& match : matches) matched_ids.insert(match.generated_claim_id);

    std::vector<int> class_sequence;
    for (const auto& claim : generated) {
        if (!matched_ids.count(claim.id)) continue;
        auto it = table.cluster_of.find(claim.id);
        if (it == table.cluster_of.end()) {
            throw EpidivError(ErrorCode::ConfigError,
                              "matched claim " + claim.id + " missing from cluster table");
        }
        class_sequence.push_back(it->second);
    }
    ReportOptions options;  // no rarefaction on the matched subset
    return build_diversity_report(generator_id, topic_id, setting, class_sequence, options);
}

}  // namespace epidiv
