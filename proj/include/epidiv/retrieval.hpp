#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epidiv/backends.hpp"
#include "epidiv/domain.hpp"

namespace epidiv {

struct PageRecord {
    std::string topic_id;
    std::string url;
    std::string content_type;
    std::string text;
    int64_t char_count = 0;
    bool kept = true;
    std::optional<std::string> reject_reason;  // TooShort | Pdf | SocialMedia
    std::string page_id;                       // file stem, e.g. "3"
};

struct Paragraph {
    std::string id;  // "<page_id>#<index>"
    std::string page_url;
    int index = 0;
    std::string text;
};

struct RagContext {
    std::string prompt_id;
    std::vector<std::string> paragraph_ids;
    int token_estimate = 0;
    // When no paragraph fits the budget alone, the top one is cut to this
    // many characters (0 = no truncation).
    int64_t truncated_chars = 0;
};

struct RetrievalConfig {
    int64_t min_page_chars = 1000;
    int64_t min_paragraph_chars = 100;
    int token_budget = 1000;
    double similarity_floor = 0.35;
    std::vector<std::string> social_domains;  // blocklist

    static std::vector<std::string> default_social_domains();
};

// ceil(characters / 4): a deterministic tokenizer proxy, pluggable.
int64_t estimate_tokens(const std::string& text);

// Host part of a URL, lowercased, with a leading "www." stripped.
std::string url_domain(const std::string& url);

bool is_blocked_domain(const std::string& url, const std::vector<std::string>& blocklist);

// Reads `<n>.txt` + `<n>.meta.json` pairs from a topic's search directory and
// applies the three filters (length, PDF, social-media domain). Pages failing
// a filter are returned with kept=false and a reject reason; files without a
// metadata sidecar are skipped entirely.
std::vector<PageRecord> ingest_pages(const std::filesystem::path& topic_dir,
                                     const std::string& topic_id, const RetrievalConfig& config);

// Blank-line paragraph split with a minimum-length boilerplate guard.
std::vector<Paragraph> split_paragraphs(const PageRecord& page, const RetrievalConfig& config);

// Ranks paragraphs by cosine similarity to the prompt, shuffles the ranks of
// those above the similarity floor (seeded), and greedily fills the token
// budget in that order.
RagContext build_rag_context(const std::string& prompt, const std::string& prompt_id,
                             const std::vector<Paragraph>& paragraphs,
                             const std::vector<EmbeddingVector>& paragraph_embeddings,
                             EmbeddingBackend& embedding, const RetrievalConfig& config,
                             uint64_t seed);

// Mean cosine similarity over all (prompt, paragraph) pairs; the `auto`
// setting of the similarity floor.
double mean_prompt_paragraph_similarity(const std::vector<EmbeddingVector>& prompt_embeddings,
                                        const std::vector<EmbeddingVector>& paragraph_embeddings);

// Assembles the final context text for a prompt, honoring truncation.
std::string assemble_context_text(const RagContext& context,
                                  const std::vector<Paragraph>& paragraphs);

}  // namespace epidiv
