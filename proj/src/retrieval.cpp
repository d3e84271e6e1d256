#include "epidiv/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_map>

#include "epidiv/jsonl.hpp"
#include "epidiv/rng.hpp"

namespace epidiv {

int64_t estimate_tokens(const std::string& text) {
    return static_cast<int64_t>((text.size() + 3) / 4);
}

std::string url_domain(const std::string& url) {
    std::string rest = url;
    size_t scheme = rest.find("://");
    if (scheme != std::string::npos) rest = rest.substr(scheme + 3);
    size_t slash = rest.find_first_of("/?#");
    if (slash != std::string::npos) rest = rest.substr(0, slash);
    size_t at = rest.find('@');
    if (at != std::string::npos) rest = rest.substr(at + 1);
    size_t colon = rest.find(':');
    if (colon != std::string::npos) rest = rest.substr(0, colon);
    std::transform(rest.begin(), rest.end(), rest.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (rest.rfind("www.", 0) == 0) rest = rest.substr(4);
    return rest;
}

bool is_blocked_domain(const std::string& url, const std::vector<std::string>& blocklist) {
    std::string domain = url_domain(url);
    for (const auto& blocked : blocklist) {
        if (domain == blocked) return true;
        if (domain.size() > blocked.size() &&
            domain.compare(domain.size() - blocked.size() - 1, blocked.size() + 1,
                           "." + blocked) == 0) {
            return true;
        }
    }
    return false;
}

std::vector<std::string> RetrievalConfig::default_social_domains() {
    return {
        "facebook.com", "twitter.com",   "x.com",        "instagram.com", "tiktok.com",
        "reddit.com",   "pinterest.com", "linkedin.com", "youtube.com",   "threads.net",
        "snapchat.com", "tumblr.com",    "weibo.com",    "vk.com",        "quora.com",
    };
}

namespace {

bool is_pdf(const std::string& content_type) {
    std::string lower = content_type;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower.find("pdf") != std::string::npos;
}

std::string trim(const std::string& s) {
    size_t first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    size_t last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<PageRecord> ingest_pages(const std::filesystem::path& topic_dir,
                                     const std::string& topic_id, const RetrievalConfig& config) {
    std::vector<PageRecord> pages;
    if (!std::filesystem::exists(topic_dir)) return pages;

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(topic_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        std::filesystem::path meta_path = file;
        meta_path.replace_extension(".meta.json");
        if (!std::filesystem::exists(meta_path)) {
            continue;  // MetadataMissing: skipped, surfaced by the caller's log
        }
        Json meta = read_json_file(meta_path);
        PageRecord page;
        page.topic_id = topic_id;
        page.page_id = file.stem().string();
        page.url = meta.value("url", std::string{});
        page.content_type = meta.value("content_type", std::string{});
        page.text = read_text_file(file);
        page.char_count = static_cast<int64_t>(page.text.size());
        if (page.char_count < config.min_page_chars) {
            page.kept = false;
            page.reject_reason = "TooShort";
        } else if (is_pdf(page.content_type)) {
            page.kept = false;
            page.reject_reason = "Pdf";
        } else if (is_blocked_domain(page.url, config.social_domains)) {
            page.kept = false;
            page.reject_reason = "SocialMedia";
        }
        pages.push_back(std::move(page));
    }
    return pages;
}

std::vector<Paragraph> split_paragraphs(const PageRecord& page, const RetrievalConfig& config) {
    std::vector<Paragraph> paragraphs;
    size_t start = 0;
    int index = 0;
    auto emit = [&](const std::string& raw) {
        std::string text = trim(raw);
        if (static_cast<int64_t>(text.size()) < config.min_paragraph_chars) return;
        Paragraph p;
        p.id = page.page_id + "#" + std::to_string(index);
        p.page_url = page.url;
        p.index = index;
        p.text = std::move(text);
        ++index;
        paragraphs.push_back(std::move(p));
    };
    const std::string& text = page.text;
    while (start < text.size()) {
        // paragraph boundary: one or more blank lines
        size_t pos = start;
        size_t boundary = std::string::npos;
        while (pos < text.size()) {
            size_t nl = text.find('\n', pos);
            if (nl == std::string::npos) break;
            size_t next = nl + 1;
            while (next < text.size() && (text[next] == ' ' || text[next] == '\t' ||
                                          text[next] == '\r')) {
                ++next;
            }
            if (next < text.size() && text[next] == '\n') {
                boundary = nl;
                break;
            }
            pos = nl + 1;
        }
        if (boundary == std::string::npos) {
            emit(text.substr(start));
            break;
        }
        emit(text.substr(start, boundary - start));
        start = boundary;
        while (start < text.size() &&
               (text[start] == '\n' || text[start] == ' ' || text[start] == '\t' ||
                text[start] == '\r')) {
            ++start;
        }
    }
    return paragraphs;
}

RagContext build_rag_context(const std::string& prompt, const std::string& prompt_id,
                             const std::vector<Paragraph>& paragraphs,
                             const std::vector<EmbeddingVector>& paragraph_embeddings,
                             EmbeddingBackend& embedding, const RetrievalConfig& config,
                             uint64_t seed) {
    if (paragraphs.empty()) {
        throw EpidivError(ErrorCode::NoParagraphs, "no paragraphs available for RAG context");
    }
    if (paragraphs.size() != paragraph_embeddings.size()) {
        throw EpidivError(ErrorCode::DimMismatch, "paragraphs and embeddings must align");
    }
    std::vector<EmbeddingVector> prompt_vec = embed_batch(embedding, {prompt});

    std::vector<std::pair<double, size_t>> ranked;
    ranked.reserve(paragraphs.size());
    for (size_t i = 0; i < paragraphs.size(); ++i) {
        ranked.emplace_back(cosine_similarity(prompt_vec[0], paragraph_embeddings[i]), i);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    // Shuffle the above-floor ranks; the below-floor tail stays in similarity order.
    size_t above = 0;
    while (above < ranked.size() && ranked[above].first > config.similarity_floor) ++above;
    Rng rng(seed);
    std::vector<std::pair<double, size_t>> head(ranked.begin(),
                                                ranked.begin() + static_cast<ptrdiff_t>(above));
    rng.shuffle(head);
    std::copy(head.begin(), head.end(), ranked.begin());

    RagContext context;
    context.prompt_id = prompt_id;
    int64_t budget = config.token_budget;
    for (const auto& [sim, idx] : ranked) {
        int64_t tokens = estimate_tokens(paragraphs[idx].text);
        if (context.token_estimate + tokens > budget) break;
        context.paragraph_ids.push_back(paragraphs[idx].id);
        context.token_estimate += static_cast<int>(tokens);
    }
    if (context.paragraph_ids.empty()) {
        // nothing fit in order; take the first that fits alone, else truncate the top one
        for (const auto& [sim, idx] : ranked) {
            if (estimate_tokens(paragraphs[idx].text) <= budget) {
                context.paragraph_ids.push_back(paragraphs[idx].id);
                context.token_estimate = static_cast<int>(estimate_tokens(paragraphs[idx].text));
                break;
            }
        }
        if (context.paragraph_ids.empty()) {
            size_t top = ranked.front().second;
            context.paragraph_ids.push_back(paragraphs[top].id);
            context.truncated_chars = budget * 4;
            context.token_estimate = static_cast<int>(budget);
        }
    }
    return context;
}

double mean_prompt_paragraph_similarity(const std::vector<EmbeddingVector>& prompt_embeddings,
                                        const std::vector<EmbeddingVector>& paragraph_embeddings) {
    if (prompt_embeddings.empty() || paragraph_embeddings.empty()) {
        throw EpidivError(ErrorCode::EmptyBatch, "similarity mean over empty sets");
    }
    double sum = 0.0;
    for (const auto& p : prompt_embeddings) {
        for (const auto& q : paragraph_embeddings) {
            sum += cosine_similarity(p, q);
        }
    }
    return sum / (static_cast<double>(prompt_embeddings.size()) *
                  static_cast<double>(paragraph_embeddings.size()));
}

std::string assemble_context_text(const RagContext& context,
                                  const std::vector<Paragraph>& paragraphs) {
    std::unordered_map<std::string, const Paragraph*> by_id;
    for (const auto& p : paragraphs) by_id[p.id] = &p;
    std::string out;
    for (size_t i = 0; i < context.paragraph_ids.size(); ++i) {
        auto it = by_id.find(context.paragraph_ids[i]);
        if (it == by_id.end()) {
            throw EpidivError(ErrorCode::ConfigError,
                              "context references unknown paragraph " + context.paragraph_ids[i]);
        }
        std::string text = it->second->text;
        if (i == 0 && context.truncated_chars > 0 &&
            static_cast<int64_t>(text.size()) > context.truncated_chars) {
            text = text.substr(0, static_cast<size_t>(context.truncated_chars));
        }
        if (!out.empty()) out += "\n\n";
        out += text;
    }
    return out;
}

}  // namespace epidiv
