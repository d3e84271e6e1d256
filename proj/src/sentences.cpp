#include "epidiv/sentences.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace epidiv {

namespace {

bool is_bullet_line(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) return false;
    char c = line[i];
    if (c == '-' || c == '*') {
        return i + 1 < line.size() && line[i + 1] == ' ';
    }
    // "1." / "2)" style numbering
    size_t j = i;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) {
        return j + 1 < line.size() && line[j + 1] == ' ';
    }
    // U+2022 bullet
    if (line.compare(i, 3, "\xe2\x80\xa2") == 0) return true;
    return false;
}

// CJK sentence-final punctuation, as UTF-8 byte sequences.
const char* kCjkTerminators[] = {"\xe3\x80\x82", "\xef\xbc\x81", "\xef\xbc\x9f"};

size_t cjk_terminator_length(const std::string& text, size_t pos) {
    for (const char* term : kCjkTerminators) {
        if (text.compare(pos, 3, term) == 0) return 3;
    }
    return 0;
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Trailing non-space token ending at (and including) text[dot_pos].
std::string trailing_token(const std::string& text, size_t dot_pos) {
    size_t start = dot_pos;
    while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1]))) {
        --start;
    }
    return text.substr(start, dot_pos - start + 1);
}

bool starts_new_sentence(const std::string& text, size_t pos) {
    // pos is the first non-space character after a terminator run.
    if (pos >= text.size()) return true;
    unsigned char c = static_cast<unsigned char>(text[pos]);
    if (std::isupper(c) || std::isdigit(c)) return true;
    if (c == '"' || c == '\'' || c == '(' || c == '[' || c == '-' || c == '*') return true;
    if (c >= 0x80) return true;  // non-ASCII (incl. CJK) counts as an opener
    return false;
}

void split_block(const std::string& block, const std::vector<std::string>& abbreviations,
                 std::vector<std::string>& out) {
    std::vector<std::string> lowered;
    lowered.reserve(abbreviations.size());
    for (const auto& a : abbreviations) lowered.push_back(to_lower(a));

    size_t start = 0;
    size_t i = 0;
    auto flush = [&](size_t end) {
        while (start < end && std::isspace(static_cast<unsigned char>(block[start]))) ++start;
        size_t last = end;
        while (last > start && std::isspace(static_cast<unsigned char>(block[last - 1]))) --last;
        if (last > start) out.push_back(block.substr(start, last - start));
        start = end;
    };

    while (i < block.size()) {
        size_t cjk_len = cjk_terminator_length(block, i);
        if (cjk_len > 0) {
            // CJK terminators end the sentence unconditionally.
            i += cjk_len;
            while (i < block.size() && cjk_terminator_length(block, i) > 0) i += 3;
            flush(i);
            continue;
        }
        char c = block[i];
        if (c == '.' || c == '!' || c == '?') {
            size_t term_start = i;
            // consume the terminator run plus closing quotes/brackets
            while (i < block.size() && (block[i] == '.' || block[i] == '!' || block[i] == '?')) ++i;
            size_t term_end = i;
            while (i < block.size() &&
                   (block[i] == '"' || block[i] == '\'' || block[i] == ')' || block[i] == ']')) {
                ++i;
            }
            size_t after_quotes = i;
            if (after_quotes >= block.size()) {
                flush(block.size());
                break;
            }
            if (!std::isspace(static_cast<unsigned char>(block[after_quotes]))) {
                continue;  // e.g. "3.14" or "U.S." mid-token
            }
            size_t next = after_quotes;
            while (next < block.size() && std::isspace(static_cast<unsigned char>(block[next]))) {
                ++next;
            }
            bool abbreviation = false;
            if (block[term_end - 1] == '.' && term_end - term_start == 1) {
                std::string token = to_lower(trailing_token(block, term_start));
                abbreviation =
                    std::find(lowered.begin(), lowered.end(), token) != lowered.end();
            }
            if (!abbreviation && starts_new_sentence(block, next)) {
                flush(after_quotes);
            }
            continue;
        }
        ++i;
    }
    flush(block.size());
}

}  // namespace

const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> abbreviations = {
        "dr.",  "mr.",   "mrs.",  "ms.",  "prof.", "sr.",   "jr.",  "st.",  "vs.",
        "etc.", "e.g.",  "i.e.",  "cf.",  "u.s.",  "u.k.",  "u.n.", "no.",  "fig.",
        "al.",  "inc.",  "ltd.",  "co.",  "mt.",   "approx.", "ca.", "dept.", "est.",
        "gen.", "gov.",  "hon.",  "rev.", "sgt.",  "capt.", "col.", "lt.",  "cmdr.",
    };
    return abbreviations;
}

std::vector<std::string> load_abbreviations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw EpidivError(ErrorCode::IoError, "cannot open abbreviation list " + path.string());
    }
    std::vector<std::string> abbreviations;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        abbreviations.push_back(to_lower(line));
    }
    return abbreviations;
}

std::vector<std::string> split_sentences(const std::string& text) {
    return split_sentences(text, default_abbreviations());
}

std::vector<std::string> split_sentences(const std::string& text,
                                         const std::vector<std::string>& abbreviations) {
    std::vector<std::string> sentences;
    std::istringstream lines(text);
    std::string line;
    std::string block;
    auto flush_block = [&] {
        if (!block.empty()) {
            split_block(block, abbreviations, sentences);
            block.clear();
        }
    };
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) {
            flush_block();
            continue;
        }
        if (is_bullet_line(line)) {
            flush_block();
            size_t first = line.find_first_not_of(" \t");
            size_t last = line.find_last_not_of(" \t");
            sentences.push_back(line.substr(first, last - first + 1));
            continue;
        }
        if (!block.empty()) block += ' ';
        size_t first = line.find_first_not_of(" \t");
        size_t last = line.find_last_not_of(" \t");
        block += line.substr(first, last - first + 1);
    }
    flush_block();
    return sentences;
}

std::vector<Chunk> chunk_sentences(const std::vector<std::string>& sentences,
                                   const ResponseRef& ref, const std::string& topic_id) {
    std::vector<Chunk> chunks;
    for (size_t start = 0; start < sentences.size(); start += 3) {
        size_t end = std::min(sentences.size(), start + 3);
        Chunk chunk;
        chunk.response_ref = ref;
        chunk.topic_id = topic_id;
        chunk.chunk_index = static_cast<int>(start / 3);
        chunk.sentence_count = static_cast<int>(end - start);
        for (size_t i = start; i < end; ++i) {
            if (i > start) chunk.text += ' ';
            chunk.text += sentences[i];
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::vector<Chunk> chunk_response(const ResponseRecord& response) {
    return chunk_sentences(split_sentences(response.text), response.ref(), response.topic_id);
}

}  // namespace epidiv
