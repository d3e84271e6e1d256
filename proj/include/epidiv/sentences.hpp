#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epidiv/domain.hpp"

namespace epidiv {

// Rule-based sentence splitter: terminal . ! ? (and CJK equivalents)
// followed by whitespace and an uppercase/digit/opening character ends a
// sentence, except after a listed abbreviation. Bullet/list lines are one
// sentence each.
std::vector<std::string> split_sentences(const std::string& text);
std::vector<std::string> split_sentences(const std::string& text,
                                         const std::vector<std::string>& abbreviations);

// Built-in abbreviation list; data/abbreviations.txt mirrors it.
const std::vector<std::string>& default_abbreviations();

std::vector<std::string> load_abbreviations(const std::filesystem::path& path);

struct Chunk {
    ResponseRef response_ref;
    std::string topic_id;
    int chunk_index = 0;
    std::string text;
    int sentence_count = 0;
};

// Groups sentences three at a time, in order; the final chunk may hold 1-2.
std::vector<Chunk> chunk_response(const ResponseRecord& response);
std::vector<Chunk> chunk_sentences(const std::vector<std::string>& sentences,
                                   const ResponseRef& ref, const std::string& topic_id);

}  // namespace epidiv
