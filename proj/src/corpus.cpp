#include "epidiv/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "epidiv/jsonl.hpp"
#include "epidiv/rng.hpp"

namespace epidiv {

std::string to_string(DecompositionPromptId id) {
    switch (id) {
        case DecompositionPromptId::P1: return "P1";
        case DecompositionPromptId::P2: return "P2";
        case DecompositionPromptId::P3: return "P3";
    }
    return "P3";
}

DecompositionPromptId decomposition_prompt_from_string(const std::string& name) {
    if (name == "P1") return DecompositionPromptId::P1;
    if (name == "P2") return DecompositionPromptId::P2;
    if (name == "P3") return DecompositionPromptId::P3;
    throw EpidivError(ErrorCode::ConfigError, "unknown decomposition prompt: " + name);
}

const std::string& PromptSet::get(DecompositionPromptId id) const {
    switch (id) {
        case DecompositionPromptId::P1: return p1;
        case DecompositionPromptId::P2: return p2;
        case DecompositionPromptId::P3: return p3;
    }
    return p3;
}

PromptSet PromptSet::load(const std::filesystem::path& prompts_dir) {
    PromptSet prompts;
    prompts.p1 = read_text_file(prompts_dir / "P1.txt");
    prompts.p2 = read_text_file(prompts_dir / "P2.txt");
    prompts.p3 = read_text_file(prompts_dir / "P3.txt");
    return prompts;
}

std::string render_decomposition_prompt(const std::string& prompt_template,
                                        const std::string& issue, const std::string& content) {
    if (prompt_template.find("{content}") == std::string::npos) {
        throw EpidivError(ErrorCode::MissingPlaceholder,
                          "decomposition prompt lacks {content} placeholder");
    }
    std::string out = prompt_template;
    size_t pos = 0;
    while ((pos = out.find("{issue}", pos)) != std::string::npos) {
        out.replace(pos, 7, issue);
        pos += issue.size();
    }
    pos = out.find("{content}");
    out.replace(pos, 9, content);
    return out;
}

namespace {

std::string strip_list_marker(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t marker_end = i;
    if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
        marker_end = i + 1;
    } else if (line.compare(i, 3, "\xe2\x80\xa2") == 0) {
        marker_end = i + 3;
    } else {
        size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) {
            marker_end = j + 1;
        }
    }
    if (marker_end > i) {
        // a marker must be followed by whitespace or end the line
        if (marker_end < line.size() &&
            !std::isspace(static_cast<unsigned char>(line[marker_end]))) {
            marker_end = i;
        }
    }
    size_t start = marker_end;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    size_t end = line.size();
    while (end > start && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    return line.substr(start, end - start);
}

bool is_empty_sentinel(const std::string& text) {
    std::string upper;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return upper == "EMPTY";
}

}  // namespace

ParsedCompletion parse_decomposition_completion(const std::string& completion) {
    ParsedCompletion parsed;
    if (is_empty_sentinel(completion)) {
        return parsed;
    }
    std::istringstream stream(completion);
    std::string line;
    int raw_lines = 0;
    while (std::getline(stream, line)) {
        ++raw_lines;
        if (raw_lines > kMaxDecompositionLines) {
            parsed.degenerate = true;
            break;
        }
        std::string cleaned = strip_list_marker(line);
        if (cleaned.empty()) continue;
        parsed.lines.push_back(std::move(cleaned));
    }
    return parsed;
}

Decomposer::Decomposer(std::shared_ptr<GenerationBackend> backend, PromptSet prompts,
                       DecompositionPromptId prompt_id)
    : backend_(std::move(backend)), prompts_(std::move(prompts)), prompt_id_(prompt_id) {}

DecomposeResult Decomposer::decompose_chunk(const Chunk& chunk, const Topic& topic,
                                            uint64_t seed) const {
    if (chunk.text.empty()) {
        throw EpidivError(ErrorCode::ConfigError, "decompose_chunk on empty chunk");
    }
    GenerationRequest request;
    request.prompt = render_decomposition_prompt(prompts_.get(prompt_id_), topic.label, chunk.text);
    request.temperature = 0.0;
    request.top_p = 1.0;
    request.seed = seed;
    std::string completion = backend_->generate(request);

    ParsedCompletion parsed = parse_decomposition_completion(completion);
    DecomposeResult result;
    result.degenerate = parsed.degenerate;
    result.claims.reserve(parsed.lines.size());
    int line_index = 0;
    for (auto& text : parsed.lines) {
        Claim claim;
        claim.topic_id = chunk.topic_id;
        claim.response_ref = chunk.response_ref;
        claim.chunk_index = chunk.chunk_index;
        claim.text = std::move(text);
        claim.id = make_claim_id(chunk.topic_id, chunk.response_ref, chunk.chunk_index, line_index);
        ++line_index;
        result.claims.push_back(std::move(claim));
    }
    return result;
}

}  // namespace epidiv
