#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epidiv/backends.hpp"
#include "epidiv/sentences.hpp"

namespace epidiv {

enum class DecompositionPromptId { P1, P2, P3 };

std::string to_string(DecompositionPromptId id);
DecompositionPromptId decomposition_prompt_from_string(const std::string& name);

// The decomposition prompt texts; loaded from prompts/P1.txt..P3.txt.
struct PromptSet {
    std::string p1;
    std::string p2;
    std::string p3;

    const std::string& get(DecompositionPromptId id) const;
    static PromptSet load(const std::filesystem::path& prompts_dir);
};

// Renders the decomposition prompt: every {issue} becomes the topic label
// and the single {content} becomes the chunk text.
std::string render_decomposition_prompt(const std::string& prompt_template,
                                        const std::string& issue, const std::string& content);

struct DecomposeResult {
    std::vector<Claim> claims;
    // Completion exceeded the line cap and was truncated (flagged, not fatal).
    bool degenerate = false;
};

// Line cap above which a completion is considered degenerate.
inline constexpr int kMaxDecompositionLines = 200;

class Decomposer {
public:
    Decomposer(std::shared_ptr<GenerationBackend> backend, PromptSet prompts,
               DecompositionPromptId prompt_id = DecompositionPromptId::P3);

    DecomposeResult decompose_chunk(const Chunk& chunk, const Topic& topic,
                                    uint64_t seed) const;

    DecompositionPromptId prompt_id() const { return prompt_id_; }

private:
    std::shared_ptr<GenerationBackend> backend_;
    PromptSet prompts_;
    DecompositionPromptId prompt_id_;
};

// Parses a decomposition completion: one claim per line, list markers and
// blanks stripped; a bare "EMPTY" (case-insensitive) means no claims.
struct ParsedCompletion {
    std::vector<std::string> lines;
    bool degenerate = false;
};

ParsedCompletion parse_decomposition_completion(const std::string& completion);

}  // namespace epidiv
