#pragma once

#include <optional>
#include <string>

#include "epidiv/manifest.hpp"

namespace epidiv {

// Exit codes shared by every stage command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitConfigError = 2;

struct CommandOptions {
    std::optional<uint64_t> stage_seed;            // overrides the manifest seed
    std::optional<std::string> similarity_floor;   // "auto" or a number
    std::optional<std::string> decomp_prompt;      // P1 | P2 | P3
    bool resume = true;                            // reruns skip completed work (default)
    bool quiet = false;
};

// Stage commands. Each runs exactly one pipeline stage, skips completed
// work on rerun, prints a one-line summary, and returns 0 on success,
// 1 on partial failure (failures recorded this invocation), 2 on
// configuration errors (including missing upstream checkpoints).
int cmd_generate(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_decompose(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_cluster(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_diversity(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_compare(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_represent(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_simulate(const RunManifest& manifest, const CommandOptions& options = {});
int cmd_report(const RunManifest& manifest, const CommandOptions& options = {});

}  // namespace epidiv
