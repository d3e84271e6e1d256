#pragma once

#include <filesystem>

#include "epidiv/manifest.hpp"

namespace epidiv {

// Emits the report bundle from a completed run directory: hsd_table.csv,
// per-figure plot-data JSON files, and summary.md. Pure transformation of
// checkpoint files; every output carries the run id and config hash.
void emit_report(const RunManifest& manifest);

// Internal helpers shared with the stats commands.
namespace detail {

// Round-robin interleave of per-group claim lists, groups in key order.
std::vector<Claim> round_robin_interleave(
    const std::vector<std::pair<std::string, std::vector<Claim>>>& groups);

}  // namespace detail

}  // namespace epidiv
