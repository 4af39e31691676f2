#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "flp/baselines.hpp"
#include "flp/mflp.hpp"
#include "flp/swap_search.hpp"

namespace flp {

using ordered_json = nlohmann::ordered_json;

// Wall-clock fields are written as 0 when `timing` is false so that
// fixed-seed runs produce byte-identical files.

/// Solution schema for one type:
/// {"type_placements": {...}, "access_cost", "steps": [{insert, remove, delta, ...}], "wall_time_ms"}.
ordered_json trajectory_to_json(const ProblemInstance& instance, const Trajectory& traj, bool timing = true);

/// Solution schema for a baseline solver report.
ordered_json report_to_json(const ProblemInstance& instance, std::size_t type, const SolverReport& report,
                            bool timing = true);

/// Solution schema extended with per-type costs and the two stage logs.
ordered_json mflp_to_json(const ProblemInstance& instance, const MflpSolution& sol, bool timing = true);

void write_json_file(const ordered_json& doc, const std::filesystem::path& path);

}  // namespace flp
