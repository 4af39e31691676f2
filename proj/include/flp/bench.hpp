#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flp/instance.hpp"
#include "flp/policy_gnn.hpp"

namespace flp {

struct GridCell {
  std::size_t n = 0;
  int p = 0;
};

struct ReferenceValue {
  std::size_t n = 0;
  int p = 0;
  int instance = 0;
  double access_cost = 0.0;
};

struct GridSpec {
  std::vector<GridCell> cells{{100, 10}, {300, 30}, {1000, 100}};
  int instances_per_cell = 20;
  std::uint64_t seed_base = 1;
  std::vector<std::string> solvers{"drl", "ls", "ts", "vns", "ga"};
  double time_limit_s = 0.0;  // runs above this are counted in `over_limit`; 0 disables
  DemandModel demand_model = DemandModel::uniform;
  double steps_per_facility = 1.0;  // drl / greedy swap budget K = ceil(factor * p)
  int tabu_tenure = 7;
  int ts_iterations = 0;  // 0: 2p
  int vns_k_max = 3;
  int vns_iterations = 20;
  int ga_population = 32;
  int ga_generations = 50;
  double exact_limit = 2e5;  // brute-force reference when C(n,p) is at most this
  std::vector<ReferenceValue> references;  // externally solved optima
  std::string policy;                      // checkpoint path for drl
  bool timing = true;

  void validate() const;
};

GridSpec parse_grid_spec(const nlohmann::json& doc);
GridSpec load_grid_spec(const std::filesystem::path& path);

/// Known solver names: drl, greedy, ls, ts, vns, ga, bf.
bool is_known_solver(std::string_view name);

struct RunRecord {
  double access_cost = 0.0;
  double wall_time_ms = 0.0;
  double evals_per_step = 0.0;  // edges handed to the selector / scanned per step
  double edges_per_step = 0.0;  // unfiltered swap-graph size per step
  bool monotone = true;         // best-so-far trace never increases
};

struct CellRow {
  std::string method;
  GridCell cell;
  double mean_ac = 0.0;
  double gap_pct = 0.0;
  double mean_rt_ms = 0.0;
  double speedup = 1.0;
  std::string reference;  // exact | provided | best_of_all
  double evals_per_step = 0.0;
  double edges_per_step = 0.0;
  bool monotone = true;
  int over_limit = 0;
  int instances = 0;
};

struct GridResults {
  std::vector<CellRow> rows;  // ordered by (cell, solver)
};

/// Runs every solver on every instance of every cell. Instance seeds are
/// seed_base + cell index + instance index. Results are identical for any
/// `jobs` value.
GridResults run_grid(const GridSpec& grid, std::shared_ptr<const Policy> policy = nullptr, int jobs = 1);

enum class ReportFormat { csv, markdown, json };
ReportFormat parse_report_format(std::string_view s);

std::string format_report(const GridResults& results, ReportFormat format);
void report(const GridResults& results, ReportFormat format, const std::filesystem::path& path);

}  // namespace flp
