#include "flp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "flp/baselines.hpp"
#include "flp/swap_search.hpp"

namespace flp {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kSolvers[] = {"drl", "greedy", "ls", "ts", "vns", "ga", "bf"};

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell_label(const GridCell& c) { return std::to_string(c.n) + "x" + std::to_string(c.p); }

RunRecord from_trajectory(const Trajectory& t) {
  RunRecord r;
  r.access_cost = t.best_ac;
  r.wall_time_ms = t.wall_time_ms;
  double evals = 0.0, edges = 0.0;
  for (const auto& s : t.steps) {
    evals += static_cast<double>(s.candidates);
    edges += static_cast<double>(s.total_edges);
  }
  if (!t.steps.empty()) {
    r.evals_per_step = evals / static_cast<double>(t.steps.size());
    r.edges_per_step = edges / static_cast<double>(t.steps.size());
  }
  for (std::size_t i = 1; i < t.best_ac_trace.size(); ++i)
    if (t.best_ac_trace[i] > t.best_ac_trace[i - 1]) r.monotone = false;
  if (!t.best_ac_trace.empty() && t.best_ac_trace.front() > t.initial_ac) r.monotone = false;
  return r;
}

struct InstanceOutcome {
  std::vector<RunRecord> runs;  // one per solver, declared order
  double reference_ac = kInfinity;
  double reference_rt = 0.0;
  bool exact = false;
};

InstanceOutcome run_instance(const GridSpec& grid, std::size_t cell_index, int instance_index,
                             const std::shared_ptr<const Policy>& policy) {
  const GridCell& cell = grid.cells[cell_index];
  const std::uint64_t seed = grid.seed_base + cell_index + static_cast<std::uint64_t>(instance_index);
  const ProblemInstance inst =
      maybe_with_distance_matrix(generate_synthetic(cell.n, {{"a", cell.p}}, seed, grid.demand_model));
  const int p = cell.p;
  const int steps = static_cast<int>(std::ceil(grid.steps_per_facility * p));
  const double full_edges = static_cast<double>(p) * static_cast<double>(cell.n - static_cast<std::size_t>(p));

  const auto ti = Clock::now();
  const std::vector<NodeId> init = greedy_init(inst, 0, p);
  const double init_ms = elapsed_ms(ti);

  InstanceOutcome out;
  std::optional<SolverReport> bf;
  auto from_report = [&](const SolverReport& rep, double extra_ms, double evals) {
    RunRecord r;
    r.access_cost = rep.access_cost;
    r.wall_time_ms = rep.wall_time_ms + extra_ms;
    r.evals_per_step = evals;
    r.edges_per_step = evals > 0.0 ? full_edges : 0.0;
    return r;
  };

  for (const auto& name : grid.solvers) {
    RunRecord r;
    if (name == "drl" || name == "greedy") {
      EpisodeConfig ec{steps, grid.tabu_tenure, true, seed};
      if (name == "drl") {
        GnnPolicySelector sel(policy, SelectMode::greedy);
        r = from_trajectory(run_episode(inst, 0, p, sel, ec));
      } else {
        BestDeltaSelector sel;
        r = from_trajectory(run_episode(inst, 0, p, sel, ec));
      }
    } else if (name == "ls") {
      r = from_report(local_search(inst, 0, p, init), init_ms, full_edges);
    } else if (name == "ts") {
      r = from_report(tabu_search(inst, 0, p, init, grid.ts_iterations > 0 ? grid.ts_iterations : 2 * p,
                                  grid.tabu_tenure),
                      init_ms, full_edges);
    } else if (name == "vns") {
      r = from_report(vns(inst, 0, p, init, grid.vns_k_max, grid.vns_iterations, seed), init_ms, full_edges);
    } else if (name == "ga") {
      r = from_report(genetic(inst, 0, p, {grid.ga_population, grid.ga_generations, 0.2, seed}), 0.0, 0.0);
    } else if (name == "bf") {
      bf = brute_force(inst, 0, p);
      r = from_report(*bf, 0.0, 0.0);
    }
    if (!grid.timing) r.wall_time_ms = 0.0;
    out.runs.push_back(r);
  }

  if (binomial(cell.n, static_cast<std::size_t>(p)) <= grid.exact_limit) {
    if (!bf) bf = brute_force(inst, 0, p);
    out.exact = true;
    out.reference_ac = bf->access_cost;
    out.reference_rt = grid.timing ? bf->wall_time_ms : 0.0;
  }
  return out;
}

}  // namespace

bool is_known_solver(std::string_view name) {
  return std::find(std::begin(kSolvers), std::end(kSolvers), name) != std::end(kSolvers);
}

void GridSpec::validate() const {
  if (instances_per_cell < 1) throw Error("instances per cell must be >= 1", "instances_per_cell");
  if (cells.empty()) throw Error("grid has no cells", "cells");
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (cells[c].p < 1 || static_cast<std::size_t>(cells[c].p) > cells[c].n)
      throw Error("invalid (N, p) pair", "cells[" + std::to_string(c) + "]");
  if (solvers.empty()) throw Error("no solvers listed", "solvers");
  for (const auto& s : solvers)
    if (!is_known_solver(s)) throw Error("unknown solver '" + s + "'", "solvers");
  for (const auto& c : cells)
    if (std::find(solvers.begin(), solvers.end(), "bf") != solvers.end() &&
        binomial(c.n, static_cast<std::size_t>(c.p)) > kBruteForceLimit)
      throw Error("bf requested on a cell too large to enumerate (" + cell_label(c) + ")", "solvers");
}

GridSpec parse_grid_spec(const nlohmann::json& doc) {
  GridSpec s;
  if (!doc.is_object()) throw Error("grid file must be an object", "$");
  try {
    if (doc.contains("cells")) {
      s.cells.clear();
      for (const auto& c : doc["cells"]) {
        if (c.is_array()) s.cells.push_back({c.at(0).get<std::size_t>(), c.at(1).get<int>()});
        else s.cells.push_back({c.at("n").get<std::size_t>(), c.at("p").get<int>()});
      }
    }
    s.instances_per_cell = doc.value("instances_per_cell", s.instances_per_cell);
    s.seed_base = doc.value("seed_base", s.seed_base);
    if (doc.contains("solvers")) s.solvers = doc["solvers"].get<std::vector<std::string>>();
    s.time_limit_s = doc.value("time_limit_s", s.time_limit_s);
    if (doc.contains("demand_model")) s.demand_model = parse_demand_model(doc["demand_model"].get<std::string>());
    s.steps_per_facility = doc.value("steps_per_facility", s.steps_per_facility);
    s.tabu_tenure = doc.value("tabu_tenure", s.tabu_tenure);
    s.ts_iterations = doc.value("ts_iterations", s.ts_iterations);
    s.vns_k_max = doc.value("vns_k_max", s.vns_k_max);
    s.vns_iterations = doc.value("vns_iterations", s.vns_iterations);
    s.ga_population = doc.value("ga_population", s.ga_population);
    s.ga_generations = doc.value("ga_generations", s.ga_generations);
    s.exact_limit = doc.value("exact_limit", s.exact_limit);
    s.policy = doc.value("policy", s.policy);
    s.timing = doc.value("timing", s.timing);
    if (doc.contains("references"))
      for (const auto& r : doc["references"])
        s.references.push_back(
            {r.at("n").get<std::size_t>(), r.at("p").get<int>(), r.at("instance").get<int>(), r.at("ac").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed grid file: ") + e.what(), "grid");
  }
  s.validate();
  return s;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grid file '" + path.string() + "'");
  try {
    return parse_grid_spec(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("grid file parse failure: ") + e.what(), "grid");
  }
}

GridResults run_grid(const GridSpec& grid, std::shared_ptr<const Policy> policy, int jobs) {
  grid.validate();
  if (std::find(grid.solvers.begin(), grid.solvers.end(), "drl") != grid.solvers.end() && !policy)
    throw Error("solver 'drl' needs a policy checkpoint", "policy");

  const std::size_t per_cell = static_cast<std::size_t>(grid.instances_per_cell);
  const std::size_t total = grid.cells.size() * per_cell;
  std::vector<InstanceOutcome> outcomes(total);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t task; (task = next++) < total;) {
      try {
        outcomes[task] = run_instance(grid, task / per_cell, static_cast<int>(task % per_cell), policy);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::map<std::tuple<std::size_t, int, int>, double> provided;
  for (const auto& r : grid.references) provided[{r.n, r.p, r.instance}] = r.access_cost;

  GridResults res;
  const std::size_t m = grid.solvers.size();
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    const GridCell& cell = grid.cells[c];
    std::vector<CellRow> rows(m);
    std::vector<double> ref_ac(per_cell);
    std::string label = "exact";
    bool all_exact = true, all_provided = true;
    for (std::size_t i = 0; i < per_cell; ++i) {
      all_exact = all_exact && outcomes[c * per_cell + i].exact;
      all_provided = all_provided && provided.count({cell.n, cell.p, static_cast<int>(i)});
    }
    for (std::size_t i = 0; i < per_cell; ++i) {
      const auto& o = outcomes[c * per_cell + i];
      if (all_exact) {
        ref_ac[i] = o.reference_ac;
      } else if (all_provided) {
        ref_ac[i] = provided[{cell.n, cell.p, static_cast<int>(i)}];
        label = "provided";
      } else {
        double best = kInfinity;
        for (const auto& r : o.runs) best = std::min(best, r.access_cost);
        ref_ac[i] = best;
        label = "best_of_all";
      }
    }

    double ref_rt = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      CellRow& row = rows[s];
      row.method = grid.solvers[s];
      row.cell = cell;
      row.reference = label;
      row.instances = grid.instances_per_cell;
      for (std::size_t i = 0; i < per_cell; ++i) {
        const RunRecord& r = outcomes[c * per_cell + i].runs[s];
        row.mean_ac += r.access_cost;
        row.mean_rt_ms += r.wall_time_ms;
        row.evals_per_step += r.evals_per_step;
        row.edges_per_step += r.edges_per_step;
        row.monotone = row.monotone && r.monotone;
        const double ref = ref_ac[i];
        row.gap_pct += ref > 0.0 ? (r.access_cost - ref) / ref * 100.0 : (r.access_cost > 0.0 ? kInfinity : 0.0);
        if (grid.time_limit_s > 0.0 && r.wall_time_ms > grid.time_limit_s * 1000.0) ++row.over_limit;
      }
      const double k = static_cast<double>(per_cell);
      row.mean_ac /= k;
      row.mean_rt_ms /= k;
      row.evals_per_step /= k;
      row.edges_per_step /= k;
      row.gap_pct /= k;
      ref_rt = std::max(ref_rt, row.mean_rt_ms);
    }
    if (all_exact) {
      ref_rt = 0.0;
      for (std::size_t i = 0; i < per_cell; ++i) ref_rt += outcomes[c * per_cell + i].reference_rt;
      ref_rt /= static_cast<double>(per_cell);
    }
    for (auto& row : rows) {
      if (row.mean_rt_ms > 0.0) row.speedup = ref_rt / row.mean_rt_ms;
      else row.speedup = ref_rt > 0.0 ? kInfinity : 1.0;
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  if (s == "json") return ReportFormat::json;
  throw Error("unknown report format '" + std::string(s) + "'", "format");
}

std::string format_report(const GridResults& results, ReportFormat format) {
  std::ostringstream out;
  static const char* kColumns[] = {"method",         "cell",           "mean_ac",  "gap_pct",
                                   "mean_rt_ms",     "speedup",        "reference", "evals_per_step",
                                   "edges_per_step", "monotone",       "over_limit", "instances"};
  switch (format) {
    case ReportFormat::csv: {
      for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
      out << '\n';
      for (const auto& r : results.rows)
        out << r.method << ',' << cell_label(r.cell) << ',' << num(r.mean_ac) << ',' << num(r.gap_pct) << ','
            << num(r.mean_rt_ms) << ',' << num(r.speedup) << ',' << r.reference << ',' << num(r.evals_per_step)
            << ',' << num(r.edges_per_step) << ',' << (r.monotone ? "true" : "false") << ',' << r.over_limit << ','
            << r.instances << '\n';
      break;
    }
    case ReportFormat::markdown: {
      out << '|';
      for (const char* c : kColumns) out << ' ' << c << " |";
      out << "\n|";
      for (std::size_t i = 0; i < std::size(kColumns); ++i) out << "---|";
      out << '\n';
      char buf[64];
      auto f = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
      };
      for (const auto& r : results.rows)
        out << "| " << r.method << " | " << cell_label(r.cell) << " | " << f(r.mean_ac) << " | " << f(r.gap_pct)
            << " | " << f(r.mean_rt_ms) << " | " << f(r.speedup) << " | " << r.reference << " | "
            << f(r.evals_per_step) << " | " << f(r.edges_per_step) << " | " << (r.monotone ? "yes" : "no") << " | "
            << r.over_limit << " | " << r.instances << " |\n";
      break;
    }
    case ReportFormat::json: {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      auto jnum = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return v;
        return num(v);
      };
      for (const auto& r : results.rows)
        arr.push_back({{"method", r.method},
                       {"cell", cell_label(r.cell)},
                       {"mean_ac", jnum(r.mean_ac)},
                       {"gap_pct", jnum(r.gap_pct)},
                       {"mean_rt_ms", jnum(r.mean_rt_ms)},
                       {"speedup", jnum(r.speedup)},
                       {"reference", r.reference},
                       {"evals_per_step", r.evals_per_step},
                       {"edges_per_step", r.edges_per_step},
                       {"monotone", r.monotone},
                       {"over_limit", r.over_limit},
                       {"instances", r.instances}});
      out << arr.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

void report(const GridResults& results, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report '" + path.string() + "'");
  out << format_report(results, format);
  if (!out) throw Error("I/O failure writing report '" + path.string() + "'");
}

}  // namespace flp
