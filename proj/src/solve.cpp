#include "flp/solve.hpp"

#include <algorithm>
#include <array>
#include <chrono>

#include "flp/baselines.hpp"
#include "flp/swap_search.hpp"

namespace flp {

namespace {

constexpr std::array<std::string_view, 7> kMethods{"drl", "greedy", "ls", "ts", "vns", "ga", "bf"};

const std::vector<NodeId>& pins_of(const MflpOptions& options, std::size_t k) {
  static const std::vector<NodeId> none;
  return k < options.pinned.size() ? options.pinned[k] : none;
}

bool has_pins(const MflpOptions& options) {
  return std::any_of(options.pinned.begin(), options.pinned.end(), [](const auto& v) { return !v.empty(); });
}

SolverReport run_baseline(const ProblemInstance& instance, std::size_t k, const SolveRequest& r) {
  const int p = instance.budget(k);
  const std::uint64_t seed = r.seed + k;
  if (r.method == "bf") return brute_force(instance, k, p);
  if (r.method == "ga") return genetic(instance, k, p, {r.ga_population, r.ga_generations, 0.2, seed});
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<NodeId> init = greedy_init(instance, k, p);
  const double init_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  SolverReport rep;
  if (r.method == "ls") rep = local_search(instance, k, p, init);
  else if (r.method == "ts") rep = tabu_search(instance, k, p, init, r.ts_iterations > 0 ? r.ts_iterations : 2 * p, r.tabu_tenure);
  else rep = vns(instance, k, p, init, r.vns_k_max, r.vns_iterations, seed);
  rep.wall_time_ms += init_ms;
  return rep;
}

}  // namespace

bool is_solve_method(std::string_view method) {
  return std::find(kMethods.begin(), kMethods.end(), method) != kMethods.end();
}

void validate_pins(const ProblemInstance& instance, const MflpOptions& options) {
  if (options.pinned.size() > instance.num_types()) throw Error("more pin sets than types", "pinned");
  std::vector<int> owner(instance.size(), -1);
  for (std::size_t k = 0; k < options.pinned.size(); ++k) {
    const std::string field = "pinned." + instance.type(k).name;
    const auto& pins = options.pinned[k];
    if (pins.size() > static_cast<std::size_t>(instance.budget(k))) throw Error("more pins than budget", field);
    for (NodeId f : pins) {
      if (f < 0 || static_cast<std::size_t>(f) >= instance.size())
        throw Error("node " + std::to_string(f) + " out of range", field);
      int& o = owner[static_cast<std::size_t>(f)];
      if (o == static_cast<int>(k)) throw Error("node " + std::to_string(f) + " pinned twice", field);
      if (o >= 0) throw Error("node " + std::to_string(f) + " pinned by two types", field);
      o = static_cast<int>(k);
    }
  }
}

MflpSolution solve_instance(const ProblemInstance& instance, const SolveRequest& r,
                            std::shared_ptr<const Policy> policy) {
  if (!is_solve_method(r.method)) throw Error("unknown method '" + r.method + "'", "method");
  validate_pins(instance, r.options);
  const bool episodic = r.method == "drl" || r.method == "greedy";
  if (!episodic && has_pins(r.options)) throw Error("pins are supported by drl and greedy only", "pinned");
  if (r.method == "drl" && !policy) throw Error("method drl needs a policy checkpoint", "policy");

  if (r.method == "bf" && instance.num_types() > 1) return mflp_brute_force(instance);

  const auto t0 = std::chrono::steady_clock::now();
  Placements placements;
  std::vector<Trajectory> trajectories;
  if (episodic) {
    std::unique_ptr<EdgeSelector> selector;
    if (r.method == "drl") selector = std::make_unique<GnnPolicySelector>(policy, SelectMode::greedy);
    else selector = std::make_unique<BestDeltaSelector>();
    for (std::size_t k = 0; k < instance.num_types(); ++k) {
      EpisodeConfig ec{r.steps >= 0 ? r.steps : 3 * instance.budget(k), r.tabu_tenure, true, r.seed + k};
      EpisodeOptions eo;
      eo.pinned = pins_of(r.options, k);
      for (std::size_t q = 0; q < instance.num_types(); ++q)
        if (q != k) eo.blocked.insert(eo.blocked.end(), pins_of(r.options, q).begin(), pins_of(r.options, q).end());
      trajectories.push_back(run_episode(instance, k, instance.budget(k), *selector, ec, eo));
      placements.push_back(trajectories.back().best_facilities);
    }
  } else {
    for (std::size_t k = 0; k < instance.num_types(); ++k) placements.push_back(run_baseline(instance, k, r).facilities);
  }
  const double first_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  MflpSolution sol = stage_two_resolve(instance, std::move(placements), r.options);
  sol.stage_one = std::move(trajectories);
  sol.stage_one_ms = first_ms;
  return sol;
}

}  // namespace flp
