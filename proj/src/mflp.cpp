#include "flp/mflp.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <functional>
#include <numeric>
#include <string>

#include "flp/baselines.hpp"
#include "flp/cost_engine.hpp"

namespace flp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const std::vector<NodeId>& pins_of(const MflpOptions& options, std::size_t k) {
  static const std::vector<NodeId> none;
  return k < options.pinned.size() ? options.pinned[k] : none;
}

// Cost of relocating type k's facility away from `node`.
double removal_loss(const ProblemInstance& instance, const AssignmentState& s, NodeId node) {
  if (s.size() < 2) return kInfinity;
  const auto& h = instance.demand(s.type);
  double loss = 0.0;
  for (std::size_t u = 0; u < instance.size(); ++u)
    if (s.phi1[u] == node) loss += h[u] * (s.d2[u] - s.d1[u]);
  return loss;
}

}  // namespace

std::vector<Conflict> detect_conflicts(const Placements& placements) {
  std::map<NodeId, std::vector<std::size_t>> at;
  for (std::size_t k = 0; k < placements.size(); ++k)
    for (NodeId f : placements[k]) {
      auto& types = at[f];
      if (types.empty() || types.back() != k) types.push_back(k);
    }
  std::vector<Conflict> out;
  for (auto& [node, types] : at)
    if (types.size() > 1) out.push_back({node, std::move(types)});
  return out;
}

double placements_access_cost(const ProblemInstance& instance, const Placements& placements) {
  double total = 0.0;
  for (std::size_t k = 0; k < placements.size(); ++k) total += recompute_access_cost(instance, k, placements[k]);
  return total;
}

std::vector<Trajectory> stage_one(const ProblemInstance& instance, EdgeSelector& selector, const EpisodeConfig& config,
                                  const MflpOptions& options) {
  std::vector<Trajectory> out;
  out.reserve(instance.num_types());
  for (std::size_t k = 0; k < instance.num_types(); ++k) {
    EpisodeOptions eo;
    eo.pinned = pins_of(options, k);
    for (std::size_t q = 0; q < instance.num_types(); ++q)
      if (q != k) eo.blocked.insert(eo.blocked.end(), pins_of(options, q).begin(), pins_of(options, q).end());
    out.push_back(run_episode(instance, k, instance.budget(k), selector, config, eo));
  }
  return out;
}

MflpSolution stage_two_resolve(const ProblemInstance& instance, Placements placements, const MflpOptions& options) {
  const auto t0 = Clock::now();
  const std::size_t n = instance.size();
  const std::size_t num_types = instance.num_types();
  if (placements.size() != num_types) throw Error("placements must cover every type", "placements");
  for (std::size_t k = 0; k < num_types; ++k)
    if (placements[k].size() != static_cast<std::size_t>(instance.budget(k)))
      throw Error("placement size does not match budget", "placements." + instance.type(k).name);

  std::vector<AssignmentState> states;
  states.reserve(num_types);
  for (std::size_t k = 0; k < num_types; ++k) states.push_back(build_assignment(instance, k, placements[k]));

  std::vector<int> occupancy(n, 0);
  for (const auto& s : states)
    for (NodeId f : s.facilities) ++occupancy[static_cast<std::size_t>(f)];
  std::vector<std::vector<std::uint8_t>> pinned(num_types, std::vector<std::uint8_t>(n, 0));
  for (std::size_t k = 0; k < num_types; ++k)
    for (NodeId f : pins_of(options, k)) pinned[k][static_cast<std::size_t>(f)] = 1;

  MflpSolution sol;
  while (true) {
    std::vector<Conflict> conflicts = detect_conflicts(placements);
    if (conflicts.empty()) break;
    auto demand_at = [&](const Conflict& c) {
      double s = 0.0;
      for (std::size_t k : c.types) s += instance.demand(k)[static_cast<std::size_t>(c.node)];
      return s;
    };
    std::stable_sort(conflicts.begin(), conflicts.end(),
                     [&](const Conflict& a, const Conflict& b) { return demand_at(a) > demand_at(b); });

    for (const Conflict& c : conflicts) {
      std::size_t keep = c.types.front();
      bool keep_pinned = false;
      double keep_loss = -kInfinity;
      for (std::size_t k : c.types) {
        const bool is_pinned = pinned[k][static_cast<std::size_t>(c.node)] != 0;
        if (keep_pinned && !is_pinned) continue;
        if (is_pinned && !keep_pinned) {
          keep = k;
          keep_pinned = true;
          continue;
        }
        const double loss = removal_loss(instance, states[k], c.node);
        if (loss > keep_loss) {
          keep = k;
          keep_loss = loss;
        }
      }
      for (std::size_t k : c.types) {
        if (k == keep) continue;
        if (pinned[k][static_cast<std::size_t>(c.node)])
          throw Error("two types are pinned to node " + std::to_string(c.node), "pinned");
        NodeId best = kNoNode;
        double best_delta = kInfinity;
        for (std::size_t i = 0; i < n; ++i) {
          if (occupancy[i] != 0) continue;
          const double d = swap_delta(instance, states[k], static_cast<NodeId>(i), c.node);
          if (best == kNoNode || d < best_delta) {
            best = static_cast<NodeId>(i);
            best_delta = d;
          }
        }
        if (best == kNoNode) throw Error("no vacant node available for relocation", "budgets");
        apply_swap(instance, states[k], best, c.node);
        --occupancy[static_cast<std::size_t>(c.node)];
        ++occupancy[static_cast<std::size_t>(best)];
        placements[k] = states[k].facilities;
        sol.stage_two.push_back({c.node, keep, k, best, best_delta});
      }
    }
  }

  sol.placements = std::move(placements);
  for (const auto& s : states) {
    sol.type_ac.push_back(s.ac);
    sol.total_ac += s.ac;
  }
  sol.stage_two_ms = elapsed_ms(t0);
  return sol;
}

MflpSolution solve_mflp(const ProblemInstance& instance, EdgeSelector& selector, const EpisodeConfig& config,
                        const MflpOptions& options) {
  const auto t0 = Clock::now();
  std::vector<Trajectory> first = stage_one(instance, selector, config, options);
  const double first_ms = elapsed_ms(t0);
  Placements placements;
  for (const auto& t : first) placements.push_back(t.best_facilities);
  MflpSolution sol = stage_two_resolve(instance, std::move(placements), options);
  sol.stage_one = std::move(first);
  sol.stage_one_ms = first_ms;
  return sol;
}

double multinomial_count(const ProblemInstance& instance) {
  double count = 1.0;
  std::size_t left = instance.size();
  for (const auto& t : instance.types()) {
    count *= binomial(left, static_cast<std::size_t>(t.budget));
    left -= static_cast<std::size_t>(t.budget);
  }
  return count;
}

MflpSolution mflp_brute_force(const ProblemInstance& instance, double limit) {
  const auto t0 = Clock::now();
  if (multinomial_count(instance) > limit) throw Error("placement count exceeds the enumeration limit", "budgets");
  const std::size_t n = instance.size();
  const std::size_t num_types = instance.num_types();

  std::vector<std::uint8_t> used(n, 0);
  Placements current(num_types);
  std::vector<double> current_ac(num_types, 0.0);
  MflpSolution best;
  best.total_ac = kInfinity;

  // Depth-first over types; each level enumerates the type's combinations of
  // still-free nodes in lexicographic order.
  std::function<void(std::size_t, double)> recurse = [&](std::size_t k, double partial) {
    if (k == num_types) {
      if (partial < best.total_ac) {
        best.total_ac = partial;
        best.placements = current;
        best.type_ac = current_ac;
      }
      return;
    }
    std::vector<NodeId> free_nodes;
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i]) free_nodes.push_back(static_cast<NodeId>(i));
    const auto p = static_cast<std::size_t>(instance.budget(k));
    const std::size_t m = free_nodes.size();
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      auto& set = current[k];
      set.clear();
      for (std::size_t q : idx) set.push_back(free_nodes[q]);
      const double ac = recompute_access_cost(instance, k, set);
      current_ac[k] = ac;
      for (NodeId f : set) used[static_cast<std::size_t>(f)] = 1;
      recurse(k + 1, partial + ac);
      for (NodeId f : current[k]) used[static_cast<std::size_t>(f)] = 0;
      std::size_t i = p;
      while (i > 0 && idx[i - 1] == m - p + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < p; ++j) idx[j] = idx[j - 1] + 1;
    }
  };
  recurse(0, 0.0);
  best.stage_two_ms = elapsed_ms(t0);
  return best;
}

}  // namespace flp
