#include "flp/swap_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace flp {

namespace {

// Relative slack on the far-apart test so rounding in the triangle bound can
// never admit an edge whose extra term is not exactly zero.
constexpr double kFarApartSlack = 1e-12;

double improve_tolerance(double ac) { return 1e-12 * (1.0 + std::abs(ac)); }

bool flagged(const std::vector<std::uint8_t>* mask, NodeId i) {
  return mask != nullptr && (*mask)[static_cast<std::size_t>(i)] != 0;
}

std::vector<std::uint8_t> make_mask(std::size_t n, std::span<const NodeId> nodes, const char* field) {
  std::vector<std::uint8_t> mask(n, 0);
  for (NodeId i : nodes) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) throw Error("node id " + std::to_string(i) + " out of range", field);
    mask[static_cast<std::size_t>(i)] = 1;
  }
  return mask;
}

// Improving edges of the full swap graph; tabu edges only when `include_tabu`.
std::vector<Edge> improving_edges(const ProblemInstance& instance, const AssignmentState& state, const TabuList& tabu,
                                  int t, const WireOptions& options, const Eigen::MatrixXd& table, bool include_tabu) {
  std::vector<Edge> out;
  const double tol = improve_tolerance(state.ac);
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const auto ins = static_cast<NodeId>(i);
    if (state.open[i] || flagged(options.blocked, ins)) continue;
    for (std::size_t r = 0; r < state.size(); ++r) {
      const NodeId rem = state.facilities[r];
      if (flagged(options.pinned, rem)) continue;
      if (!include_tabu && (tabu.is_tabu(ins, t) || tabu.is_tabu(rem, t))) continue;
      if (table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) < -tol) out.push_back({ins, rem});
    }
  }
  return out;
}

}  // namespace

TabuList::TabuList(std::size_t n, int tenure) : expiry_(n, std::numeric_limits<int>::min()), tenure_(tenure) {
  if (tenure < 0) throw Error("tabu tenure must be non-negative", "tabu_tenure");
}

void TabuList::mark(NodeId node, int step) { expiry_[static_cast<std::size_t>(node)] = step + tenure_; }

std::vector<NodeId> greedy_init(const ProblemInstance& instance, std::size_t type, int p,
                                std::span<const NodeId> pinned, std::span<const NodeId> blocked) {
  const std::size_t n = instance.size();
  if (p < 1 || static_cast<std::size_t>(p) > n)
    throw Error("budget " + std::to_string(p) + " must lie in [1, " + std::to_string(n) + "]", "p");
  if (pinned.size() > static_cast<std::size_t>(p)) throw Error("more pinned nodes than budget", "pinned");
  const auto& h = instance.demand(type);
  const auto block = make_mask(n, blocked, "blocked");
  std::vector<std::uint8_t> open(n, 0);
  std::vector<double> d1(n, kInfinity);
  std::vector<NodeId> chosen;

  auto open_node = [&](NodeId c) {
    open[static_cast<std::size_t>(c)] = 1;
    chosen.push_back(c);
    for (std::size_t u = 0; u < n; ++u) d1[u] = std::min(d1[u], instance.dist(static_cast<NodeId>(u), c));
  };

  for (NodeId c : pinned) {
    if (c < 0 || static_cast<std::size_t>(c) >= n) throw Error("node id out of range", "pinned");
    if (block[static_cast<std::size_t>(c)]) throw Error("pinned node " + std::to_string(c) + " is blocked", "pinned");
    if (open[static_cast<std::size_t>(c)]) throw Error("duplicate pinned node " + std::to_string(c), "pinned");
    open_node(c);
  }
  while (chosen.size() < static_cast<std::size_t>(p)) {
    NodeId best = kNoNode;
    double best_cost = kInfinity;
    for (std::size_t c = 0; c < n; ++c) {
      if (open[c] || block[c]) continue;
      double cost = 0.0;
      for (std::size_t u = 0; u < n; ++u)
        cost += h[u] * std::min(d1[u], instance.dist(static_cast<NodeId>(u), static_cast<NodeId>(c)));
      if (best == kNoNode || cost < best_cost) {
        best = static_cast<NodeId>(c);
        best_cost = cost;
      }
    }
    if (best == kNoNode) throw Error("not enough unblocked nodes to place the budget", "p");
    open_node(best);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::size_t count_swap_edges(const AssignmentState& state, const WireOptions& options) {
  std::size_t inserts = 0, removes = 0;
  for (std::size_t i = 0; i < state.open.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    if (state.open[i]) {
      if (!flagged(options.pinned, id)) ++removes;
    } else if (!flagged(options.blocked, id)) {
      ++inserts;
    }
  }
  return inserts * removes;
}

WireResult wire(const ProblemInstance& instance, const AssignmentState& state, const TabuList& tabu, int t,
                double best_ac_so_far, const WireOptions& options) {
  WireResult out;
  out.total_edges = count_swap_edges(state, options);
  if (out.total_edges == 0) return out;

  const bool decomposable = state.size() >= 2;
  Eigen::VectorXd gain, loss, radius;
  if (decomposable) {
    gain = gain_vector(instance, state);
    loss = loss_vector(instance, state);
    radius = far_apart_radius(instance, state);
  }

  for (std::size_t i = 0; i < instance.size(); ++i) {
    const auto ins = static_cast<NodeId>(i);
    if (state.open[i] || flagged(options.blocked, ins)) continue;
    const bool ins_tabu = tabu.is_tabu(ins, t);
    for (NodeId rem : state.facilities) {
      if (flagged(options.pinned, rem)) continue;
      if (ins_tabu || tabu.is_tabu(rem, t)) {
        if (options.aspiration && state.ac + swap_delta(instance, state, ins, rem) < best_ac_so_far) {
          out.candidates.push_back({ins, rem});
        } else {
          ++out.tabu_pruned;
        }
        continue;
      }
      if (decomposable) {
        const double r = radius[rem];
        const bool far_apart = instance.dist(ins, rem) >= r + kFarApartSlack * (1.0 + r);
        if (far_apart && gain[ins] < loss[rem]) {
          ++out.negative_pruned;
          continue;
        }
      }
      out.candidates.push_back({ins, rem});
    }
  }
  return out;
}

double step(const ProblemInstance& instance, AssignmentState& state, Edge edge, TabuList& tabu, int t) {
  const double before = state.ac;
  apply_swap(instance, state, edge.insert, edge.remove);
  tabu.mark(edge.insert, t);
  tabu.mark(edge.remove, t);
  return before - state.ac;
}

std::size_t BestDeltaSelector::select(const SelectionContext& ctx) {
  const auto& st = ctx.state;
  std::size_t best = 0;
  double best_delta = kInfinity;
  if (ctx.candidates.size() > ctx.instance.size()) {
    const Eigen::MatrixXd table = swap_delta_table(ctx.instance, st);
    for (std::size_t c = 0; c < ctx.candidates.size(); ++c) {
      const auto e = ctx.candidates[c];
      const auto r = std::lower_bound(st.facilities.begin(), st.facilities.end(), e.remove) - st.facilities.begin();
      const double d = table(r, e.insert);
      if (d < best_delta) {
        best_delta = d;
        best = c;
      }
    }
    return best;
  }
  for (std::size_t c = 0; c < ctx.candidates.size(); ++c) {
    const double d = swap_delta(ctx.instance, st, ctx.candidates[c].insert, ctx.candidates[c].remove);
    if (d < best_delta) {
      best_delta = d;
      best = c;
    }
  }
  return best;
}

std::size_t RandomSelector::select(const SelectionContext& ctx) {
  std::uniform_int_distribution<std::size_t> pick(0, ctx.candidates.size() - 1);
  return pick(ctx.rng);
}

Trajectory run_episode(const ProblemInstance& instance, std::size_t type, int p, EdgeSelector& selector,
                       const EpisodeConfig& config, const EpisodeOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = instance.size();
  if (config.max_steps < 0) throw Error("max_steps must be non-negative", "max_steps");

  const auto pinned = make_mask(n, options.pinned, "pinned");
  const auto blocked = make_mask(n, options.blocked, "blocked");
  std::vector<NodeId> init = options.initial ? *options.initial
                                             : greedy_init(instance, type, p, options.pinned, options.blocked);
  if (options.initial) {
    for (NodeId f : init)
      if (f >= 0 && static_cast<std::size_t>(f) < n && blocked[static_cast<std::size_t>(f)])
        throw Error("initial facility " + std::to_string(f) + " is blocked", "initial");
  }

  AssignmentState state = build_assignment(instance, type, init);
  for (NodeId pin : options.pinned)
    if (!state.is_open(pin)) throw Error("pinned node " + std::to_string(pin) + " missing from initial set", "pinned");

  Trajectory traj;
  traj.type = type;
  traj.initial_facilities = state.facilities;
  traj.initial_ac = state.ac;
  traj.best_facilities = state.facilities;
  traj.best_ac = state.ac;

  const WireOptions wopt{config.aspiration, &pinned, &blocked};
  TabuList tabu(n, config.tabu_tenure);
  std::mt19937_64 rng(config.seed);

  for (int t = 0; t < config.max_steps; ++t) {
    WireResult wired = wire(instance, state, tabu, t, traj.best_ac, wopt);
    if (wired.total_edges == 0) {
      traj.local_optimum = true;
      break;
    }
    std::vector<Edge> candidates = std::move(wired.candidates);
    if (candidates.empty()) {
      const Eigen::MatrixXd table = swap_delta_table(instance, state);
      candidates = improving_edges(instance, state, tabu, t, wopt, table, false);
      if (candidates.empty()) candidates = improving_edges(instance, state, tabu, t, wopt, table, true);
      if (candidates.empty()) {
        traj.local_optimum = true;
        break;
      }
    }
    const SelectionContext ctx{instance, state, candidates, t, rng};
    const std::size_t pick = selector.select(ctx);
    if (pick >= candidates.size()) throw Error("selector returned an out-of-range candidate", "selector");
    const Edge e = candidates[pick];
    const double reward = step(instance, state, e, tabu, t);
    traj.steps.push_back({e, -reward, candidates.size(), wired.total_edges});
    if (state.ac < traj.best_ac) {
      traj.best_ac = state.ac;
      traj.best_facilities = state.facilities;
    }
    traj.best_ac_trace.push_back(traj.best_ac);
  }
  traj.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

}  // namespace flp
