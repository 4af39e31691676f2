#include "flp/cost_engine.hpp"

#include <algorithm>
#include <string>

namespace flp {

namespace {

// Strict (distance, id) order used for every nearest-facility decision.
inline bool closer(double da, NodeId a, double db, NodeId b) noexcept {
  return da < db || (da == db && a < b);
}

void check_node(const ProblemInstance& instance, NodeId i, const char* field) {
  if (i < 0 || static_cast<std::size_t>(i) >= instance.size())
    throw Error("node id " + std::to_string(i) + " out of range", field);
}

void rescan(const ProblemInstance& instance, AssignmentState& s, std::size_t u) {
  NodeId b1 = kNoNode, b2 = kNoNode;
  double e1 = kInfinity, e2 = kInfinity;
  const auto uu = static_cast<NodeId>(u);
  for (NodeId f : s.facilities) {
    const double d = instance.dist(uu, f);
    if (b1 == kNoNode || closer(d, f, e1, b1)) {
      b2 = b1;
      e2 = e1;
      b1 = f;
      e1 = d;
    } else if (b2 == kNoNode || closer(d, f, e2, b2)) {
      b2 = f;
      e2 = d;
    }
  }
  s.phi1[u] = b1;
  s.d1[u] = e1;
  s.phi2[u] = b2;
  s.d2[u] = e2;
}

double sum_cost(const std::vector<double>& h, const std::vector<double>& d1) {
  double ac = 0.0;
  for (std::size_t u = 0; u < h.size(); ++u) ac += h[u] * d1[u];
  return ac;
}

void check_swap(const ProblemInstance& instance, const AssignmentState& state, NodeId insert, NodeId remove) {
  check_node(instance, insert, "insert");
  check_node(instance, remove, "remove");
  if (state.is_open(insert)) throw Error("insert node " + std::to_string(insert) + " is already open", "insert");
  if (!state.is_open(remove)) throw Error("remove node " + std::to_string(remove) + " is not open", "remove");
}

}  // namespace

AssignmentState build_assignment(const ProblemInstance& instance, std::size_t type,
                                 std::span<const NodeId> facilities) {
  if (facilities.empty()) throw Error("facility set is empty", "facilities");
  if (type >= instance.num_types()) throw Error("type index out of range", "type");
  const std::size_t n = instance.size();
  AssignmentState s;
  s.type = type;
  s.open.assign(n, 0);
  for (NodeId f : facilities) {
    check_node(instance, f, "facilities");
    if (s.open[static_cast<std::size_t>(f)]) throw Error("duplicate facility " + std::to_string(f), "facilities");
    s.open[static_cast<std::size_t>(f)] = 1;
  }
  s.facilities.assign(facilities.begin(), facilities.end());
  std::sort(s.facilities.begin(), s.facilities.end());
  s.phi1.assign(n, kNoNode);
  s.phi2.assign(n, kNoNode);
  s.d1.assign(n, kInfinity);
  s.d2.assign(n, kInfinity);
  for (std::size_t u = 0; u < n; ++u) rescan(instance, s, u);
  s.ac = sum_cost(instance.demand(type), s.d1);
  return s;
}

double recompute_access_cost(const ProblemInstance& instance, std::size_t type, std::span<const NodeId> facilities) {
  if (facilities.empty()) throw Error("facility set is empty", "facilities");
  const auto& h = instance.demand(type);
  double ac = 0.0;
  for (std::size_t u = 0; u < instance.size(); ++u) {
    double best = kInfinity;
    for (NodeId f : facilities) best = std::min(best, instance.dist(static_cast<NodeId>(u), f));
    ac += h[u] * best;
  }
  return ac;
}

double access_cost_total(const ProblemInstance& instance, std::span<const AssignmentState> states) {
  std::vector<int> seen(instance.num_types(), 0);
  double total = 0.0;
  for (const auto& s : states) {
    if (s.type >= seen.size()) throw Error("state for unknown type index " + std::to_string(s.type), "states");
    if (seen[s.type]++) throw Error("duplicate state for type '" + instance.type(s.type).name + "'", "states");
    total += s.ac;
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) throw Error("missing state for type '" + instance.type(k).name + "'", "states");
  return total;
}

SwapComponents swap_components(const ProblemInstance& instance, const AssignmentState& state, NodeId insert,
                               NodeId remove) {
  check_swap(instance, state, insert, remove);
  if (state.size() < 2)
    throw Error("swap decomposition needs at least two open facilities; use a full recomputation", "facilities");
  const auto& h = instance.demand(state.type);
  SwapComponents c;
  for (std::size_t u = 0; u < instance.size(); ++u) {
    const double du = instance.dist(static_cast<NodeId>(u), insert);
    c.gain += h[u] * std::max(0.0, state.d1[u] - du);
    if (state.phi1[u] == remove) {
      c.loss += h[u] * (state.d2[u] - state.d1[u]);
      c.extra += h[u] * std::max(0.0, state.d2[u] - std::max(du, state.d1[u]));
    }
  }
  c.delta = c.loss - c.gain - c.extra;
  return c;
}

double swap_delta(const ProblemInstance& instance, const AssignmentState& state, NodeId insert, NodeId remove) {
  if (state.size() >= 2) return swap_components(instance, state, insert, remove).delta;
  check_swap(instance, state, insert, remove);
  const NodeId single[] = {insert};
  return recompute_access_cost(instance, state.type, single) - state.ac;
}

void apply_swap(const ProblemInstance& instance, AssignmentState& state, NodeId insert, NodeId remove) {
  check_swap(instance, state, insert, remove);
  auto& f = state.facilities;
  f.erase(std::lower_bound(f.begin(), f.end(), remove));
  f.insert(std::lower_bound(f.begin(), f.end(), insert), insert);
  state.open[static_cast<std::size_t>(remove)] = 0;
  state.open[static_cast<std::size_t>(insert)] = 1;

  const std::size_t n = instance.size();
  if (f.size() == 1) {
    for (std::size_t u = 0; u < n; ++u) rescan(instance, state, u);
  } else {
    for (std::size_t u = 0; u < n; ++u) {
      if (state.phi1[u] == remove || state.phi2[u] == remove) {
        rescan(instance, state, u);
        continue;
      }
      const double du = instance.dist(static_cast<NodeId>(u), insert);
      if (closer(du, insert, state.d1[u], state.phi1[u])) {
        state.phi2[u] = state.phi1[u];
        state.d2[u] = state.d1[u];
        state.phi1[u] = insert;
        state.d1[u] = du;
      } else if (closer(du, insert, state.d2[u], state.phi2[u])) {
        state.phi2[u] = insert;
        state.d2[u] = du;
      }
    }
  }
  state.ac = sum_cost(instance.demand(state.type), state.d1);
}

Eigen::VectorXd gain_vector(const ProblemInstance& instance, const AssignmentState& state) {
  const std::size_t n = instance.size();
  const auto& h = instance.demand(state.type);
  Eigen::VectorXd gain = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (state.open[i]) continue;
    double g = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      g += h[u] * std::max(0.0, state.d1[u] - instance.dist(static_cast<NodeId>(u), static_cast<NodeId>(i)));
    gain[static_cast<Eigen::Index>(i)] = g;
  }
  return gain;
}

Eigen::VectorXd loss_vector(const ProblemInstance& instance, const AssignmentState& state) {
  if (state.size() < 2) throw Error("loss needs at least two open facilities", "facilities");
  const auto& h = instance.demand(state.type);
  Eigen::VectorXd loss = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(instance.size()));
  for (std::size_t u = 0; u < instance.size(); ++u)
    loss[state.phi1[u]] += h[u] * (state.d2[u] - state.d1[u]);
  return loss;
}

Eigen::VectorXd far_apart_radius(const ProblemInstance& instance, const AssignmentState& state) {
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(instance.size()));
  for (std::size_t u = 0; u < instance.size(); ++u) {
    auto& r = radius[state.phi1[u]];
    r = std::max(r, state.d1[u] + state.d2[u]);
  }
  return radius;
}

Eigen::MatrixXd swap_delta_table(const ProblemInstance& instance, const AssignmentState& state) {
  const std::size_t n = instance.size();
  const auto p = static_cast<Eigen::Index>(state.size());
  const auto& h = instance.demand(state.type);
  Eigen::MatrixXd table(p, static_cast<Eigen::Index>(n));

  if (state.size() == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      if (state.open[i]) {
        table(0, static_cast<Eigen::Index>(i)) = kInfinity;
        continue;
      }
      const NodeId single[] = {static_cast<NodeId>(i)};
      table(0, static_cast<Eigen::Index>(i)) = recompute_access_cost(instance, state.type, single) - state.ac;
    }
    return table;
  }

  std::vector<Eigen::Index> row_of(n, -1);
  for (Eigen::Index r = 0; r < p; ++r) row_of[static_cast<std::size_t>(state.facilities[static_cast<std::size_t>(r)])] = r;

  Eigen::VectorXd gain = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd loss = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd extra = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(n));
  // Accumulate in ascending u so every sum matches swap_components bit for bit.
  for (std::size_t u = 0; u < n; ++u) {
    const Eigen::Index r = row_of[static_cast<std::size_t>(state.phi1[u])];
    const double d1 = state.d1[u];
    const double d2 = state.d2[u];
    loss[r] += h[u] * (d2 - d1);
    for (std::size_t i = 0; i < n; ++i) {
      if (state.open[i]) continue;
      const double du = instance.dist(static_cast<NodeId>(u), static_cast<NodeId>(i));
      if (du < d1) gain[static_cast<Eigen::Index>(i)] += h[u] * (d1 - du);
      if (du < d2) extra(r, static_cast<Eigen::Index>(i)) += h[u] * (d2 - std::max(du, d1));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    if (state.open[i]) {
      table.col(c).setConstant(kInfinity);
      continue;
    }
    for (Eigen::Index r = 0; r < p; ++r) table(r, c) = loss[r] - gain[c] - extra(r, c);
  }
  return table;
}

}  // namespace flp
