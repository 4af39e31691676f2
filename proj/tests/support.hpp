#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "flp/instance.hpp"

namespace flp::test {

// Four regions on a line at x = 0..3 with demands 1..4.
inline ProblemInstance line_instance(int p = 2) {
  std::vector<Region> nodes;
  for (int i = 0; i < 4; ++i) nodes.push_back({i, static_cast<double>(i), 0.0});
  return ProblemInstance(nodes, Metric::euclidean, {{"a", {1, 2, 3, 4}, p}});
}

// Two identical types on the line instance.
inline ProblemInstance line_two_types(int pa = 1, int pb = 1) {
  std::vector<Region> nodes;
  for (int i = 0; i < 4; ++i) nodes.push_back({i, static_cast<double>(i), 0.0});
  return ProblemInstance(nodes, Metric::euclidean, {{"a", {1, 2, 3, 4}, pa}, {"b", {1, 2, 3, 4}, pb}});
}

// Independent oracle: plain double loop over regions and facilities.
inline double oracle_ac(const ProblemInstance& inst, std::size_t k, const std::vector<NodeId>& fac) {
  double total = 0.0;
  for (std::size_t u = 0; u < inst.size(); ++u) {
    double best = std::numeric_limits<double>::infinity();
    for (NodeId f : fac) {
      const auto& a = inst.nodes()[u];
      const auto& b = inst.nodes()[static_cast<std::size_t>(f)];
      double d;
      if (inst.metric() == Metric::euclidean) d = std::hypot(a.x - b.x, a.y - b.y);
      else d = inst.distance(static_cast<NodeId>(u), f);
      best = std::min(best, d);
    }
    total += inst.demand(k)[u] * best;
  }
  return total;
}

inline bool close_rel(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Exhaustive single-type optimum, lexicographic tie-break.
inline std::pair<double, std::vector<NodeId>> oracle_optimum(const ProblemInstance& inst, std::size_t k, int p) {
  const int n = static_cast<int>(inst.size());
  std::vector<NodeId> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<NodeId> arg;
  while (true) {
    const double ac = oracle_ac(inst, k, idx);
    if (ac < best) {
      best = ac;
      arg = idx;
    }
    int i = p - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - p + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < p; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return {best, arg};
}

inline std::vector<NodeId> random_set(std::size_t n, int p, std::mt19937_64& rng) {
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(p));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace flp::test
