#include "flp/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "flp/cost_engine.hpp"
#include "flp/swap_search.hpp"

namespace flp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_budget(const ProblemInstance& instance, int p) {
  if (p < 1 || static_cast<std::size_t>(p) > instance.size())
    throw Error("budget " + std::to_string(p) + " must lie in [1, " + std::to_string(instance.size()) + "]", "p");
}

void check_init(const ProblemInstance& instance, int p, std::span<const NodeId> init) {
  check_budget(instance, p);
  if (init.size() != static_cast<std::size_t>(p))
    throw Error("initial solution has " + std::to_string(init.size()) + " facilities, expected " + std::to_string(p),
                "init");
}

struct BestMove {
  NodeId insert = kNoNode;
  NodeId remove = kNoNode;
  double delta = kInfinity;
};

// Lexicographic (insert, remove) scan of the delta table; `admissible` filters moves.
template <typename Pred>
BestMove scan_moves(const AssignmentState& state, const Eigen::MatrixXd& table, Pred&& admissible) {
  BestMove best;
  for (Eigen::Index i = 0; i < table.cols(); ++i) {
    if (state.open[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      const double d = table(r, i);
      const NodeId rem = state.facilities[static_cast<std::size_t>(r)];
      if (d < best.delta && admissible(static_cast<NodeId>(i), rem, d)) best = {static_cast<NodeId>(i), rem, d};
    }
  }
  return best;
}

long long edge_count(const ProblemInstance& instance, int p) {
  return static_cast<long long>(p) * static_cast<long long>(instance.size() - static_cast<std::size_t>(p));
}

}  // namespace

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > 1e300) return kInfinity;
  }
  return std::round(c);
}

SolverReport brute_force(const ProblemInstance& instance, std::size_t type, int p, double limit) {
  check_budget(instance, p);
  const auto t0 = Clock::now();
  const std::size_t n = instance.size();
  const auto k = static_cast<std::size_t>(p);
  const double count = binomial(n, k);
  if (count > limit)
    throw Error("C(" + std::to_string(n) + "," + std::to_string(k) + ") exceeds the enumeration limit", "p");

  std::vector<NodeId> comb(k);
  std::iota(comb.begin(), comb.end(), 0);
  SolverReport rep;
  rep.method = "bf";
  rep.access_cost = kInfinity;
  while (true) {
    const double ac = recompute_access_cost(instance, type, comb);
    ++rep.evaluations;
    if (ac < rep.access_cost) {
      rep.access_cost = ac;
      rep.facilities = comb;
    }
    // next combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && static_cast<std::size_t>(comb[i - 1]) == n - k + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  rep.iterations = rep.evaluations;
  rep.wall_time_ms = elapsed_ms(t0);
  return rep;
}

SolverReport local_search(const ProblemInstance& instance, std::size_t type, int p, std::span<const NodeId> init) {
  check_init(instance, p, init);
  const auto t0 = Clock::now();
  AssignmentState state = build_assignment(instance, type, init);
  SolverReport rep;
  rep.method = "ls";
  while (true) {
    const Eigen::MatrixXd table = swap_delta_table(instance, state);
    rep.evaluations += edge_count(instance, p);
    const BestMove m = scan_moves(state, table, [](NodeId, NodeId, double) { return true; });
    if (m.insert == kNoNode || !(m.delta < -1e-12)) break;
    apply_swap(instance, state, m.insert, m.remove);
    ++rep.iterations;
  }
  rep.facilities = state.facilities;
  rep.access_cost = state.ac;
  rep.wall_time_ms = elapsed_ms(t0);
  return rep;
}

SolverReport tabu_search(const ProblemInstance& instance, std::size_t type, int p, std::span<const NodeId> init,
                         int iterations, int tenure) {
  check_init(instance, p, init);
  const auto t0 = Clock::now();
  AssignmentState state = build_assignment(instance, type, init);
  TabuList tabu(instance.size(), tenure);
  SolverReport rep;
  rep.method = "ts";
  rep.facilities = state.facilities;
  rep.access_cost = state.ac;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd table = swap_delta_table(instance, state);
    rep.evaluations += edge_count(instance, p);
    const double best_ac = rep.access_cost;
    const double ac = state.ac;
    const BestMove m = scan_moves(state, table, [&](NodeId i, NodeId r, double d) {
      return (!tabu.is_tabu(i, it) && !tabu.is_tabu(r, it)) || ac + d < best_ac - 1e-12;
    });
    if (m.insert == kNoNode) break;
    apply_swap(instance, state, m.insert, m.remove);
    tabu.mark(m.insert, it);
    tabu.mark(m.remove, it);
    ++rep.iterations;
    if (state.ac < rep.access_cost) {
      rep.access_cost = state.ac;
      rep.facilities = state.facilities;
    }
  }
  rep.wall_time_ms = elapsed_ms(t0);
  return rep;
}

SolverReport vns(const ProblemInstance& instance, std::size_t type, int p, std::span<const NodeId> init, int k_max,
                 int iterations, std::uint64_t seed) {
  check_init(instance, p, init);
  const auto t0 = Clock::now();
  SolverReport cur = local_search(instance, type, p, init);
  cur.method = "vns";
  if (k_max <= 0) {
    cur.wall_time_ms = elapsed_ms(t0);
    return cur;
  }
  const std::size_t n = instance.size();
  std::mt19937_64 rng(seed);
  int k = 1;
  for (int it = 0; it < iterations; ++it) {
    std::vector<NodeId> shaken = cur.facilities;
    std::vector<std::uint8_t> open(n, 0);
    for (NodeId f : shaken) open[static_cast<std::size_t>(f)] = 1;
    if (shaken.size() < n) {
      std::uniform_int_distribution<std::size_t> pick_out(0, shaken.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
      for (int s = 0; s < k; ++s) {
        const std::size_t slot = pick_out(rng);
        std::size_t in;
        do in = pick_node(rng);
        while (open[in]);
        open[static_cast<std::size_t>(shaken[slot])] = 0;
        open[in] = 1;
        shaken[slot] = static_cast<NodeId>(in);
      }
    }
    std::sort(shaken.begin(), shaken.end());
    const SolverReport ls = local_search(instance, type, p, shaken);
    cur.evaluations += ls.evaluations;
    ++cur.iterations;
    if (ls.access_cost < cur.access_cost - 1e-12) {
      cur.access_cost = ls.access_cost;
      cur.facilities = ls.facilities;
      k = 1;
    } else {
      k = k % k_max + 1;
    }
  }
  cur.wall_time_ms = elapsed_ms(t0);
  return cur;
}

SolverReport genetic(const ProblemInstance& instance, std::size_t type, int p, const GeneticOptions& options) {
  check_budget(instance, p);
  if (options.population < 2) throw Error("population must be at least 2", "population");
  const auto t0 = Clock::now();
  const std::size_t n = instance.size();
  const auto k = static_cast<std::size_t>(p);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  struct Individual {
    std::vector<NodeId> set;
    double ac = 0.0;
  };
  SolverReport rep;
  rep.method = "ga";
  rep.access_cost = kInfinity;

  auto evaluate = [&](Individual& ind) {
    std::sort(ind.set.begin(), ind.set.end());
    ind.ac = recompute_access_cost(instance, type, ind.set);
    ++rep.evaluations;
    if (ind.ac < rep.access_cost || (ind.ac == rep.access_cost && ind.set < rep.facilities)) {
      rep.access_cost = ind.ac;
      rep.facilities = ind.set;
    }
  };
  auto random_index = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng); };

  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<Individual> pop(static_cast<std::size_t>(options.population));
  for (auto& ind : pop) {
    for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + random_index(n - i)]);
    ind.set.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    evaluate(ind);
  }

  auto tournament = [&]() -> const Individual& {
    const std::size_t a = random_index(pop.size());
    const std::size_t b = random_index(pop.size());
    return pop[b].ac < pop[a].ac ? pop[b] : pop[a];
  };

  std::vector<std::uint8_t> in_child(n);
  for (int g = 0; g < options.generations; ++g) {
    std::stable_sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.ac < b.ac; });
    std::vector<Individual> next;
    next.reserve(pop.size());
    next.push_back(pop.front());
    while (next.size() < pop.size()) {
      const Individual& pa = tournament();
      const Individual& pb = tournament();
      std::vector<NodeId> common, diff;
      std::set_intersection(pa.set.begin(), pa.set.end(), pb.set.begin(), pb.set.end(), std::back_inserter(common));
      std::set_symmetric_difference(pa.set.begin(), pa.set.end(), pb.set.begin(), pb.set.end(),
                                    std::back_inserter(diff));
      Individual child;
      child.set = common;
      std::vector<NodeId> unused;
      for (NodeId d : diff) (coin(rng) < 0.5 ? child.set : unused).push_back(d);
      // repair to exactly p
      while (child.set.size() > k) {
        const std::size_t drop = common.size() + random_index(child.set.size() - common.size());
        unused.push_back(child.set[drop]);
        child.set.erase(child.set.begin() + static_cast<std::ptrdiff_t>(drop));
      }
      while (child.set.size() < k) {
        const std::size_t take = random_index(unused.size());
        child.set.push_back(unused[take]);
        unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(take));
      }
      if (k < n && coin(rng) < options.mutation_rate) {
        std::fill(in_child.begin(), in_child.end(), 0);
        for (NodeId f : child.set) in_child[static_cast<std::size_t>(f)] = 1;
        std::size_t in;
        do in = random_index(n);
        while (in_child[in]);
        child.set[random_index(k)] = static_cast<NodeId>(in);
      }
      evaluate(child);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    ++rep.iterations;
  }
  rep.wall_time_ms = elapsed_ms(t0);
  return rep;
}

LpStats write_mip_lp(const ProblemInstance& instance, std::size_t type, int p, std::ostream& out) {
  check_budget(instance, p);
  const std::size_t n = instance.size();
  if (n > kMaxLpNodes) throw Error("LP export is limited to " + std::to_string(kMaxLpNodes) + " nodes", "n");
  const auto& h = instance.demand(type);
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto y = [](std::size_t i, std::size_t j) { return "y_" + std::to_string(i) + "_" + std::to_string(j); };
  auto x = [](std::size_t j) { return "x_" + std::to_string(j); };

  LpStats stats;
  out << "\\ p-median model for facility type " << instance.type(type).name << "\n";
  out << "Minimize\n obj:";
  std::size_t terms = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = h[i] * instance.dist(static_cast<NodeId>(i), static_cast<NodeId>(j));
      if (c == 0.0) continue;
      out << (terms ? " +" : "") << ' ' << num(c) << ' ' << y(i, j);
      if (++terms % 8 == 0) out << "\n ";
    }
  if (terms == 0) out << " 0 " << x(0);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << " assign_" << i << ":";
    for (std::size_t j = 0; j < n; ++j) {
      out << (j ? " +" : "") << ' ' << y(i, j);
      if ((j + 1) % 16 == 0 && j + 1 < n) out << "\n ";
    }
    out << " = 1\n";
    ++stats.constraints;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out << " link_" << i << '_' << j << ": " << y(i, j) << " - " << x(j) << " <= 0\n";
      ++stats.constraints;
    }
  out << " budget:";
  for (std::size_t j = 0; j < n; ++j) {
    out << (j ? " +" : "") << ' ' << x(j);
    if ((j + 1) % 16 == 0 && j + 1 < n) out << "\n ";
  }
  out << " = " << p << "\n";
  ++stats.constraints;
  out << "Binary\n";
  for (std::size_t j = 0; j < n; ++j) {
    out << ' ' << x(j) << '\n';
    ++stats.binaries;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out << ' ' << y(i, j) << '\n';
      ++stats.binaries;
    }
  out << "End\n";
  return stats;
}

LpStats export_mip_lp(const ProblemInstance& instance, std::size_t type, int p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write LP file '" + path.string() + "'");
  LpStats s = write_mip_lp(instance, type, p, out);
  out.flush();
  if (!out) throw Error("I/O failure writing LP file '" + path.string() + "'");
  return s;
}

}  // namespace flp
