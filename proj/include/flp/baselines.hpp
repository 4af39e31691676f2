#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flp/instance.hpp"

namespace flp {

struct SolverReport {
  std::string method;
  std::vector<NodeId> facilities;  // sorted
  double access_cost = 0.0;
  double wall_time_ms = 0.0;
  long long iterations = 0;
  long long evaluations = 0;  // swap (or full-solution) evaluations
};

inline constexpr double kBruteForceLimit = 1e7;

/// C(n, k) as a double (saturating, for size guards).
double binomial(std::size_t n, std::size_t k);

/// Exhaustive enumeration. Ties keep the lexicographically smallest set.
SolverReport brute_force(const ProblemInstance& instance, std::size_t type, int p, double limit = kBruteForceLimit);

/// Best-improvement swap descent; stops when no swap has delta < -1e-12.
SolverReport local_search(const ProblemInstance& instance, std::size_t type, int p, std::span<const NodeId> init);

/// Best non-tabu swap per iteration (worsening allowed), aspiration on the
/// best-so-far, returns the best visited solution.
SolverReport tabu_search(const ProblemInstance& instance, std::size_t type, int p, std::span<const NodeId> init,
                         int iterations, int tenure);

/// Basic VNS: shake with k random swaps, descend, accept on improvement
/// (k resets to 1) else advance k cyclically. `iterations` bounds the number
/// of shake+descent rounds.
SolverReport vns(const ProblemInstance& instance, std::size_t type, int p, std::span<const NodeId> init, int k_max,
                 int iterations, std::uint64_t seed);

struct GeneticOptions {
  int population = 32;
  int generations = 100;
  double mutation_rate = 0.2;
  std::uint64_t seed = 0;
};

/// Steady generational GA over facility sets: binary tournaments, uniform set
/// crossover with repair to exactly p, one-swap mutation, elitism of one.
SolverReport genetic(const ProblemInstance& instance, std::size_t type, int p, const GeneticOptions& options);

struct LpStats {
  std::size_t constraints = 0;
  std::size_t binaries = 0;
};

/// Writes the p-median MIP in CPLEX LP format:
/// min Σ h_i d_ij y_ij  s.t.  Σ_j y_ij = 1,  y_ij <= x_j,  Σ_j x_j = p,  binary.
LpStats write_mip_lp(const ProblemInstance& instance, std::size_t type, int p, std::ostream& out);
LpStats export_mip_lp(const ProblemInstance& instance, std::size_t type, int p, const std::filesystem::path& path);

inline constexpr std::size_t kMaxLpNodes = 2000;

}  // namespace flp
