#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "flp/instance.hpp"
#include "flp/swap_search.hpp"

namespace flp {

/// Per-type facility sets in declared type order.
using Placements = std::vector<std::vector<NodeId>>;

struct Conflict {
  NodeId node = kNoNode;
  std::vector<std::size_t> types;  // ascending type index
};

struct Relocation {
  NodeId node = kNoNode;        // conflicted node
  std::size_t kept = 0;         // type that stays
  std::size_t moved = 0;        // type that leaves
  NodeId insert = kNoNode;      // destination
  double delta = 0.0;           // access cost change of the moved type
};

struct MflpSolution {
  Placements placements;
  std::vector<double> type_ac;
  double total_ac = 0.0;
  std::vector<Trajectory> stage_one;  // one per type
  std::vector<Relocation> stage_two;
  double stage_one_ms = 0.0;
  double stage_two_ms = 0.0;
};

struct MflpOptions {
  std::vector<std::vector<NodeId>> pinned;  // per type; empty = none
};

/// Nodes carrying more than one type, ascending by node id.
std::vector<Conflict> detect_conflicts(const Placements& placements);

/// Runs the swap episode for every type independently, in declared order.
/// Pins of other types are blocked for each type.
std::vector<Trajectory> stage_one(const ProblemInstance& instance, EdgeSelector& selector, const EpisodeConfig& config,
                                  const MflpOptions& options = {});

/// Removes every incompatibility conflict with single relocations. Conflicted
/// nodes are visited by descending summed demand; the type with the largest
/// removal loss stays (pinned types always stay; ties go to the first declared
/// type), every other type moves with its minimum-delta swap to a node no type
/// occupies.
MflpSolution stage_two_resolve(const ProblemInstance& instance, Placements placements,
                               const MflpOptions& options = {});

MflpSolution solve_mflp(const ProblemInstance& instance, EdgeSelector& selector, const EpisodeConfig& config,
                        const MflpOptions& options = {});

inline constexpr double kMflpBruteForceLimit = 1e7;

/// n! / (P^1! ... P^K! (n - ΣP)!)
double multinomial_count(const ProblemInstance& instance);

/// Exhaustive optimum over disjoint placements; ties keep the first in
/// (type order, lexicographic set) enumeration order.
MflpSolution mflp_brute_force(const ProblemInstance& instance, double limit = kMflpBruteForceLimit);

/// Recomputed total access cost for a set of placements.
double placements_access_cost(const ProblemInstance& instance, const Placements& placements);

}  // namespace flp
