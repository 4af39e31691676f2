#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "flp/instance.hpp"

namespace flp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Closest / second-closest bookkeeping for one facility type.
///
/// For every region u: phi1[u] is the open facility nearest to u and d1[u] its
/// distance; phi2[u]/d2[u] the runner-up (kNoNode / +inf when only one
/// facility is open). Distances are ordered by (distance, node id), so ties go
/// to the lower id.
struct AssignmentState {
  std::size_t type = 0;
  std::vector<NodeId> facilities;  // sorted ascending
  std::vector<std::uint8_t> open;  // open[i] != 0 iff i is a facility
  std::vector<NodeId> phi1;
  std::vector<NodeId> phi2;
  std::vector<double> d1;
  std::vector<double> d2;
  double ac = 0.0;

  std::size_t size() const noexcept { return facilities.size(); }
  bool is_open(NodeId i) const noexcept { return open[static_cast<std::size_t>(i)] != 0; }
};

struct SwapComponents {
  double gain = 0.0;
  double loss = 0.0;
  double extra = 0.0;
  double delta = 0.0;  // loss - gain - extra: signed change in access cost
};

AssignmentState build_assignment(const ProblemInstance& instance, std::size_t type,
                                 std::span<const NodeId> facilities);

/// Access cost from scratch, without building a state.
double recompute_access_cost(const ProblemInstance& instance, std::size_t type, std::span<const NodeId> facilities);

/// Sum over one state per declared type; throws when a type is missing or repeated.
double access_cost_total(const ProblemInstance& instance, std::span<const AssignmentState> states);

SwapComponents swap_components(const ProblemInstance& instance, const AssignmentState& state, NodeId insert,
                               NodeId remove);

/// Exact access cost change of a swap. Uses the decomposition when at least two
/// facilities are open, a full recomputation otherwise.
double swap_delta(const ProblemInstance& instance, const AssignmentState& state, NodeId insert, NodeId remove);

/// Moves the facility at `remove` to `insert`, updating the closest and
/// second-closest tables incrementally. Single-facility states are rebuilt.
void apply_swap(const ProblemInstance& instance, AssignmentState& state, NodeId insert, NodeId remove);

/// gain(i) for every node (0 at open facilities).
Eigen::VectorXd gain_vector(const ProblemInstance& instance, const AssignmentState& state);

/// loss(j) for every node (0 at vacant nodes). Requires two open facilities.
Eigen::VectorXd loss_vector(const ProblemInstance& instance, const AssignmentState& state);

/// For each open facility j: max over regions u served by j of d(u,j) + d2(u).
/// An insert i with d(i,j) at or beyond this radius has extra(i,j) = 0.
Eigen::VectorXd far_apart_radius(const ProblemInstance& instance, const AssignmentState& state);

/// All swap deltas at once: entry (r, i) is the delta of inserting node i while
/// removing state.facilities[r]. Columns of open nodes are +inf.
Eigen::MatrixXd swap_delta_table(const ProblemInstance& instance, const AssignmentState& state);

}  // namespace flp
