#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "flp/cost_engine.hpp"
#include "flp/instance.hpp"

namespace flp {

/// One swap-graph edge: move the facility at `remove` (occupied) to `insert` (vacant).
struct Edge {
  NodeId insert = kNoNode;
  NodeId remove = kNoNode;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class TabuList {
 public:
  TabuList(std::size_t n, int tenure);

  /// Records `node` as tabu until step + tenure (exclusive).
  void mark(NodeId node, int step);
  bool is_tabu(NodeId node, int step) const noexcept { return expiry_[static_cast<std::size_t>(node)] > step; }
  int tenure() const noexcept { return tenure_; }

 private:
  std::vector<int> expiry_;
  int tenure_;
};

struct EpisodeConfig {
  int max_steps = 1;
  int tabu_tenure = 7;
  bool aspiration = true;
  std::uint64_t seed = 0;
};

/// Per-episode constraints used by the planner and by multi-type solving.
struct EpisodeOptions {
  std::vector<NodeId> pinned;   // frozen facilities of this type (never removed)
  std::vector<NodeId> blocked;  // nodes this type may never occupy
  std::optional<std::vector<NodeId>> initial;  // overrides greedy_init when set
};

/// Greedy add heuristic: repeatedly opens the node with the largest access
/// cost reduction (ties to the lowest id). `pinned` nodes are opened first,
/// `blocked` nodes are never opened.
std::vector<NodeId> greedy_init(const ProblemInstance& instance, std::size_t type, int p,
                                std::span<const NodeId> pinned = {}, std::span<const NodeId> blocked = {});

struct WireOptions {
  bool aspiration = true;
  const std::vector<std::uint8_t>* pinned = nullptr;   // per node, may be null
  const std::vector<std::uint8_t>* blocked = nullptr;  // per node, may be null
};

struct WireResult {
  std::vector<Edge> candidates;  // ordered by (insert, remove)
  std::size_t total_edges = 0;   // size of the unfiltered swap graph
  std::size_t tabu_pruned = 0;
  std::size_t negative_pruned = 0;
};

/// Swap-graph edges (vacant × occupied), honoring pinned/blocked masks.
std::size_t count_swap_edges(const AssignmentState& state, const WireOptions& options = {});

/// Dynamic wiring: the swap graph minus tabu edges (unless aspiration admits
/// them) minus provably non-improving far-apart edges with gain < loss.
WireResult wire(const ProblemInstance& instance, const AssignmentState& state, const TabuList& tabu, int step,
                double best_ac_so_far, const WireOptions& options = {});

/// Applies the swap, marks both endpoints tabu, and returns the reward
/// (AC before minus AC after).
double step(const ProblemInstance& instance, AssignmentState& state, Edge edge, TabuList& tabu, int t);

struct SelectionContext {
  const ProblemInstance& instance;
  const AssignmentState& state;
  std::span<const Edge> candidates;
  int step;
  std::mt19937_64& rng;
};

/// Chooses one edge out of a non-empty wired candidate list.
class EdgeSelector {
 public:
  virtual ~EdgeSelector() = default;
  virtual std::size_t select(const SelectionContext& ctx) = 0;
  virtual std::string_view name() const = 0;
};

/// Picks the candidate with the smallest exact delta (first in order on ties).
class BestDeltaSelector final : public EdgeSelector {
 public:
  std::size_t select(const SelectionContext& ctx) override;
  std::string_view name() const override { return "greedy"; }
};

class RandomSelector final : public EdgeSelector {
 public:
  std::size_t select(const SelectionContext& ctx) override;
  std::string_view name() const override { return "random"; }
};

struct StepRecord {
  Edge edge;
  double delta = 0.0;
  std::size_t candidates = 0;   // edges handed to the selector
  std::size_t total_edges = 0;  // unfiltered swap-graph size at this step
};

struct Trajectory {
  std::size_t type = 0;
  std::vector<NodeId> initial_facilities;
  double initial_ac = 0.0;
  std::vector<NodeId> best_facilities;
  double best_ac = 0.0;
  std::vector<StepRecord> steps;
  std::vector<double> best_ac_trace;  // best-so-far after each step
  bool local_optimum = false;         // stopped early: no single swap improves
  double wall_time_ms = 0.0;
};

Trajectory run_episode(const ProblemInstance& instance, std::size_t type, int p, EdgeSelector& selector,
                       const EpisodeConfig& config, const EpisodeOptions& options = {});

}  // namespace flp
