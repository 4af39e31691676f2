#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "flp/mflp.hpp"
#include "flp/policy_gnn.hpp"

namespace flp {

// Shared front door for the CLI and the planning service: runs one method on
// every type of an instance and resolves cross-type conflicts.

struct SolveRequest {
  std::string method = "drl";  // drl | greedy | ls | ts | vns | ga | bf
  int steps = -1;              // swap budget K for drl/greedy; negative: 3 P^k per type
  std::uint64_t seed = 0;
  int tabu_tenure = 7;
  int ts_iterations = 0;  // 0: 2p
  int vns_k_max = 3;
  int vns_iterations = 20;
  int ga_population = 32;
  int ga_generations = 50;
  MflpOptions options;  // pins; drl and greedy only
};

bool is_solve_method(std::string_view method);

/// Baselines solve each type independently and then go through stage II; bf
/// on a multi-type instance is the joint exhaustive optimum.
MflpSolution solve_instance(const ProblemInstance& instance, const SolveRequest& request,
                            std::shared_ptr<const Policy> policy = nullptr);

/// Throws Error("pinned") for out-of-range ids, duplicates, pins exceeding a
/// budget or nodes pinned by two types.
void validate_pins(const ProblemInstance& instance, const MflpOptions& options);

}  // namespace flp
