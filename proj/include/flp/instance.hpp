#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace flp {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Base error for everything the library throws. `field()` carries a dotted
/// path into the offending input when one exists (e.g. "demands.a").
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string field = {})
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class Metric { euclidean, haversine };
enum class DemandModel { uniform, lognormal };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);
std::string_view to_string(DemandModel m);
DemandModel parse_demand_model(std::string_view s);

inline constexpr double kEarthRadiusKm = 6371.0;

struct Region {
  NodeId id = 0;
  double x = 0.0;  // longitude degrees for haversine
  double y = 0.0;  // latitude degrees for haversine
};

struct FacilityType {
  std::string name;
  std::vector<double> demand;  // one entry per region
  int budget = 1;
};

// Immutable after construction; safe to share across threads.
class ProblemInstance {
 public:
  ProblemInstance() = default;
  ProblemInstance(std::vector<Region> nodes, Metric metric, std::vector<FacilityType> types);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t num_types() const noexcept { return types_.size(); }
  Metric metric() const noexcept { return metric_; }
  const std::vector<Region>& nodes() const noexcept { return nodes_; }
  const std::vector<FacilityType>& types() const noexcept { return types_; }
  const FacilityType& type(std::size_t k) const { return types_.at(k); }
  const std::vector<double>& demand(std::size_t k) const { return types_.at(k).demand; }
  int budget(std::size_t k) const { return types_.at(k).budget; }
  int total_budget() const noexcept;

  /// Index of the type named `name` in declared order; throws if unknown.
  std::size_t type_index(std::string_view name) const;

  /// Checked distance; throws on out-of-range ids.
  double distance(NodeId i, NodeId j) const;

  /// Unchecked hot-path distance.
  double dist(NodeId i, NodeId j) const noexcept {
    if (matrix_) return (*matrix_)(i, j);
    return raw_distance(nodes_[static_cast<std::size_t>(i)], nodes_[static_cast<std::size_t>(j)]);
  }

  bool has_distance_matrix() const noexcept { return matrix_ != nullptr; }

  /// Copy of this instance with a new budget vector (declared type order).
  ProblemInstance with_budgets(const std::vector<int>& budgets) const;

  friend ProblemInstance with_distance_matrix(ProblemInstance instance);

 private:
  double raw_distance(const Region& a, const Region& b) const noexcept;
  void validate() const;

  std::vector<Region> nodes_;
  Metric metric_ = Metric::euclidean;
  std::vector<FacilityType> types_;
  std::shared_ptr<const Eigen::MatrixXd> matrix_;
};

inline constexpr std::size_t kMaxDistanceMatrixNodes = 5000;

/// Attaches a precomputed n×n distance matrix; throws when n exceeds
/// kMaxDistanceMatrixNodes.
ProblemInstance with_distance_matrix(ProblemInstance instance);

/// Attaches the matrix only when n is small enough; otherwise returns the
/// instance unchanged (lazy distances).
ProblemInstance maybe_with_distance_matrix(ProblemInstance instance);

ProblemInstance load_instance(const std::filesystem::path& path);
ProblemInstance parse_instance(std::string_view json_text);
std::string instance_to_json(const ProblemInstance& instance);
void save_instance(const ProblemInstance& instance, const std::filesystem::path& path);

ProblemInstance generate_synthetic(std::size_t n, const std::vector<std::pair<std::string, int>>& types,
                                   std::uint64_t seed, DemandModel demand_model = DemandModel::uniform);

}  // namespace flp
