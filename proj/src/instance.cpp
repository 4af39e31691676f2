#include "flp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

namespace flp {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "haversine"; }

Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "haversine") return Metric::haversine;
  throw Error("unknown metric '" + std::string(s) + "'", "metric");
}

std::string_view to_string(DemandModel m) { return m == DemandModel::uniform ? "uniform" : "lognormal"; }

DemandModel parse_demand_model(std::string_view s) {
  if (s == "uniform") return DemandModel::uniform;
  if (s == "lognormal") return DemandModel::lognormal;
  throw Error("unknown demand model '" + std::string(s) + "'", "demand_model");
}

ProblemInstance::ProblemInstance(std::vector<Region> nodes, Metric metric, std::vector<FacilityType> types)
    : nodes_(std::move(nodes)), metric_(metric), types_(std::move(types)) {
  validate();
}

void ProblemInstance::validate() const {
  const std::size_t n = nodes_.size();
  if (n == 0) throw Error("instance has no nodes", "nodes");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    if (nodes_[i].id != static_cast<NodeId>(i))
      throw Error("node ids must be contiguous 0..n-1 in order, found " + std::to_string(nodes_[i].id), path + ".id");
    if (!std::isfinite(nodes_[i].x) || !std::isfinite(nodes_[i].y)) throw Error("non-finite coordinate", path);
  }
  if (types_.empty()) throw Error("at least one facility type is required", "demands");
  long long total = 0;
  for (std::size_t k = 0; k < types_.size(); ++k) {
    const auto& t = types_[k];
    for (std::size_t q = 0; q < k; ++q)
      if (types_[q].name == t.name) throw Error("duplicate facility type", "demands." + t.name);
    if (t.demand.size() != n)
      throw Error("demand length " + std::to_string(t.demand.size()) + " does not match node count " +
                      std::to_string(n),
                  "demands." + t.name);
    for (std::size_t i = 0; i < n; ++i)
      if (!(t.demand[i] >= 0.0) || !std::isfinite(t.demand[i]))
        throw Error("demand must be finite and non-negative", "demands." + t.name + "[" + std::to_string(i) + "]");
    if (t.budget < 1) throw Error("budget must be >= 1", "budgets." + t.name);
    total += t.budget;
  }
  if (total > static_cast<long long>(n))
    throw Error("sum of budgets " + std::to_string(total) + " exceeds node count " + std::to_string(n) +
                    " (incompatibility infeasible)",
                "budgets");
}

int ProblemInstance::total_budget() const noexcept {
  int total = 0;
  for (const auto& t : types_) total += t.budget;
  return total;
}

std::size_t ProblemInstance::type_index(std::string_view name) const {
  for (std::size_t k = 0; k < types_.size(); ++k)
    if (types_[k].name == name) return k;
  throw Error("unknown facility type '" + std::string(name) + "'", "type");
}

double ProblemInstance::distance(NodeId i, NodeId j) const {
  const auto n = static_cast<NodeId>(nodes_.size());
  if (i < 0 || i >= n) throw Error("node id " + std::to_string(i) + " out of range", "i");
  if (j < 0 || j >= n) throw Error("node id " + std::to_string(j) + " out of range", "j");
  return dist(i, j);
}

double ProblemInstance::raw_distance(const Region& a, const Region& b) const noexcept {
  if (metric_ == Metric::euclidean) return std::hypot(a.x - b.x, a.y - b.y);
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double lat1 = a.y * kDeg;
  const double lat2 = b.y * kDeg;
  const double sdlat = std::sin((lat2 - lat1) / 2.0);
  const double sdlon = std::sin((b.x - a.x) * kDeg / 2.0);
  const double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

ProblemInstance ProblemInstance::with_budgets(const std::vector<int>& budgets) const {
  if (budgets.size() != types_.size()) throw Error("budget count does not match type count", "budgets");
  auto types = types_;
  for (std::size_t k = 0; k < types.size(); ++k) types[k].budget = budgets[k];
  ProblemInstance out(nodes_, metric_, std::move(types));
  out.matrix_ = matrix_;
  return out;
}

ProblemInstance with_distance_matrix(ProblemInstance instance) {
  const std::size_t n = instance.size();
  if (n > kMaxDistanceMatrixNodes)
    throw Error("distance matrix mode is limited to " + std::to_string(kMaxDistanceMatrixNodes) + " nodes");
  if (instance.matrix_) return instance;
  auto m = std::make_shared<Eigen::MatrixXd>(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    (*m)(j, j) = 0.0;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double d = instance.raw_distance(instance.nodes_[i], instance.nodes_[j]);
      (*m)(i, j) = d;
      (*m)(j, i) = d;
    }
  }
  instance.matrix_ = std::move(m);
  return instance;
}

ProblemInstance maybe_with_distance_matrix(ProblemInstance instance) {
  if (instance.size() > kMaxDistanceMatrixNodes) return instance;
  return with_distance_matrix(std::move(instance));
}

namespace {

template <typename T>
T get_field(const ordered_json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("wrong type: ") + e.what(), path);
  }
}

}  // namespace

ProblemInstance parse_instance(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw Error("instance must be a JSON object", "$");
  for (const char* key : {"nodes", "demands", "budgets"})
    if (!doc.contains(key)) throw Error("missing required field", key);

  Metric metric = Metric::haversine;  // default for file-loaded geographic data
  if (doc.contains("metric")) metric = parse_metric(get_field<std::string>(doc["metric"], "metric"));

  const auto& jnodes = doc["nodes"];
  if (!jnodes.is_array()) throw Error("must be an array", "nodes");
  std::vector<Region> nodes;
  nodes.reserve(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const auto& jn = jnodes[i];
    if (!jn.is_object()) throw Error("must be an object", path);
    for (const char* key : {"id", "x", "y"})
      if (!jn.contains(key)) throw Error("missing required field", path + "." + key);
    nodes.push_back({get_field<NodeId>(jn["id"], path + ".id"), get_field<double>(jn["x"], path + ".x"),
                     get_field<double>(jn["y"], path + ".y")});
  }

  const auto& jdem = doc["demands"];
  const auto& jbud = doc["budgets"];
  if (!jdem.is_object()) throw Error("must be an object", "demands");
  if (!jbud.is_object()) throw Error("must be an object", "budgets");
  std::vector<FacilityType> types;
  for (const auto& [name, arr] : jdem.items()) {
    const std::string path = "demands." + name;
    if (!arr.is_array()) throw Error("must be an array", path);
    FacilityType t;
    t.name = name;
    t.demand.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
      t.demand.push_back(get_field<double>(arr[i], path + "[" + std::to_string(i) + "]"));
    if (!jbud.contains(name)) throw Error("missing budget for type", "budgets." + name);
    t.budget = get_field<int>(jbud[name], "budgets." + name);
    types.push_back(std::move(t));
  }
  for (const auto& [name, _] : jbud.items())
    if (!jdem.contains(name)) throw Error("budget given for type without demands", "budgets." + name);

  return ProblemInstance(std::move(nodes), metric, std::move(types));
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open instance file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

std::string instance_to_json(const ProblemInstance& instance) {
  ordered_json doc;
  doc["metric"] = std::string(to_string(instance.metric()));
  ordered_json nodes = ordered_json::array();
  for (const auto& r : instance.nodes()) nodes.push_back({{"id", r.id}, {"x", r.x}, {"y", r.y}});
  doc["nodes"] = std::move(nodes);
  ordered_json demands = ordered_json::object();
  ordered_json budgets = ordered_json::object();
  for (const auto& t : instance.types()) {
    demands[t.name] = t.demand;
    budgets[t.name] = t.budget;
  }
  doc["demands"] = std::move(demands);
  doc["budgets"] = std::move(budgets);
  return doc.dump();
}

void save_instance(const ProblemInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write instance file '" + path.string() + "'");
  out << instance_to_json(instance) << '\n';
}

ProblemInstance generate_synthetic(std::size_t n, const std::vector<std::pair<std::string, int>>& types,
                                   std::uint64_t seed, DemandModel demand_model) {
  long long total = 0;
  for (const auto& [_, p] : types) total += p;
  if (static_cast<long long>(n) < total)
    throw Error("n = " + std::to_string(n) + " is smaller than the total budget " + std::to_string(total), "n");
  if (types.empty()) throw Error("at least one facility type is required", "types");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Region> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = static_cast<NodeId>(i);
    nodes[i].x = unit(rng);
    nodes[i].y = unit(rng);
  }

  std::vector<FacilityType> ftypes;
  for (const auto& [name, budget] : types) {
    FacilityType t{name, std::vector<double>(n), budget};
    if (demand_model == DemandModel::uniform) {
      for (auto& h : t.demand) h = unit(rng);
    } else {
      std::lognormal_distribution<double> logn(0.0, 1.0);
      for (auto& h : t.demand) h = logn(rng);
    }
    double sum = 0.0;
    for (double h : t.demand) sum += h;
    if (sum > 0.0)
      for (auto& h : t.demand) h *= static_cast<double>(n) / sum;
    ftypes.push_back(std::move(t));
  }
  return ProblemInstance(std::move(nodes), Metric::euclidean, std::move(ftypes));
}

}  // namespace flp
