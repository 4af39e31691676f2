#include "flp/serialize.hpp"

#include <fstream>

namespace flp {

namespace {

ordered_json steps_json(const Trajectory& traj, const std::string* type_name) {
  ordered_json steps = ordered_json::array();
  for (const auto& s : traj.steps) {
    ordered_json j;
    if (type_name) j["type"] = *type_name;
    j["insert"] = s.edge.insert;
    j["remove"] = s.edge.remove;
    j["delta"] = s.delta;
    j["candidates"] = s.candidates;
    j["edges"] = s.total_edges;
    steps.push_back(std::move(j));
  }
  return steps;
}

}  // namespace

ordered_json trajectory_to_json(const ProblemInstance& instance, const Trajectory& traj, bool timing) {
  ordered_json doc;
  doc["type_placements"] = ordered_json::object();
  doc["type_placements"][instance.type(traj.type).name] = traj.best_facilities;
  doc["access_cost"] = traj.best_ac;
  doc["steps"] = steps_json(traj, nullptr);
  doc["wall_time_ms"] = timing ? traj.wall_time_ms : 0.0;
  doc["initial_access_cost"] = traj.initial_ac;
  doc["local_optimum"] = traj.local_optimum;
  return doc;
}

ordered_json report_to_json(const ProblemInstance& instance, std::size_t type, const SolverReport& report,
                            bool timing) {
  ordered_json doc;
  doc["type_placements"] = ordered_json::object();
  doc["type_placements"][instance.type(type).name] = report.facilities;
  doc["access_cost"] = report.access_cost;
  doc["steps"] = ordered_json::array();
  doc["wall_time_ms"] = timing ? report.wall_time_ms : 0.0;
  doc["method"] = report.method;
  doc["iterations"] = report.iterations;
  doc["evaluations"] = report.evaluations;
  return doc;
}

ordered_json mflp_to_json(const ProblemInstance& instance, const MflpSolution& sol, bool timing) {
  ordered_json doc;
  ordered_json placements = ordered_json::object();
  ordered_json per_type = ordered_json::object();
  for (std::size_t k = 0; k < sol.placements.size(); ++k) {
    placements[instance.type(k).name] = sol.placements[k];
    per_type[instance.type(k).name] = k < sol.type_ac.size() ? sol.type_ac[k] : 0.0;
  }
  doc["type_placements"] = std::move(placements);
  doc["access_cost"] = sol.total_ac;
  ordered_json steps = ordered_json::array();
  ordered_json stage_one_types = ordered_json::object();
  for (const auto& t : sol.stage_one) {
    const std::string& name = instance.type(t.type).name;
    for (auto& s : steps_json(t, &name)) steps.push_back(std::move(s));
    ordered_json jt;
    jt["initial_access_cost"] = t.initial_ac;
    jt["best_access_cost"] = t.best_ac;
    jt["placement"] = t.best_facilities;
    jt["best_ac_trace"] = t.best_ac_trace;
    jt["local_optimum"] = t.local_optimum;
    stage_one_types[name] = std::move(jt);
  }
  doc["steps"] = std::move(steps);
  doc["wall_time_ms"] = timing ? sol.stage_one_ms + sol.stage_two_ms : 0.0;
  doc["per_type_access_cost"] = std::move(per_type);

  ordered_json relocations = ordered_json::array();
  for (const auto& r : sol.stage_two)
    relocations.push_back({{"node", r.node},
                           {"kept", instance.type(r.kept).name},
                           {"moved", instance.type(r.moved).name},
                           {"insert", r.insert},
                           {"delta", r.delta}});
  doc["stages"] = {
      {"stage_one", {{"wall_time_ms", timing ? sol.stage_one_ms : 0.0}, {"types", std::move(stage_one_types)}}},
      {"stage_two", {{"wall_time_ms", timing ? sol.stage_two_ms : 0.0}, {"relocations", std::move(relocations)}}},
  };
  return doc;
}

void write_json_file(const ordered_json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("I/O failure writing '" + path.string() + "'");
}

}  // namespace flp
