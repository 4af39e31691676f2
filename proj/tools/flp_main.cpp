#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flp/api_service.hpp"
#include "flp/baselines.hpp"
#include "flp/bench.hpp"
#include "flp/checkpoint.hpp"
#include "flp/serialize.hpp"
#include "flp/solve.hpp"

#include <CLI11.hpp>
#include <httplib.h>

namespace {

using flp::Error;

nlohmann::json read_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(std::string("cannot open ") + what + " '" + path + "'", what);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("parse failure: ") + e.what(), what);
  }
}

// "a=3" or "a=3,b=2"
std::vector<std::pair<std::string, int>> parse_types(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& arg : args) {
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw Error("expected NAME=P, got '" + item + "'", "types");
      int p = 0;
      try {
        std::size_t used = 0;
        p = std::stoi(item.substr(eq + 1), &used);
        if (used != item.size() - eq - 1) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error("budget is not an integer in '" + item + "'", "types");
      }
      out.emplace_back(item.substr(0, eq), p);
    }
  }
  if (out.empty()) throw Error("at least one type is required", "types");
  return out;
}

flp::TrainingFamily parse_family(const nlohmann::json& doc) {
  flp::TrainingFamily fam;
  try {
    for (const auto& m : doc.at("members")) {
      flp::FamilyMember member;
      member.n = m.at("n").get<std::size_t>();
      for (const auto& [name, p] : m.at("types").items()) member.types.emplace_back(name, p.get<int>());
      fam.members.push_back(std::move(member));
    }
    if (doc.contains("demand_model")) fam.demand_model = flp::parse_demand_model(doc["demand_model"].get<std::string>());
    fam.seed = doc.value("seed", fam.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed family: ") + e.what(), "family");
  }
  if (fam.members.empty()) throw Error("family has no members", "family.members");
  return fam;
}

flp::TrainConfig parse_train_config(const nlohmann::json& doc) {
  flp::TrainConfig c;
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.episodes_per_batch = doc.value("episodes_per_batch", c.episodes_per_batch);
    c.baseline_decay = doc.value("baseline_decay", c.baseline_decay);
    c.entropy_weight = doc.value("entropy_weight", c.entropy_weight);
    c.max_steps = doc.value("max_steps", c.max_steps);
    c.seed = doc.value("seed", c.seed);
    c.batches = doc.value("batches", c.batches);
    c.time_limit_s = doc.value("time_limit_s", c.time_limit_s);
    c.tabu_tenure = doc.value("tabu_tenure", c.tabu_tenure);
    c.layers = doc.value("layers", c.layers);
    c.hidden = doc.value("hidden", c.hidden);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed train config: ") + e.what(), "config");
  }
  c.validate();
  return c;
}

std::shared_ptr<const flp::Policy> maybe_policy(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const flp::Policy>(flp::load_checkpoint(path));
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facility location solver suite"};
  app.require_subcommand(1);
  bool no_timing = false;
  app.add_flag("--no-timing", no_timing, "Write wall-clock fields as 0 (byte-stable output)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance");
  std::size_t gen_n = 0;
  std::vector<std::string> gen_types;
  std::uint64_t gen_seed = 0;
  std::string gen_demand = "uniform", gen_out;
  gen->add_option("--n", gen_n, "Number of regions")->required();
  gen->add_option("--types", gen_types, "Facility types as NAME=P (repeatable or comma separated)")->required();
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--demand", gen_demand, "Demand model")->check(CLI::IsMember({"uniform", "lognormal"}));
  gen->add_option("--out", gen_out, "Output instance JSON")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve an instance");
  std::string solve_instance_path, solve_policy, solve_out;
  flp::SolveRequest request;
  solve->add_option("--instance", solve_instance_path, "Instance JSON")->required();
  solve->add_option("--method", request.method, "Method")
      ->check(CLI::IsMember({"drl", "greedy", "ls", "ts", "vns", "ga", "bf"}));
  solve->add_option("--steps", request.steps, "Swap budget K (default 3p per type)");
  solve->add_option("--policy", solve_policy, "Policy checkpoint (drl)");
  solve->add_option("--seed", request.seed, "Random seed");
  solve->add_option("--out", solve_out, "Output solution JSON")->required();

  // train
  auto* train = app.add_subcommand("train", "Train the edge-scoring policy");
  std::string train_family, train_config, train_out, train_log;
  train->add_option("--family", train_family, "Training family JSON")->required();
  train->add_option("--config", train_config, "Training config JSON");
  train->add_option("--out", train_out, "Output checkpoint")->required();
  train->add_option("--log", train_log, "Per-batch statistics as CSV");

  // export-lp
  auto* lp = app.add_subcommand("export-lp", "Write the MIP model in LP format");
  std::string lp_instance, lp_type, lp_out;
  lp->add_option("--instance", lp_instance, "Instance JSON")->required();
  lp->add_option("--type", lp_type, "Facility type (default: first)");
  lp->add_option("--out", lp_out, "Output .lp file")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Run the benchmark grid");
  std::string bench_grid, bench_out, bench_format = "csv", bench_policy;
  int bench_jobs = 1;
  bench->add_option("--grid", bench_grid, "Grid JSON");
  bench->add_option("--out", bench_out, "Report file")->required();
  bench->add_option("--format", bench_format, "csv | markdown | json")
      ->check(CLI::IsMember({"csv", "markdown", "md", "json"}));
  bench->add_option("--jobs", bench_jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--policy", bench_policy, "Policy checkpoint (overrides the grid's)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the planning REST API");
  int serve_port = 8080;
  std::string serve_instances, serve_policy, serve_host = "127.0.0.1";
  serve->add_option("--port", serve_port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--instances", serve_instances, "Directory of instance JSON files")->required();
  serve->add_option("--policy", serve_policy, "Policy checkpoint");

  CLI11_PARSE(app, argc, argv);
  const bool timing = !no_timing;

  try {
    if (*gen) {
      flp::save_instance(
          flp::generate_synthetic(gen_n, parse_types(gen_types), gen_seed, flp::parse_demand_model(gen_demand)),
          gen_out);
    } else if (*solve) {
      const auto instance = flp::maybe_with_distance_matrix(flp::load_instance(solve_instance_path));
      const auto sol = flp::solve_instance(instance, request, maybe_policy(solve_policy));
      auto doc = flp::mflp_to_json(instance, sol, timing);
      doc["method"] = request.method;
      flp::write_json_file(doc, solve_out);
    } else if (*train) {
      const auto family = parse_family(read_json(train_family, "family"));
      const auto config = train_config.empty() ? flp::TrainConfig{} : parse_train_config(read_json(train_config, "config"));
      std::ofstream log;
      if (!train_log.empty()) {
        log.open(train_log);
        if (!log) throw Error("cannot write '" + train_log + "'", "log");
        log << "batch,objective,mean_return,mean_entropy,baseline,grad_norm,skipped\n";
      }
      const auto report = flp::train_policy(family, config, [&](int b, const flp::TrainStats& s) {
        if (log.is_open())
          log << b << ',' << s.objective << ',' << s.mean_return << ',' << s.mean_entropy << ',' << s.baseline << ','
              << s.grad_norm << ',' << (s.skipped ? 1 : 0) << '\n';
      });
      flp::save_checkpoint(report.params, train_out);
      std::fprintf(stderr, "trained %d batches", report.batches_run);
      if (timing) std::fprintf(stderr, " in %.1f s", report.wall_time_s);
      std::fprintf(stderr, "\n");
    } else if (*lp) {
      const auto instance = flp::load_instance(lp_instance);
      const std::size_t k = lp_type.empty() ? 0 : instance.type_index(lp_type);
      flp::export_mip_lp(instance, k, instance.budget(k), lp_out);
    } else if (*bench) {
      flp::GridSpec grid = bench_grid.empty() ? flp::GridSpec{} : flp::load_grid_spec(bench_grid);
      if (!bench_policy.empty()) grid.policy = bench_policy;
      if (no_timing) grid.timing = false;
      const auto results = flp::run_grid(grid, maybe_policy(grid.policy), bench_jobs);
      flp::report(results, flp::parse_report_format(bench_format), bench_out);
    } else if (*serve) {
      flp::PlannerService service(flp::load_catalog(serve_instances), maybe_policy(serve_policy), timing);
      httplib::Server server;
      flp::register_routes(server, service);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "listening on %s:%d\n", serve_host.c_str(), serve_port);
      if (!server.listen(serve_host, serve_port)) throw Error("cannot bind " + serve_host + ":" + std::to_string(serve_port), "port");
    }
  } catch (const Error& e) {
    if (e.field().empty()) std::fprintf(stderr, "error: %s\n", e.what());
    else std::fprintf(stderr, "error: %s (field: %s)\n", e.what(), e.field().c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
