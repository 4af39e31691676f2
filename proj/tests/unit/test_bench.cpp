#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flp/baselines.hpp"
#include "flp/bench.hpp"
#include "flp/swap_search.hpp"
#include "support.hpp"

using namespace flp;

namespace {

GridSpec small_spec() {
  GridSpec s;
  s.cells = {{12, 2}, {14, 3}};
  s.instances_per_cell = 4;
  s.solvers = {"greedy", "ls", "bf"};
  s.timing = false;
  return s;
}

const CellRow& row(const GridResults& r, const std::string& method, std::size_t n) {
  for (const auto& x : r.rows)
    if (x.method == method && x.cell.n == n) return x;
  FAIL("missing row " << method);
  return r.rows.front();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("reference solver has zero gap") {
  const auto r = run_grid(small_spec());
  REQUIRE(r.rows.size() == 6);
  for (std::size_t n : {12u, 14u}) {
    const auto& bf = row(r, "bf", n);
    CHECK(bf.gap_pct == 0.0);
    CHECK(bf.reference == "exact");
    CHECK(bf.speedup == 1.0);
    CHECK(bf.instances == 4);
    CHECK(row(r, "ls", n).gap_pct >= 0.0);
    CHECK(row(r, "greedy", n).gap_pct >= 0.0);
  }
}

TEST_CASE("local search gap matches an independent recomputation") {
  GridSpec s;
  s.cells = {{20, 3}};
  s.instances_per_cell = 50;
  s.solvers = {"ls"};
  s.timing = false;
  const auto r = run_grid(s);
  REQUIRE(r.rows.size() == 1);
  double gap = 0.0, mean = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto inst = generate_synthetic(20, {{"a", 3}}, s.seed_base + static_cast<std::uint64_t>(i));
    const auto ls = local_search(inst, 0, 3, greedy_init(inst, 0, 3));
    const double opt = test::oracle_optimum(inst, 0, 3).first;
    gap += (ls.access_cost - opt) / opt * 100.0 / 50.0;
    mean += ls.access_cost / 50.0;
  }
  CHECK(std::isfinite(r.rows[0].gap_pct));
  CHECK(r.rows[0].gap_pct >= 0.0);
  CHECK(r.rows[0].gap_pct == doctest::Approx(gap).epsilon(1e-9));
  CHECK(r.rows[0].mean_ac == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.rows[0].reference == "exact");
  CHECK(r.rows[0].evals_per_step == 3.0 * 17.0);
}

TEST_CASE("results do not depend on reruns or the job count") {
  auto s = small_spec();
  s.solvers = {"greedy", "ls", "ts", "vns", "ga"};
  const auto a = format_report(run_grid(s, nullptr, 1), ReportFormat::csv);
  const auto b = format_report(run_grid(s, nullptr, 1), ReportFormat::csv);
  const auto c = format_report(run_grid(s, nullptr, 3), ReportFormat::csv);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("reference falls back when no exact optimum is available") {
  auto s = small_spec();
  s.solvers = {"greedy", "ls"};
  s.exact_limit = 1.0;
  auto r = run_grid(s);
  for (const auto& x : r.rows) CHECK(x.reference == "best_of_all");
  // The reference is the per-instance minimum, so no method can have a negative gap.
  for (const auto& x : r.rows) CHECK(x.gap_pct >= 0.0);

  s.cells = {{12, 2}};
  s.instances_per_cell = 2;
  for (int i = 0; i < 2; ++i) {
    const auto inst = generate_synthetic(12, {{"a", 2}}, s.seed_base + static_cast<std::uint64_t>(i));
    s.references.push_back({12, 2, i, test::oracle_optimum(inst, 0, 2).first});
  }
  r = run_grid(s);
  CHECK(row(r, "ls", 12).reference == "provided");
  s.exact_limit = 2e5;
  const auto exact = run_grid(s);
  CHECK(row(r, "ls", 12).gap_pct == doctest::Approx(row(exact, "ls", 12).gap_pct).epsilon(1e-12));
}

TEST_CASE("greedy episodes report their per-step edge counts") {
  GridSpec s;
  s.cells = {{30, 4}};
  s.instances_per_cell = 3;
  s.solvers = {"greedy"};
  s.steps_per_facility = 2.0;
  const auto r = run_grid(s);
  const auto& g = r.rows.at(0);
  CHECK(g.edges_per_step == 4.0 * 26.0);
  CHECK(g.evals_per_step <= g.edges_per_step);
  CHECK(g.monotone);
}

TEST_CASE("report formats") {
  const auto r = run_grid(small_spec());
  const auto csv = format_report(r, ReportFormat::csv);
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  const auto cols = split(header, ',');
  REQUIRE(cols.size() == 12);
  CHECK(cols[0] == "method");
  CHECK(cols[2] == "mean_ac");
  CHECK(cols[3] == "gap_pct");
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto fields = split(line, ',');
    REQUIRE(fields.size() == cols.size());
    const auto& x = r.rows[lines];
    CHECK(fields[0] == x.method);
    CHECK(fields[1] == std::to_string(x.cell.n) + "x" + std::to_string(x.cell.p));
    CHECK(std::stod(fields[2]) == x.mean_ac);  // %.17g round-trips
    CHECK(std::stod(fields[3]) == x.gap_pct);
    ++lines;
  }
  CHECK(lines == r.rows.size());

  CHECK(format_report(GridResults{}, ReportFormat::csv) == header + "\n");
  const auto md = format_report(r, ReportFormat::markdown);
  CHECK(md.find("| method") == 0);
  const auto js = nlohmann::json::parse(format_report(r, ReportFormat::json));
  REQUIRE(js.size() == r.rows.size());
  CHECK(js[0]["method"] == r.rows[0].method);
  CHECK(js[0]["mean_ac"].get<double>() == r.rows[0].mean_ac);

  CHECK(parse_report_format("md") == ReportFormat::markdown);
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK_THROWS_AS(parse_report_format("xlsx"), Error);

  const auto path = std::filesystem::temp_directory_path() / "flp_bench_report.csv";
  report(r, ReportFormat::csv, path);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == csv);
  std::filesystem::remove(path);
}

TEST_CASE("grid file parsing and validation") {
  const auto s = parse_grid_spec(nlohmann::json::parse(R"({
    "cells": [[20, 3], {"n": 30, "p": 4}],
    "instances_per_cell": 5,
    "seed_base": 9,
    "solvers": ["ls", "bf"],
    "demand_model": "lognormal",
    "references": [{"n": 20, "p": 3, "instance": 0, "ac": 12.5}]
  })"));
  REQUIRE(s.cells.size() == 2);
  CHECK(s.cells[1].n == 30);
  CHECK(s.cells[1].p == 4);
  CHECK(s.instances_per_cell == 5);
  CHECK(s.seed_base == 9);
  CHECK(s.demand_model == DemandModel::lognormal);
  REQUIRE(s.references.size() == 1);
  CHECK(s.references[0].access_cost == 12.5);

  GridSpec bad;
  bad.solvers = {"cplex"};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = GridSpec{};
  bad.instances_per_cell = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = GridSpec{};
  bad.cells = {{5, 6}};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = GridSpec{};
  bad.solvers = {"bf"};  // C(1000,100) cannot be enumerated
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(parse_grid_spec(nlohmann::json::parse(R"({"cells": [[10]]})")), Error);

  auto drl = small_spec();
  drl.solvers = {"drl"};
  CHECK_THROWS_AS(run_grid(drl), Error);
  CHECK(is_known_solver("vns"));
  CHECK_FALSE(is_known_solver("cplex"));
}
