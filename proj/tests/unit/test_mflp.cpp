#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>

#include "flp/mflp.hpp"
#include "flp/solve.hpp"
#include "support.hpp"

using namespace flp;

namespace {

bool disjoint(const Placements& pl) {
  std::set<NodeId> seen;
  for (const auto& v : pl)
    for (NodeId f : v)
      if (!seen.insert(f).second) return false;
  return true;
}

// Exhaustive joint optimum over ordered disjoint placements of two types.
double oracle_joint(const ProblemInstance& inst) {
  const int n = static_cast<int>(inst.size());
  const int pa = inst.budget(0), pb = inst.budget(1);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t ma = 0; ma < (1u << n); ++ma) {
    if (std::popcount(ma) != pa) continue;
    std::vector<NodeId> a;
    for (int i = 0; i < n; ++i)
      if (ma >> i & 1) a.push_back(i);
    const double ca = test::oracle_ac(inst, 0, a);
    for (std::uint32_t mb = 0; mb < (1u << n); ++mb) {
      if ((mb & ma) || std::popcount(mb) != pb) continue;
      std::vector<NodeId> b;
      for (int i = 0; i < n; ++i)
        if (mb >> i & 1) b.push_back(i);
      best = std::min(best, ca + test::oracle_ac(inst, 1, b));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("conflict detection") {
  CHECK(detect_conflicts({{0, 1}, {2, 3}}).empty());
  const auto c = detect_conflicts({{1, 2}, {2, 3}});
  REQUIRE(c.size() == 1);
  CHECK(c[0].node == 2);
  CHECK(c[0].types == std::vector<std::size_t>{0, 1});
  const auto three = detect_conflicts({{5}, {5, 1}, {0, 5}});
  REQUIRE(three.size() == 1);
  CHECK(three[0].types.size() == 3);
}

TEST_CASE("single type degenerates to plain FLP") {
  const auto inst = generate_synthetic(40, {{"a", 5}}, 3);
  BestDeltaSelector greedy;
  const EpisodeConfig cfg{10, 7, true, 0};
  const auto sol = solve_mflp(inst, greedy, cfg);
  const auto traj = run_episode(inst, 0, 5, greedy, cfg);
  CHECK(sol.placements[0] == traj.best_facilities);
  CHECK(sol.total_ac == traj.best_ac);
  CHECK(sol.stage_two.empty());
}

TEST_CASE("disjoint demand hotspots need no resolution") {
  std::vector<Region> nodes;
  std::vector<double> ha, hb;
  for (int i = 0; i < 20; ++i) {
    nodes.push_back({i, static_cast<double>(i % 10), static_cast<double>(i / 10) * 0.1});
    ha.push_back(i % 10 < 5 ? 1.0 : 0.0);
    hb.push_back(i % 10 < 5 ? 0.0 : 1.0);
  }
  const ProblemInstance inst(nodes, Metric::euclidean, {{"a", ha, 2}, {"b", hb, 2}});
  BestDeltaSelector greedy;
  const auto first = stage_one(inst, greedy, {6, 7, true, 0});
  Placements pl{first[0].best_facilities, first[1].best_facilities};
  CHECK(detect_conflicts(pl).empty());
  const auto sol = solve_mflp(inst, greedy, {6, 7, true, 0});
  CHECK(sol.stage_two.empty());
  CHECK(sol.total_ac == doctest::Approx(first[0].best_ac + first[1].best_ac).epsilon(1e-12));
}

TEST_CASE("identical demand vectors coincide after stage one") {
  const auto base = generate_synthetic(30, {{"a", 3}}, 9);
  const ProblemInstance inst(base.nodes(), Metric::euclidean, {{"a", base.demand(0), 3}, {"b", base.demand(0), 3}});
  BestDeltaSelector greedy;
  const auto first = stage_one(inst, greedy, {6, 7, true, 0});
  CHECK(first[0].best_facilities == first[1].best_facilities);
  CHECK(detect_conflicts({first[0].best_facilities, first[1].best_facilities}).size() == 3);
  const auto sol = solve_mflp(inst, greedy, {6, 7, true, 0});
  CHECK(disjoint(sol.placements));
  CHECK(sol.stage_two.size() == 3);
}

TEST_CASE("line instance with two identical single-facility types") {
  const auto inst = test::line_two_types();
  // Single-facility ACs at nodes 0..3.
  CHECK(test::oracle_ac(inst, 0, {0}) == 20.0);
  CHECK(test::oracle_ac(inst, 0, {1}) == 12.0);
  CHECK(test::oracle_ac(inst, 0, {2}) == 8.0);
  CHECK(test::oracle_ac(inst, 0, {3}) == 10.0);

  BestDeltaSelector greedy;
  const auto first = stage_one(inst, greedy, {0, 7, true, 0});
  CHECK(first[0].best_facilities == std::vector<NodeId>{2});
  CHECK(first[1].best_facilities == std::vector<NodeId>{2});

  const auto sol = stage_two_resolve(inst, {{2}, {2}});
  CHECK(sol.placements[0] == std::vector<NodeId>{2});
  CHECK(sol.placements[1] == std::vector<NodeId>{3});
  CHECK(sol.type_ac[1] == 10.0);
  CHECK(sol.total_ac == 18.0);
  REQUIRE(sol.stage_two.size() == 1);
  CHECK(sol.stage_two[0].kept == 0);
  CHECK(sol.stage_two[0].moved == 1);
  CHECK(sol.stage_two[0].delta == 2.0);

  const auto bf = mflp_brute_force(inst);
  CHECK(bf.total_ac == 18.0);
  CHECK(bf.placements[0] == std::vector<NodeId>{2});
  CHECK(bf.placements[1] == std::vector<NodeId>{3});
}

TEST_CASE("keep rule prefers the larger removal loss and pinned types") {
  const auto inst = test::line_two_types(2, 2);
  // a = {1,2}, b = {2,3}: loss_a(2) = 3+4... computed by the oracle below.
  const Placements pl{{1, 2}, {2, 3}};
  auto loss_of = [&](std::size_t k, const std::vector<NodeId>& fac, NodeId node) {
    std::vector<NodeId> rest;
    for (NodeId f : fac)
      if (f != node) rest.push_back(f);
    return test::oracle_ac(inst, k, rest) - test::oracle_ac(inst, k, fac);
  };
  const std::size_t expect_keep = loss_of(0, pl[0], 2) >= loss_of(1, pl[1], 2) ? 0 : 1;
  const auto sol = stage_two_resolve(inst, pl);
  REQUIRE(sol.stage_two.size() == 1);
  CHECK(sol.stage_two[0].kept == expect_keep);
  CHECK(disjoint(sol.placements));

  MflpOptions pinned;
  pinned.pinned = {{}, {2}};
  const auto ps = stage_two_resolve(inst, pl, pinned);
  CHECK(ps.stage_two[0].kept == 1);
  CHECK(std::count(ps.placements[1].begin(), ps.placements[1].end(), 2) == 1);

  MflpOptions both;
  both.pinned = {{2}, {2}};
  CHECK_THROWS_AS(stage_two_resolve(inst, pl, both), Error);
  CHECK_THROWS_AS(stage_two_resolve(inst, {{1, 2}}), Error);
  CHECK_THROWS_AS(stage_two_resolve(inst, {{1}, {2, 3}}), Error);
}

TEST_CASE("solutions are feasible and never beat the joint optimum") {
  std::mt19937_64 rng(14);
  BestDeltaSelector greedy;
  for (int t = 0; t < 20; ++t) {
    const auto inst = generate_synthetic(10, {{"a", 2}, {"b", 2}}, rng());
    const auto sol = solve_mflp(inst, greedy, {6, 7, true, 0});
    CHECK(disjoint(sol.placements));
    CHECK(sol.placements[0].size() == 2);
    CHECK(sol.placements[1].size() == 2);
    CHECK(test::close_rel(sol.total_ac, placements_access_cost(inst, sol.placements)));
    CHECK(test::close_rel(sol.total_ac, test::oracle_ac(inst, 0, sol.placements[0]) +
                                            test::oracle_ac(inst, 1, sol.placements[1])));
    const auto bf = mflp_brute_force(inst);
    CHECK(test::close_rel(bf.total_ac, oracle_joint(inst)));
    CHECK(sol.total_ac >= bf.total_ac - 1e-9);
  }
}

TEST_CASE("multinomial count and enumeration guard") {
  CHECK(multinomial_count(test::line_two_types()) == 12.0);
  CHECK(multinomial_count(generate_synthetic(12, {{"a", 2}, {"b", 2}}, 1)) == 66.0 * 45.0);
  CHECK_THROWS_AS(mflp_brute_force(generate_synthetic(60, {{"a", 5}, {"b", 5}}, 1)), Error);
}

TEST_CASE("solve_instance front door") {
  const auto inst = generate_synthetic(25, {{"a", 3}, {"b", 2}}, 6);
  for (const char* m : {"greedy", "ls", "ts", "vns", "ga"}) {
    SolveRequest r;
    r.method = m;
    const auto sol = solve_instance(inst, r);
    CHECK(disjoint(sol.placements));
    CHECK(test::close_rel(sol.total_ac, placements_access_cost(inst, sol.placements)));
  }
  SolveRequest k0;
  k0.method = "greedy";
  k0.steps = 0;
  const auto g = solve_instance(generate_synthetic(25, {{"a", 3}}, 6), k0);
  CHECK(g.placements[0] == greedy_init(generate_synthetic(25, {{"a", 3}}, 6), 0, 3));

  SolveRequest pins;
  pins.method = "greedy";
  pins.options.pinned = {{0, 1, 2}, {}};
  const auto p = solve_instance(inst, pins);
  CHECK(p.placements[0] == std::vector<NodeId>{0, 1, 2});

  SolveRequest bad = pins;
  bad.options.pinned = {{4}, {4}};
  CHECK_THROWS_AS(solve_instance(inst, bad), Error);
  bad.options.pinned = {{1, 2, 3, 4}, {}};
  CHECK_THROWS_AS(solve_instance(inst, bad), Error);
  bad.method = "ls";
  bad.options.pinned = {{1}, {}};
  CHECK_THROWS_AS(solve_instance(inst, bad), Error);
  SolveRequest drl;
  drl.method = "drl";
  CHECK_THROWS_AS(solve_instance(inst, drl), Error);
  SolveRequest unknown;
  unknown.method = "cplex";
  CHECK_THROWS_AS(solve_instance(inst, unknown), Error);

  SolveRequest bf;
  bf.method = "bf";
  const auto small = generate_synthetic(8, {{"a", 2}, {"b", 1}}, 2);
  CHECK(solve_instance(small, bf).total_ac == mflp_brute_force(small).total_ac);
}
