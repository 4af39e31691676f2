#include <doctest.h>

#include <random>

#include "flp/cost_engine.hpp"
#include "support.hpp"

using namespace flp;
using test::close_rel;

namespace {

// Closest and second-closest by brute sort over (distance, id).
void check_against_rebuild(const ProblemInstance& inst, const AssignmentState& s) {
  const AssignmentState fresh = build_assignment(inst, s.type, s.facilities);
  CHECK(s.facilities == fresh.facilities);
  CHECK(s.phi1 == fresh.phi1);
  CHECK(s.phi2 == fresh.phi2);
  for (std::size_t u = 0; u < inst.size(); ++u) {
    CHECK(s.d1[u] == doctest::Approx(fresh.d1[u]).epsilon(1e-12));
    if (std::isfinite(fresh.d2[u])) CHECK(s.d2[u] == doctest::Approx(fresh.d2[u]).epsilon(1e-12));
  }
  CHECK(close_rel(s.ac, test::oracle_ac(inst, s.type, s.facilities)));
}

}  // namespace

TEST_CASE("line instance access costs") {
  const auto inst = test::line_instance();
  CHECK(build_assignment(inst, 0, std::vector<NodeId>{2}).ac == 8.0);
  double best = 1e300;
  for (NodeId f = 0; f < 4; ++f) best = std::min(best, test::oracle_ac(inst, 0, {f}));
  CHECK(best == 8.0);

  const auto s = build_assignment(inst, 0, std::vector<NodeId>{0, 2});
  CHECK(s.phi1 == std::vector<NodeId>{0, 0, 2, 2});  // node 1 ties between 0 and 2
  CHECK(s.ac == 6.0);
  CHECK(s.phi2 == std::vector<NodeId>{2, 2, 0, 0});

  CHECK(build_assignment(inst, 0, std::vector<NodeId>{0, 1, 2, 3}).ac == 0.0);
  CHECK(recompute_access_cost(inst, 0, std::vector<NodeId>{2, 3}) == 4.0);
}

TEST_CASE("build_assignment rejects bad sets") {
  const auto inst = test::line_instance();
  CHECK_THROWS_AS(build_assignment(inst, 0, std::vector<NodeId>{}), Error);
  CHECK_THROWS_AS(build_assignment(inst, 0, std::vector<NodeId>{1, 1}), Error);
  CHECK_THROWS_AS(build_assignment(inst, 0, std::vector<NodeId>{4}), Error);
  CHECK_THROWS_AS(build_assignment(inst, 0, std::vector<NodeId>{-1}), Error);
}

TEST_CASE("access_cost_total sums types") {
  const auto one = test::line_instance(1);
  const std::vector<AssignmentState> single{build_assignment(one, 0, std::vector<NodeId>{2})};
  CHECK(access_cost_total(one, single) == 8.0);

  const auto two = test::line_two_types(2, 2);
  std::vector<AssignmentState> states{build_assignment(two, 0, std::vector<NodeId>{0, 2}),
                                      build_assignment(two, 1, std::vector<NodeId>{2, 3})};
  CHECK(access_cost_total(two, states) == 10.0);
  std::vector<AssignmentState> missing{states[0]};
  CHECK_THROWS_AS(access_cost_total(two, missing), Error);
  std::vector<AssignmentState> repeated{states[0], states[0]};
  CHECK_THROWS_AS(access_cost_total(two, repeated), Error);

  ProblemInstance zero({{0, 0, 0}, {1, 5, 1}, {2, 9, 3}}, Metric::euclidean, {{"a", {0, 0, 0}, 1}});
  for (NodeId f = 0; f < 3; ++f) CHECK(build_assignment(zero, 0, std::vector<NodeId>{f}).ac == 0.0);
}

TEST_CASE("swap components on the line instance") {
  const auto inst = test::line_instance();
  const auto s02 = build_assignment(inst, 0, std::vector<NodeId>{0, 2});
  const auto c = swap_components(inst, s02, 3, 0);
  CHECK(c.gain == 4.0);
  CHECK(c.loss == 2.0);
  CHECK(c.extra == 0.0);
  CHECK(c.delta == -2.0);
  CHECK(c.delta == test::oracle_ac(inst, 0, {2, 3}) - test::oracle_ac(inst, 0, {0, 2}));

  const auto s13 = build_assignment(inst, 0, std::vector<NodeId>{1, 3});
  const auto c2 = swap_components(inst, s13, 0, 3);
  CHECK(c2.gain == 1.0);
  CHECK(c2.loss == 8.0);
  CHECK(c2.extra == 0.0);
  CHECK(c2.delta == 7.0);
  CHECK(c2.delta == test::oracle_ac(inst, 0, {0, 1}) - test::oracle_ac(inst, 0, {1, 3}));

  CHECK_THROWS_AS(swap_components(inst, s02, 2, 0), Error);  // insert occupied
  CHECK_THROWS_AS(swap_components(inst, s02, 3, 1), Error);  // remove vacant
  const auto single = build_assignment(test::line_instance(1), 0, std::vector<NodeId>{2});
  CHECK_THROWS_AS(swap_components(test::line_instance(1), single, 0, 2), Error);
  CHECK(swap_delta(test::line_instance(1), single, 0, 2) == 20.0 - 8.0);
}

TEST_CASE("decomposition equals recomputation on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 10 + rng() % 50;
    const int p = 2 + static_cast<int>(rng() % 6);
    const auto inst = generate_synthetic(n, {{"a", p}}, rng(), trial % 2 ? DemandModel::lognormal : DemandModel::uniform);
    const auto fac = test::random_set(n, p, rng);
    const auto s = build_assignment(inst, 0, fac);
    const auto table = swap_delta_table(inst, s);
    for (int r = 0; r < p; ++r)
      for (NodeId i = 0; i < static_cast<NodeId>(n); ++i) {
        if (s.is_open(i)) {
          CHECK(std::isinf(table(r, i)));
          continue;
        }
        auto next = fac;
        next[static_cast<std::size_t>(r)] = i;
        const double truth = test::oracle_ac(inst, 0, next) - test::oracle_ac(inst, 0, fac);
        const auto c = swap_components(inst, s, i, fac[static_cast<std::size_t>(r)]);
        CHECK(c.gain >= 0.0);
        CHECK(c.loss >= 0.0);
        CHECK(c.extra >= 0.0);
        CHECK(close_rel(c.delta, truth, 1e-9));
        CHECK(table(r, i) == c.delta);
      }
  }
}

TEST_CASE("gain, loss and far-apart vectors") {
  const auto inst = generate_synthetic(40, {{"a", 5}}, 9);
  std::mt19937_64 rng(5);
  const auto s = build_assignment(inst, 0, test::random_set(40, 5, rng));
  const auto g = gain_vector(inst, s);
  const auto l = loss_vector(inst, s);
  const auto R = far_apart_radius(inst, s);
  for (NodeId i = 0; i < 40; ++i) {
    if (s.is_open(i)) {
      CHECK(g(i) == 0.0);
      for (NodeId j = 0; j < 40; ++j) {
        if (s.is_open(j)) continue;
        const auto c = swap_components(inst, s, j, i);
        CHECK(c.gain == doctest::Approx(g(j)).epsilon(1e-12));
        CHECK(c.loss == doctest::Approx(l(i)).epsilon(1e-12));
        if (inst.dist(i, j) >= R(i)) CHECK(c.extra == 0.0);
      }
    } else {
      CHECK(l(i) == 0.0);
    }
  }
}

TEST_CASE("apply_swap matches rebuild") {
  const auto inst = test::line_instance();
  auto s = build_assignment(inst, 0, std::vector<NodeId>{0, 2});
  apply_swap(inst, s, 3, 0);
  CHECK(s.facilities == std::vector<NodeId>{2, 3});
  CHECK(s.ac == 4.0);
  check_against_rebuild(inst, s);

  const auto orig = build_assignment(inst, 0, std::vector<NodeId>{0, 2});
  auto t = orig;
  apply_swap(inst, t, 1, 2);
  apply_swap(inst, t, 2, 1);
  CHECK(t.facilities == orig.facilities);
  CHECK(t.phi1 == orig.phi1);
  CHECK(t.phi2 == orig.phi2);
  CHECK(t.ac == orig.ac);

  CHECK_THROWS_AS(apply_swap(inst, s, 2, 0), Error);
}

TEST_CASE("random walks keep the cache exact") {
  const auto inst = maybe_with_distance_matrix(generate_synthetic(200, {{"a", 20}}, 77));
  std::mt19937_64 rng(3);
  auto s = build_assignment(inst, 0, test::random_set(200, 20, rng));
  for (int k = 0; k < 100; ++k) {
    NodeId ins;
    do ins = static_cast<NodeId>(rng() % 200);
    while (s.is_open(ins));
    const NodeId rem = s.facilities[rng() % s.size()];
    apply_swap(inst, s, ins, rem);
    check_against_rebuild(inst, s);
  }
}

TEST_CASE("ties on a grid go to the lower id") {
  // Node 4 is equidistant from all four corners.
  ProblemInstance sq({{0, 0, 0}, {1, 2, 0}, {2, 0, 2}, {3, 2, 2}, {4, 1, 1}}, Metric::euclidean,
                     {{"a", {1, 1, 1, 1, 5}, 4}});
  auto s = build_assignment(sq, 0, std::vector<NodeId>{0, 1, 2, 3});
  CHECK(s.phi1[4] == 0);
  CHECK(s.phi2[4] == 1);
  apply_swap(sq, s, 4, 0);
  check_against_rebuild(sq, s);
  apply_swap(sq, s, 0, 3);
  check_against_rebuild(sq, s);
}
