#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>

#include "flp/instance.hpp"
#include "support.hpp"

using namespace flp;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.field();
  }
  return "<no error>";
}

const char* kLine = R"({"metric":"euclidean",
  "nodes":[{"id":0,"x":0,"y":0},{"id":1,"x":1,"y":0},{"id":2,"x":2,"y":0},{"id":3,"x":3,"y":0}],
  "demands":{"a":[1,2,3,4]}, "budgets":{"a":1}})";

}  // namespace

TEST_CASE("minimal valid file loads") {
  const ProblemInstance inst = parse_instance(kLine);
  CHECK(inst.size() == 4);
  CHECK(inst.num_types() == 1);
  CHECK(inst.budget(0) == 1);
  CHECK(inst.metric() == Metric::euclidean);
  CHECK(inst.demand(0)[3] == 4.0);
}

TEST_CASE("demand length mismatch is rejected with its field") {
  const std::string bad = R"({"metric":"euclidean",
    "nodes":[{"id":0,"x":0,"y":0},{"id":1,"x":1,"y":0},{"id":2,"x":2,"y":0},{"id":3,"x":3,"y":0}],
    "demands":{"a":[1,2,3]}, "budgets":{"a":1}})";
  CHECK(field_of([&] { parse_instance(bad); }) == "demands.a");
}

TEST_CASE("budgets above n are infeasible") {
  const std::string bad = R"({"metric":"euclidean",
    "nodes":[{"id":0,"x":0,"y":0},{"id":1,"x":1,"y":0},{"id":2,"x":2,"y":0},{"id":3,"x":3,"y":0}],
    "demands":{"a":[1,2,3,4],"b":[1,1,1,1]}, "budgets":{"a":3,"b":2}})";
  CHECK(field_of([&] { parse_instance(bad); }) == "budgets");
}

TEST_CASE("other invariants") {
  std::vector<Region> nodes{{0, 0, 0}, {1, 1, 0}};
  CHECK(field_of([&] { ProblemInstance(nodes, Metric::euclidean, {{"a", {1, -1}, 1}}); }) == "demands.a[1]");
  CHECK(field_of([&] { ProblemInstance(nodes, Metric::euclidean, {{"a", {1, 1}, 0}}); }) == "budgets.a");
  CHECK(field_of([&] { ProblemInstance({{0, 0, 0}, {2, 1, 0}}, Metric::euclidean, {{"a", {1, 1}, 1}}); }) ==
        "nodes[1].id");
  CHECK(field_of([&] { ProblemInstance(nodes, Metric::euclidean, {{"a", {1, 1}, 1}, {"a", {1, 1}, 1}}); }) ==
        "demands.a");
  CHECK(field_of([&] { parse_instance("{\"nodes\": 3}"); }) != "<no error>");
  CHECK(field_of([&] { parse_instance("not json"); }) == "");
  CHECK_THROWS_AS(parse_metric("manhattan"), Error);
}

TEST_CASE("missing node coordinate names its path") {
  const std::string bad = R"({"nodes":[{"id":0,"x":0}], "demands":{"a":[1]}, "budgets":{"a":1}})";
  CHECK(field_of([&] { parse_instance(bad); }) == "nodes[0].y");
}

TEST_CASE("metric defaults to haversine for files") {
  const std::string geo = R"({"nodes":[{"id":0,"x":0,"y":0},{"id":1,"x":90,"y":0}],
    "demands":{"a":[1,1]}, "budgets":{"a":1}})";
  CHECK(parse_instance(geo).metric() == Metric::haversine);
}

TEST_CASE("distances") {
  ProblemInstance e({{0, 0, 0}, {1, 3, 4}}, Metric::euclidean, {{"a", {1, 1}, 1}});
  CHECK(e.distance(0, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(e.distance(1, 0) == e.distance(0, 1));
  CHECK(e.distance(1, 1) == 0.0);
  CHECK_THROWS_AS(e.distance(0, 2), Error);

  // Quarter great circle along the equator.
  ProblemInstance h({{0, 0, 0}, {1, 90, 0}}, Metric::haversine, {{"a", {1, 1}, 1}});
  const double quarter = 6371.0 * std::numbers::pi / 2.0;
  CHECK(std::abs(h.distance(0, 1) - quarter) < 1e-9 * quarter);
  CHECK(h.distance(0, 1) == doctest::Approx(10007.54).epsilon(1e-6));
  // Pole to equator is also a quarter circle.
  ProblemInstance pole({{0, 17, 90}, {1, -40, 0}}, Metric::haversine, {{"a", {1, 1}, 1}});
  CHECK(std::abs(pole.distance(0, 1) - quarter) < 1e-6);
}

TEST_CASE("distance matrix agrees with direct evaluation") {
  const ProblemInstance raw = generate_synthetic(40, {{"a", 4}}, 3);
  const ProblemInstance m = with_distance_matrix(raw);
  CHECK(m.has_distance_matrix());
  for (NodeId i = 0; i < 40; ++i)
    for (NodeId j = 0; j < 40; ++j) CHECK(m.dist(i, j) == raw.dist(i, j));
}

TEST_CASE("synthetic generation") {
  const auto a = generate_synthetic(100, {{"a", 10}}, 7);
  const auto b = generate_synthetic(100, {{"a", 10}}, 7);
  CHECK(instance_to_json(a) == instance_to_json(b));
  CHECK(instance_to_json(a) != instance_to_json(generate_synthetic(100, {{"a", 10}}, 8)));
  for (const auto& r : a.nodes()) {
    CHECK(r.x >= 0.0);
    CHECK(r.x < 1.0);
    CHECK(r.y >= 0.0);
    CHECK(r.y < 1.0);
  }
  CHECK(a.metric() == Metric::euclidean);
  CHECK_THROWS_AS(generate_synthetic(4, {{"a", 3}, {"b", 2}}, 1), Error);

  const auto ln = generate_synthetic(1000, {{"a", 50}}, 42, DemandModel::lognormal);
  double sum = 0.0;
  for (double h : ln.demand(0)) {
    CHECK(h >= 0.0);
    sum += h;
  }
  CHECK(std::abs(sum - 1000.0) <= 1e-6 * 1000.0);
}

TEST_CASE("json round trip preserves type order and values") {
  const auto inst = generate_synthetic(30, {{"zeta", 2}, {"alpha", 3}}, 5, DemandModel::lognormal);
  const auto back = parse_instance(instance_to_json(inst));
  REQUIRE(back.num_types() == 2);
  CHECK(back.type(0).name == "zeta");
  CHECK(back.type(1).name == "alpha");
  CHECK(back.demand(1) == inst.demand(1));
  for (std::size_t i = 0; i < inst.size(); ++i) CHECK(back.nodes()[i].x == inst.nodes()[i].x);

  const auto path = std::filesystem::temp_directory_path() / "flp_instance_roundtrip.json";
  save_instance(inst, path);
  CHECK(instance_to_json(load_instance(path)) == instance_to_json(inst));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_instance("/nonexistent/x.json"), Error);
}

TEST_CASE("with_budgets and type lookup") {
  const auto inst = test::line_two_types();
  CHECK(inst.type_index("b") == 1);
  CHECK_THROWS_AS(inst.type_index("c"), Error);
  const auto wider = inst.with_budgets({2, 2});
  CHECK(wider.total_budget() == 4);
  CHECK_THROWS_AS(inst.with_budgets({3, 2}), Error);
  CHECK_THROWS_AS(inst.with_budgets({1}), Error);
}
