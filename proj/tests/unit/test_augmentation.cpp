#include <gtest/gtest.h>

#include <set>

#include "cvrpdiff/augmentation.hpp"
#include "cvrpdiff/constraint_matrix.hpp"
#include "cvrpdiff/errors.hpp"
#include "support.hpp"

namespace cvrpdiff {
namespace {

using testing::make_instance;
using testing::random_solution;

TEST(GeometricTransform, KnownImages) {
  const Point p{0.2, 0.3};
  EXPECT_EQ(GeometricTransform{0}.apply(p), p);
  const Point v = GeometricTransform{5}.apply(p);
  EXPECT_NEAR(v.x, 0.8, 1e-15);
  EXPECT_NEAR(v.y, 0.3, 1e-15);
  const Point h = GeometricTransform{4}.apply(p);
  EXPECT_NEAR(h.x, 0.2, 1e-15);
  EXPECT_NEAR(h.y, 0.7, 1e-15);
  const Point d = GeometricTransform{6}.apply(p);
  EXPECT_NEAR(d.x, 0.3, 1e-15);
  EXPECT_NEAR(d.y, 0.2, 1e-15);
  const Point a = GeometricTransform{7}.apply(p);
  EXPECT_NEAR(a.x, 0.7, 1e-15);
  EXPECT_NEAR(a.y, 0.8, 1e-15);
  const Point r = GeometricTransform{1}.apply(Point{1.0, 0.5});
  EXPECT_NEAR(r.x, 0.5, 1e-15);
  EXPECT_NEAR(r.y, 1.0, 1e-15);
}

TEST(GeometricTransform, FormsDihedralGroup) {
  // Rotation by 90 applied four times is the identity; reflections are involutions.
  const Point p{0.137, 0.912};
  Point q = p;
  for (int k = 0; k < 4; ++k) q = GeometricTransform{1}.apply(q);
  EXPECT_NEAR(q.x, p.x, 1e-15);
  EXPECT_NEAR(q.y, p.y, 1e-15);
  for (int id = 4; id < 8; ++id) {
    const Point r = GeometricTransform{id}.apply(GeometricTransform{id}.apply(p));
    EXPECT_NEAR(r.x, p.x, 1e-15);
    EXPECT_NEAR(r.y, p.y, 1e-15);
  }
}

TEST(GeometricTransform, PreservesDistancesAndTourLength) {
  Rng rng(11);
  std::uniform_int_distribution<int> pick(0, GeometricTransform::kCount - 1);
  for (int k = 0; k < 1000; ++k) {
    const auto inst = generate_instance(12, 100 + k);
    const auto sol = random_solution(inst, rng);
    const GeometricTransform t{pick(rng)};
    const auto moved = geometric_transform(inst, t);
    EXPECT_EQ(moved.demands, inst.demands);
    EXPECT_EQ(moved.capacity, inst.capacity);
    EXPECT_NEAR(tour_length(moved, sol), tour_length(inst, sol), 1e-9);
    if (k < 50)
      for (int i = 0; i <= inst.size(); ++i)
        for (int j = 0; j <= inst.size(); ++j) EXPECT_NEAR(moved.dist(i, j), inst.dist(i, j), 1e-12);
  }
}

TEST(GeometricTransform, RejectsOutsideUnitSquare) {
  const auto inst = make_instance({0.5, 0.5}, {{1.2, 0.1}}, {1}, 5);
  EXPECT_THROW(geometric_transform(inst, {1}), InputError);
  EXPECT_THROW(GeometricTransform{8}.apply({0, 0}), InputError);
}

TEST(Augment8, Contract) {
  const auto inst = generate_instance(20, 3);
  const auto variants = augment8(inst);
  ASSERT_EQ(variants.size(), 8u);
  EXPECT_EQ(variants[0], inst);
  std::set<std::vector<double>> distinct;
  for (const auto& v : variants) {
    EXPECT_EQ(v.demands, inst.demands);
    EXPECT_EQ(v.capacity, inst.capacity);
    std::vector<double> flat{v.depot.x, v.depot.y};
    for (const auto& p : v.coords) {
      flat.push_back(p.x);
      flat.push_back(p.y);
    }
    distinct.insert(flat);
  }
  EXPECT_EQ(distinct.size(), 8u);
}

TEST(DemandPermute, WorkedExamples) {
  const auto inst = make_instance({0.5, 0.5}, {{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}}, {2, 3, 4}, 10);
  const CvrpSolution route{{{1, 2, 3}}};
  EXPECT_EQ(demand_permute(inst, route, DemandStrategy::inversion, 0).demands, (std::vector<int>{4, 3, 2}));
  EXPECT_EQ(demand_permute(inst, route, DemandStrategy::cw_cyclic, 0).demands, (std::vector<int>{4, 2, 3}));
  EXPECT_EQ(demand_permute(inst, route, DemandStrategy::ccw_cyclic, 0).demands, (std::vector<int>{3, 4, 2}));
  // Visit order matters, not customer index order.
  const CvrpSolution reversed{{{3, 2, 1}}};
  EXPECT_EQ(demand_permute(inst, reversed, DemandStrategy::cw_cyclic, 0).demands, (std::vector<int>{3, 4, 2}));
}

TEST(DemandPermute, CwAndCcwAreInverse) {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto inst = generate_instance(15, 700 + k);
    const auto sol = random_solution(inst, rng);
    const auto there = demand_permute(inst, sol, DemandStrategy::cw_cyclic, 0);
    EXPECT_EQ(demand_permute(there, sol, DemandStrategy::ccw_cyclic, 0), inst);
  }
}

TEST(DemandPermute, PreservesRouteSumsAndObjective) {
  Rng rng(9);
  const DemandStrategy strategies[] = {DemandStrategy::inversion, DemandStrategy::random_reassignment,
                                       DemandStrategy::cw_cyclic, DemandStrategy::ccw_cyclic};
  for (int k = 0; k < 500; ++k) {
    const auto inst = generate_instance(10 + k % 20, 900 + k);
    const auto sol = random_solution(inst, rng);
    const auto out = demand_permute(inst, sol, strategies[k % 4], static_cast<std::uint64_t>(k));
    EXPECT_EQ(out.coords, inst.coords);
    EXPECT_EQ(out.depot, inst.depot);
    for (const auto& r : sol.routes) EXPECT_EQ(route_demand(out, r), route_demand(inst, r));
    EXPECT_TRUE(check_feasible(out, sol).feasible());
    EXPECT_EQ(tour_length(out, sol), tour_length(inst, sol));
    auto a = inst.demands, b = out.demands;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(DemandPermute, RandomReassignmentIsSeeded) {
  const auto inst = generate_instance(30, 1);
  CvrpSolution all;
  all.routes.emplace_back();
  for (int i = 1; i <= 30; ++i) all.routes[0].push_back(i);
  auto big = inst;
  big.capacity = inst.total_demand();
  const auto a = demand_permute(big, all, DemandStrategy::random_reassignment, 4);
  EXPECT_EQ(a, demand_permute(big, all, DemandStrategy::random_reassignment, 4));
  EXPECT_NE(a.demands, demand_permute(big, all, DemandStrategy::random_reassignment, 5).demands);
}

TEST(DemandPermute, RejectsInfeasibleSolution) {
  const auto inst = make_instance({0.5, 0.5}, {{0.1, 0.1}, {0.2, 0.2}}, {6, 6}, 10);
  EXPECT_THROW(demand_permute(inst, CvrpSolution{{{1, 2}}}, DemandStrategy::inversion, 0), InputError);
  EXPECT_THROW(demand_permute(inst, CvrpSolution{{{1}}}, DemandStrategy::inversion, 0), InputError);
  EXPECT_THROW(parse_demand_strategy("sideways"), InputError);
  EXPECT_EQ(parse_demand_strategy("cw_cyclic"), DemandStrategy::cw_cyclic);
}

TEST(Augmentation, ManyInstancesOneConstraintMatrix) {
  Rng rng(21);
  for (int k = 0; k < 200; ++k) {
    const auto inst = generate_instance(20, 1300 + k);
    const auto sol = random_solution(inst, rng);
    const auto m = from_solution(inst, sol);
    for (int t = 0; t < GeometricTransform::kCount; ++t)
      EXPECT_EQ(from_solution(geometric_transform(inst, {t}), sol), m);
    const auto permuted = demand_permute(inst, sol, static_cast<DemandStrategy>(k % 4), static_cast<std::uint64_t>(k));
    EXPECT_EQ(from_solution(permuted, sol), m);
  }
}

}  // namespace
}  // namespace cvrpdiff
