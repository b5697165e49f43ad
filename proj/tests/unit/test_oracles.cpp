#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/oracles.hpp"
#include "support.hpp"

namespace cvrpdiff {
namespace {

using testing::make_instance;

// Every ordering of the customers cut into consecutive routes.
double enumerate_optimum(const CvrpInstance& inst) {
  const int n = inst.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    for (unsigned cuts = 0; cuts < (1u << (n - 1)); ++cuts) {
      CvrpSolution s;
      s.routes.push_back({perm[0]});
      for (int i = 1; i < n; ++i) {
        if (cuts & (1u << (i - 1))) s.routes.emplace_back();
        s.routes.back().push_back(perm[static_cast<std::size_t>(i)]);
      }
      bool ok = true;
      for (const auto& r : s.routes) ok = ok && route_demand(inst, r) <= inst.capacity;
      if (ok) best = std::min(best, tour_length(inst, s));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

CvrpInstance tight_instance(int n, std::uint64_t seed) {
  auto inst = generate_instance(n, seed);
  inst.capacity = 12;  // forces several routes at small n
  return inst;
}

TEST(BruteForce, HandCases) {
  const auto one = make_instance({0.5, 0.5}, {{0.5, 1.0}}, {3}, 10);
  const auto s1 = brute_force_solve(one);
  ASSERT_EQ(s1.routes.size(), 1u);
  EXPECT_DOUBLE_EQ(tour_length(one, s1), 1.0);

  const auto two = make_instance({0, 0}, {{0.1, 0}, {0.2, 0}}, {5, 5}, 9);
  const auto s2 = brute_force_solve(two);
  EXPECT_EQ(s2.routes.size(), 2u);
  EXPECT_EQ(s2, (CvrpSolution{{{1}, {2}}}));
}

TEST(BruteForce, MatchesExhaustiveEnumeration) {
  for (int k = 0; k < 12; ++k) {
    const auto inst = tight_instance(6, 300 + k);
    const auto sol = brute_force_solve(inst);
    EXPECT_TRUE(check_feasible(inst, sol).feasible());
    EXPECT_NEAR(tour_length(inst, sol), enumerate_optimum(inst), 1e-12) << "seed " << 300 + k;
  }
}

TEST(BruteForce, InvariantUnderRelabeling) {
  Rng rng(2);
  for (int k = 0; k < 10; ++k) {
    const auto inst = tight_instance(8, 500 + k);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    CvrpInstance relabeled = inst;
    for (int i = 0; i < 8; ++i) {
      relabeled.coords[static_cast<std::size_t>(i)] = inst.coords[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      relabeled.demands[static_cast<std::size_t>(i)] = inst.demands[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    EXPECT_NEAR(tour_length(inst, brute_force_solve(inst)), tour_length(relabeled, brute_force_solve(relabeled)), 1e-12);
  }
}

TEST(BruteForce, DeterministicTieBreak) {
  // Symmetric square layout: many optimal partitions.
  const auto inst = make_instance({0.5, 0.5}, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {1, 1, 1, 1}, 2);
  const auto a = brute_force_solve(inst);
  EXPECT_EQ(a, brute_force_solve(inst));
  for (const auto& r : a.routes) EXPECT_LE(r.front(), r.back());
}

TEST(BruteForce, Errors) {
  EXPECT_THROW(brute_force_solve(generate_instance(13, 0)), SizeError);
  EXPECT_THROW(brute_force_solve(make_instance({0, 0}, {{1, 1}}, {5}, 4)), InfeasibleInstance);
}

TEST(Savings, SingletonsWhenNothingMerges) {
  const auto inst = make_instance({0, 0}, {{0.1, 0.2}, {0.5, 0.1}, {0.9, 0.4}}, {6, 6, 6}, 10);
  const auto s = savings_solve(inst);
  EXPECT_EQ(s.routes.size(), 3u);
}

TEST(Savings, MergesCollinearPair) {
  const auto inst = make_instance({0, 0}, {{0.1, 0}, {0.2, 0}}, {1, 1}, 5);
  const auto s = savings_solve(inst);
  ASSERT_EQ(s.routes.size(), 1u);
  EXPECT_NEAR(tour_length(inst, s), tour_length(inst, brute_force_solve(inst)), 1e-12);
}

TEST(Savings, FeasibleOnLargerInstances) {
  for (int k = 0; k < 100; ++k) {
    const auto inst = generate_instance(30, 1000 + k);
    EXPECT_TRUE(check_feasible(inst, savings_solve(inst)).feasible()) << k;
  }
}

TEST(NearestNeighbor, FeasibleAndNeverBelowOptimum) {
  const auto one = make_instance({0, 0}, {{0.3, 0.3}}, {2}, 5);
  EXPECT_EQ(nearest_neighbor_solve(one), (CvrpSolution{{{1}}}));
  for (int k = 0; k < 100; ++k) {
    const auto inst = generate_instance(25, 2000 + k);
    EXPECT_TRUE(check_feasible(inst, nearest_neighbor_solve(inst)).feasible());
  }
  for (int k = 0; k < 20; ++k) {
    const auto inst = tight_instance(8, 3000 + k);
    EXPECT_GE(tour_length(inst, nearest_neighbor_solve(inst)) + 1e-12, tour_length(inst, brute_force_solve(inst)));
  }
}

TEST(Oracles, OrderingBruteSavingsNearest) {
  int savings_beats_nn = 0;
  const int trials = 40;
  for (int k = 0; k < trials; ++k) {
    const auto inst = generate_instance(10, 4000 + k);
    const double opt = tour_length(inst, brute_force_solve(inst));
    const double sav = tour_length(inst, savings_solve(inst));
    const double nn = tour_length(inst, nearest_neighbor_solve(inst));
    EXPECT_LE(opt, sav + 1e-12);
    EXPECT_LE(opt, nn + 1e-12);
    if (sav <= nn + 1e-12) ++savings_beats_nn;
  }
  EXPECT_EQ(savings_beats_nn, trials);
}

TEST(Oracles, SavingsNonNegative) {
  for (int k = 0; k < 20; ++k) {
    const auto inst = generate_instance(20, 5000 + k);
    for (int i = 1; i <= 20; ++i)
      for (int j = 1; j <= 20; ++j)
        EXPECT_GE(inst.dist(0, i) + inst.dist(0, j) - inst.dist(i, j), -1e-12);
  }
}

TEST(Datasets, LabeledBuildIsDeterministicAndOptimal) {
  const auto a = build_labeled_dataset(20, 8, 0, LabelSolver::brute_force);
  EXPECT_EQ(a, build_labeled_dataset(20, 8, 0, LabelSolver::brute_force));
  ASSERT_EQ(a.size(), 20u);
  for (int k = 0; k < 3; ++k) {
    const auto& r = a[static_cast<std::size_t>(k)];
    ASSERT_TRUE(r.routes);
    EXPECT_NEAR(tour_length(r.instance, *r.routes), enumerate_optimum(r.instance), 1e-12);
  }
  const auto s = build_labeled_dataset(10, 30, 1, LabelSolver::savings);
  for (const auto& r : s) EXPECT_TRUE(check_feasible(r.instance, *r.routes).feasible());
  EXPECT_THROW(build_labeled_dataset(1, 13, 0, LabelSolver::brute_force), SizeError);
  EXPECT_EQ(parse_label_solver("brute"), LabelSolver::brute_force);
  EXPECT_EQ(parse_label_solver("savings"), LabelSolver::savings);
  EXPECT_THROW(parse_label_solver("hgs"), InputError);
}

}  // namespace
}  // namespace cvrpdiff
