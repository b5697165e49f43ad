#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "cvrpdiff/dataset.hpp"
#include "cvrpdiff/instance.hpp"

namespace cvrpdiff {

inline constexpr int kBruteForceMaxCustomers = 12;

// Exact optimum: Held-Karp over every capacity-feasible customer subset,
// then a set-partition DP over subsets. Ties resolve to the
// lexicographically smallest route set (routes as sorted member lists,
// ordered by smallest member). Each route is oriented so its first customer
// is smaller than its last. Throws SizeError for N > 12.
CvrpSolution brute_force_solve(const CvrpInstance& instance);

// Parallel Clarke-Wright savings followed by intra-route 2-opt and
// inter-route relocate until no first-improvement move remains.
CvrpSolution savings_solve(const CvrpInstance& instance);

// Greedy nearest feasible customer; returns to the depot when nothing fits.
CvrpSolution nearest_neighbor_solve(const CvrpInstance& instance);

// Applies 2-opt and relocate moves in place until a local optimum.
void improve_local(const CvrpInstance& instance, CvrpSolution& solution);

enum class LabelSolver { brute_force, savings };

LabelSolver parse_label_solver(std::string_view name);
CvrpSolution solve_with(LabelSolver solver, const CvrpInstance& instance);

// `count` instances of size n from substreams "data/<index>" of `seed`, each
// labeled by `solver`.
std::vector<Record> build_labeled_dataset(int count, int n, std::uint64_t seed, LabelSolver solver);

// Unlabeled counterpart used for policy training and evaluation sets.
std::vector<Record> build_dataset(int count, int n, std::uint64_t seed);

}  // namespace cvrpdiff
