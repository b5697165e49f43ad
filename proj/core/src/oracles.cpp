#include "cvrpdiff/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/rng.hpp"

namespace cvrpdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kImprovementEps = 1e-12;

bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

std::vector<int> members(std::uint32_t mask, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (mask & (1u << i)) out.push_back(i + 1);
  return out;
}

struct RouteTable {
  std::vector<double> cost;             // per subset, +inf when infeasible
  std::vector<std::vector<int>> order;  // best visiting order per feasible subset
};

// Held-Karp on every subset whose demand fits Q.
RouteTable held_karp(const CvrpInstance& inst) {
  const int n = inst.size();
  const std::uint32_t full = 1u << n;
  std::vector<int> load(full, 0);
  for (std::uint32_t s = 1; s < full; ++s) {
    const int low = std::countr_zero(s);
    load[s] = load[s & (s - 1)] + inst.demand(low + 1);
  }
  // path[s * n + j]: cheapest depot -> ... -> j covering exactly s, j in s.
  std::vector<double> path(static_cast<std::size_t>(full) * n, kInf);
  std::vector<std::int8_t> parent(static_cast<std::size_t>(full) * n, -1);
  for (int j = 0; j < n; ++j) path[(1u << j) * n + j] = inst.dist(0, j + 1);
  for (std::uint32_t s = 1; s < full; ++s) {
    if (load[s] > inst.capacity || std::popcount(s) < 2) continue;
    for (int j = 0; j < n; ++j) {
      if (!(s & (1u << j))) continue;
      const std::uint32_t prev = s ^ (1u << j);
      double best = kInf;
      std::int8_t arg = -1;
      for (int k = 0; k < n; ++k) {
        if (!(prev & (1u << k))) continue;
        const double c = path[prev * n + k] + inst.dist(k + 1, j + 1);
        if (c < best - kImprovementEps) {
          best = c;
          arg = static_cast<std::int8_t>(k);
        }
      }
      path[s * n + j] = best;
      parent[s * n + j] = arg;
    }
  }
  RouteTable table;
  table.cost.assign(full, kInf);
  table.order.resize(full);
  for (std::uint32_t s = 1; s < full; ++s) {
    if (load[s] > inst.capacity) continue;
    double best = kInf;
    int last = -1;
    for (int j = 0; j < n; ++j) {
      if (!(s & (1u << j))) continue;
      const double c = path[s * n + j] + inst.dist(j + 1, 0);
      if (c < best - kImprovementEps) {
        best = c;
        last = j;
      }
    }
    std::vector<int> seq;
    std::uint32_t cur = s;
    int j = last;
    while (j >= 0) {
      seq.push_back(j + 1);
      const int k = parent[cur * n + j];
      cur ^= 1u << j;
      j = k;
    }
    std::reverse(seq.begin(), seq.end());
    if (seq.size() > 1 && seq.front() > seq.back()) std::reverse(seq.begin(), seq.end());
    table.cost[s] = best;
    table.order[s] = std::move(seq);
  }
  return table;
}

}  // namespace

CvrpSolution brute_force_solve(const CvrpInstance& instance) {
  validate_instance(instance);
  const int n = instance.size();
  if (n > kBruteForceMaxCustomers)
    throw SizeError("brute_force_solve supports at most " + std::to_string(kBruteForceMaxCustomers) +
                    " customers, got " + std::to_string(n));
  const auto table = held_karp(instance);
  const std::uint32_t full = (1u << n) - 1;
  std::vector<double> best(full + 1, kInf);
  std::vector<std::uint32_t> choice(full + 1, 0);
  best[0] = 0.0;

  // Lexicographic comparison of the route sets chosen for remainder `s`
  // when the first route is `a` versus `b`.
  auto route_set = [&](std::uint32_t s, std::uint32_t first) {
    std::vector<std::vector<int>> sets{members(first, n)};
    for (std::uint32_t rest = s ^ first; rest; rest ^= choice[rest]) sets.push_back(members(choice[rest], n));
    return sets;
  };

  for (std::uint32_t s = 1; s <= full; ++s) {
    const std::uint32_t low = s & (~s + 1);
    const std::uint32_t others = s ^ low;
    // Enumerate route subsets containing the lowest customer of s.
    for (std::uint32_t sub = others;; sub = (sub - 1) & others) {
      const std::uint32_t r = sub | low;
      if (table.cost[r] < kInf && best[s ^ r] < kInf) {
        const double c = table.cost[r] + best[s ^ r];
        if (c < best[s] && !nearly_equal(c, best[s])) {
          best[s] = c;
          choice[s] = r;
        } else if (nearly_equal(c, best[s]) && route_set(s, r) < route_set(s, choice[s])) {
          best[s] = std::min(best[s], c);
          choice[s] = r;
        }
      }
      if (sub == 0) break;
    }
  }
  CvrpSolution sol;
  for (std::uint32_t rest = full; rest; rest ^= choice[rest]) sol.routes.push_back(table.order[choice[rest]]);
  return sol;
}

// ---------------------------------------------------------------------------

void improve_local(const CvrpInstance& inst, CvrpSolution& sol) {
  bool improved = true;
  while (improved) {
    improved = false;
    // 2-opt inside each route, depot legs included.
    for (auto& route : sol.routes) {
      const int k = static_cast<int>(route.size());
      bool route_improved = true;
      while (route_improved) {
        route_improved = false;
        for (int a = 0; a < k - 1 && !route_improved; ++a) {
          const int prev = a == 0 ? 0 : route[a - 1];
          for (int b = a + 1; b < k; ++b) {
            const int next = b == k - 1 ? 0 : route[b + 1];
            const double delta = inst.dist(prev, route[b]) + inst.dist(route[a], next) -
                                 inst.dist(prev, route[a]) - inst.dist(route[b], next);
            if (delta < -kImprovementEps) {
              std::reverse(route.begin() + a, route.begin() + b + 1);
              route_improved = improved = true;
              break;
            }
          }
        }
      }
    }
    // Relocate one customer into another route.
    std::vector<int> load;
    for (const auto& r : sol.routes) load.push_back(route_demand(inst, r));
    for (std::size_t from = 0; from < sol.routes.size() && !improved; ++from) {
      auto& src = sol.routes[from];
      for (std::size_t pos = 0; pos < src.size() && !improved; ++pos) {
        const int c = src[pos];
        const int before = pos == 0 ? 0 : src[pos - 1];
        const int after = pos + 1 == src.size() ? 0 : src[pos + 1];
        const double removal = inst.dist(before, after) - inst.dist(before, c) - inst.dist(c, after);
        for (std::size_t to = 0; to < sol.routes.size() && !improved; ++to) {
          if (to == from || load[to] + inst.demand(c) > inst.capacity) continue;
          auto& dst = sol.routes[to];
          for (std::size_t ins = 0; ins <= dst.size(); ++ins) {
            const int p = ins == 0 ? 0 : dst[ins - 1];
            const int q = ins == dst.size() ? 0 : dst[ins];
            const double insertion = inst.dist(p, c) + inst.dist(c, q) - inst.dist(p, q);
            if (removal + insertion < -kImprovementEps) {
              dst.insert(dst.begin() + static_cast<std::ptrdiff_t>(ins), c);
              src.erase(src.begin() + static_cast<std::ptrdiff_t>(pos));
              improved = true;
              break;
            }
          }
        }
      }
    }
    std::erase_if(sol.routes, [](const auto& r) { return r.empty(); });
  }
}

CvrpSolution savings_solve(const CvrpInstance& inst) {
  validate_instance(inst);
  const int n = inst.size();
  struct Saving {
    int i, j;
    double value;
  };
  std::vector<Saving> savings;
  savings.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double s = inst.dist(0, i) + inst.dist(0, j) - inst.dist(i, j);
      assert(s >= -1e-12);
      savings.push_back({i, j, s});
    }
  std::stable_sort(savings.begin(), savings.end(), [](const Saving& a, const Saving& b) { return a.value > b.value; });

  std::vector<std::vector<int>> routes(static_cast<std::size_t>(n) + 1);
  std::vector<int> route_of(static_cast<std::size_t>(n) + 1);
  std::vector<int> load(static_cast<std::size_t>(n) + 1);
  for (int i = 1; i <= n; ++i) {
    routes[i] = {i};
    route_of[i] = i;
    load[i] = inst.demand(i);
  }
  for (const auto& s : savings) {
    const int ri = route_of[s.i], rj = route_of[s.j];
    if (ri == rj || load[ri] + load[rj] > inst.capacity) continue;
    auto& a = routes[ri];
    auto& b = routes[rj];
    const bool i_front = a.front() == s.i, i_back = a.back() == s.i;
    const bool j_front = b.front() == s.j, j_back = b.back() == s.j;
    if (!(i_front || i_back) || !(j_front || j_back)) continue;
    // Orient so that a ends with i and b starts with j.
    if (!i_back) std::reverse(a.begin(), a.end());
    if (!j_front) std::reverse(b.begin(), b.end());
    a.insert(a.end(), b.begin(), b.end());
    for (int c : b) route_of[c] = ri;
    load[ri] += load[rj];
    load[rj] = 0;
    b.clear();
  }
  CvrpSolution sol;
  for (int r = 1; r <= n; ++r)
    if (!routes[r].empty()) sol.routes.push_back(std::move(routes[r]));
  improve_local(inst, sol);
  return sol;
}

CvrpSolution nearest_neighbor_solve(const CvrpInstance& inst) {
  validate_instance(inst);
  const int n = inst.size();
  std::vector<bool> visited(static_cast<std::size_t>(n) + 1, false);
  CvrpSolution sol;
  int remaining = n;
  std::vector<int> route;
  int last = 0;
  int cap = inst.capacity;
  while (remaining > 0) {
    int best = -1;
    double best_d = kInf;
    for (int j = 1; j <= n; ++j) {
      if (visited[j] || inst.demand(j) > cap) continue;
      const double d = inst.dist(last, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best < 0) {
      sol.routes.push_back(std::move(route));
      route.clear();
      last = 0;
      cap = inst.capacity;
      continue;
    }
    visited[best] = true;
    --remaining;
    route.push_back(best);
    cap -= inst.demand(best);
    last = best;
  }
  if (!route.empty()) sol.routes.push_back(std::move(route));
  return sol;
}

LabelSolver parse_label_solver(std::string_view name) {
  if (name == "brute" || name == "brute_force") return LabelSolver::brute_force;
  if (name == "savings") return LabelSolver::savings;
  throw InputError("unknown solver '" + std::string(name) + "' (expected brute or savings)");
}

CvrpSolution solve_with(LabelSolver solver, const CvrpInstance& instance) {
  return solver == LabelSolver::brute_force ? brute_force_solve(instance) : savings_solve(instance);
}

std::vector<Record> build_dataset(int count, int n, std::uint64_t seed) {
  if (count < 0) throw InputError("count must be non-negative");
  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back({generate_instance(n, substream_seed(seed, "data/" + std::to_string(i))), std::nullopt});
  return out;
}

std::vector<Record> build_labeled_dataset(int count, int n, std::uint64_t seed, LabelSolver solver) {
  if (solver == LabelSolver::brute_force && n > kBruteForceMaxCustomers)
    throw SizeError("brute-force labels need n <= " + std::to_string(kBruteForceMaxCustomers));
  auto out = build_dataset(count, n, seed);
  for (auto& rec : out) rec.routes = solve_with(solver, rec.instance);
  return out;
}

}  // namespace cvrpdiff
