#include "cvrpdiff/instance.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/rng.hpp"

namespace cvrpdiff {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

int CvrpInstance::total_demand() const { return std::accumulate(demands.begin(), demands.end(), 0); }

void validate_instance(const CvrpInstance& instance, bool require_unit_square) {
  const int n = instance.size();
  if (n < 1) throw InputError("instance has no customers");
  if (instance.demands.size() != instance.coords.size())
    throw InputError("instance has " + std::to_string(instance.coords.size()) + " coordinates but " +
                     std::to_string(instance.demands.size()) + " demands");
  if (instance.capacity < 1) throw InputError("capacity must be positive");
  auto in_unit = [](const Point& p) { return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0; };
  auto finite = [](const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); };
  if (!finite(instance.depot)) throw InputError("depot coordinate is not finite");
  if (require_unit_square && !in_unit(instance.depot)) throw InputError("depot outside the unit square");
  for (int i = 1; i <= n; ++i) {
    if (!finite(instance.node(i))) throw InputError("customer " + std::to_string(i) + " coordinate is not finite");
    if (require_unit_square && !in_unit(instance.node(i)))
      throw InputError("customer " + std::to_string(i) + " outside the unit square");
    const int d = instance.demand(i);
    if (d < 1) throw InputError("customer " + std::to_string(i) + " has non-positive demand");
    if (d > instance.capacity)
      throw InfeasibleInstance("customer " + std::to_string(i) + " demand " + std::to_string(d) +
                               " exceeds capacity " + std::to_string(instance.capacity));
  }
}

int default_capacity(int n) {
  if (n <= 20) return 30;
  if (n <= 50) return 40;
  return 50;
}

CvrpInstance generate_instance(int n, std::uint64_t seed) {
  if (n < 1) throw InputError("generate_instance: n must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> demand(1, 9);
  CvrpInstance inst;
  inst.depot = {unit(rng), unit(rng)};
  inst.coords.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = unit(rng);
    const double y = unit(rng);
    inst.coords.push_back({x, y});
  }
  inst.demands.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inst.demands.push_back(demand(rng));
  inst.capacity = default_capacity(n);
  return inst;
}

namespace {

void check_index(const CvrpInstance& instance, int c) {
  if (c < 1 || c > instance.size())
    throw InputError("customer index " + std::to_string(c) + " out of range 1.." + std::to_string(instance.size()));
}

}  // namespace

double route_length(const CvrpInstance& instance, const std::vector<int>& route) {
  if (route.empty()) return 0.0;
  double len = 0.0;
  int prev = 0;
  for (int c : route) {
    check_index(instance, c);
    len += instance.dist(prev, c);
    prev = c;
  }
  return len + instance.dist(prev, 0);
}

double tour_length(const CvrpInstance& instance, const CvrpSolution& solution) {
  double total = 0.0;
  for (const auto& r : solution.routes) total += route_length(instance, r);
  return total;
}

int route_demand(const CvrpInstance& instance, const std::vector<int>& route) {
  int load = 0;
  for (int c : route) {
    check_index(instance, c);
    load += instance.demand(c);
  }
  return load;
}

std::string Violation::describe() const {
  switch (kind) {
    case Kind::unvisited: return "unvisited: " + std::to_string(customer);
    case Kind::duplicate: return "duplicate: " + std::to_string(customer) + " (route " + std::to_string(route) + ")";
    case Kind::capacity:
      return "capacity: route " + std::to_string(route) + " over by " + std::to_string(overload);
    case Kind::out_of_range:
      return "out_of_range: " + std::to_string(customer) + " (route " + std::to_string(route) + ")";
    case Kind::empty_route: return "empty_route: " + std::to_string(route);
  }
  return "unknown";
}

std::string FeasibilityReport::summary() const {
  if (feasible()) return "feasible";
  std::ostringstream os;
  os << "infeasible:";
  for (const auto& v : violations) os << ' ' << v.describe() << ';';
  return os.str();
}

FeasibilityReport check_feasible(const CvrpInstance& instance, const CvrpSolution& solution) {
  FeasibilityReport report;
  const int n = instance.size();
  std::vector<int> seen(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t r = 0; r < solution.routes.size(); ++r) {
    const auto& route = solution.routes[r];
    const int ri = static_cast<int>(r);
    if (route.empty()) {
      report.violations.push_back({Violation::Kind::empty_route, -1, ri, 0});
      continue;
    }
    int load = 0;
    for (int c : route) {
      if (c < 1 || c > n) {
        report.violations.push_back({Violation::Kind::out_of_range, c, ri, 0});
        continue;
      }
      if (seen[static_cast<std::size_t>(c)]++ > 0) report.violations.push_back({Violation::Kind::duplicate, c, ri, 0});
      load += instance.demand(c);
    }
    if (load > instance.capacity)
      report.violations.push_back({Violation::Kind::capacity, -1, ri, load - instance.capacity});
  }
  for (int c = 1; c <= n; ++c)
    if (seen[static_cast<std::size_t>(c)] == 0) report.violations.push_back({Violation::Kind::unvisited, c, -1, 0});
  return report;
}

}  // namespace cvrpdiff
