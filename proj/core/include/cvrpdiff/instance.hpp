#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cvrpdiff {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

// Node 0 is the depot, customers are 1..N. coords[i-1] and demands[i-1]
// belong to customer i.
struct CvrpInstance {
  Point depot;
  std::vector<Point> coords;
  std::vector<int> demands;
  int capacity = 0;

  int size() const { return static_cast<int>(coords.size()); }
  const Point& node(int i) const { return i == 0 ? depot : coords[static_cast<std::size_t>(i - 1)]; }
  int demand(int i) const { return i == 0 ? 0 : demands[static_cast<std::size_t>(i - 1)]; }
  double dist(int i, int j) const { return distance(node(i), node(j)); }
  int total_demand() const;

  friend bool operator==(const CvrpInstance&, const CvrpInstance&) = default;
};

// Throws InputError (or InfeasibleInstance for demand > capacity) unless the
// instance has N >= 1, matching array sizes, Q >= 1 and 1 <= demand <= Q.
// Coordinates are only range-checked when `require_unit_square` is set.
void validate_instance(const CvrpInstance& instance, bool require_unit_square = false);

// Each route is an ordered list of customer indices; the depot legs at both
// ends are implicit.
struct CvrpSolution {
  std::vector<std::vector<int>> routes;

  friend bool operator==(const CvrpSolution&, const CvrpSolution&) = default;
};

struct Violation {
  enum class Kind { unvisited, duplicate, capacity, out_of_range, empty_route };
  Kind kind;
  int customer = -1;  // offending customer, -1 if not applicable
  int route = -1;     // offending route index, -1 if not applicable
  int overload = 0;   // demand above Q for capacity violations

  std::string describe() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
  std::string summary() const;
};

// Capacity used for synthetic instances of size n: 30 up to 20 customers,
// 40 up to 50, 50 beyond.
int default_capacity(int n);

// Depot and customers uniform on [0,1]^2, demands uniform on {1..9}.
CvrpInstance generate_instance(int n, std::uint64_t seed);

double route_length(const CvrpInstance& instance, const std::vector<int>& route);
double tour_length(const CvrpInstance& instance, const CvrpSolution& solution);
int route_demand(const CvrpInstance& instance, const std::vector<int>& route);

FeasibilityReport check_feasible(const CvrpInstance& instance, const CvrpSolution& solution);

}  // namespace cvrpdiff
