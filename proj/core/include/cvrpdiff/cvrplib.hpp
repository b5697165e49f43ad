#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvrpdiff/instance.hpp"

namespace cvrpdiff {

// A TSPLIB-style CVRP file. Raw coordinates are kept verbatim; `instance`
// holds the same geometry min-max rescaled into the unit square with one
// common factor for both axes, so lengths convert back by multiplying with
// `scale`.
struct CvrplibInstance {
  std::string name;
  std::vector<Point> raw;  // raw[0] is the depot, raw[i] customer i
  std::vector<int> demands;
  int capacity = 0;
  CvrpInstance instance;
  Point offset;
  double scale = 1.0;
  std::optional<double> optimum;

  double to_original_units(double unit_length) const { return unit_length * scale; }
};

// Throws ParseError naming the offending line.
CvrplibInstance parse_cvrplib(std::string_view text);

// Reads the "Cost <value>" line of a CVRPLIB .sol file.
std::optional<double> parse_solution_cost(std::string_view text);

std::string serialize_cvrplib(const CvrplibInstance& parsed);
// Writes an in-memory instance using its coordinates as the raw coordinates.
std::string serialize_cvrplib(const CvrpInstance& instance, const std::string& name);

}  // namespace cvrpdiff
