#include "cvrpdiff/augmentation.hpp"

#include <algorithm>
#include <string>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/rng.hpp"

namespace cvrpdiff {

Point GeometricTransform::apply(const Point& p) const {
  switch (id) {
    case 0: return p;
    case 1: return {1.0 - p.y, p.x};
    case 2: return {1.0 - p.x, 1.0 - p.y};
    case 3: return {p.y, 1.0 - p.x};
    case 4: return {p.x, 1.0 - p.y};
    case 5: return {1.0 - p.x, p.y};
    case 6: return {p.y, p.x};
    case 7: return {1.0 - p.y, 1.0 - p.x};
    default: throw InputError("geometric transform id must be in 0..7, got " + std::to_string(id));
  }
}

DemandStrategy parse_demand_strategy(std::string_view name) {
  if (name == "inversion") return DemandStrategy::inversion;
  if (name == "random" || name == "random_reassignment") return DemandStrategy::random_reassignment;
  if (name == "cw" || name == "cw_cyclic") return DemandStrategy::cw_cyclic;
  if (name == "ccw" || name == "ccw_cyclic") return DemandStrategy::ccw_cyclic;
  throw InputError("unknown demand strategy '" + std::string(name) + "'");
}

CvrpInstance geometric_transform(const CvrpInstance& instance, GeometricTransform t) {
  validate_instance(instance, true);
  CvrpInstance out = instance;
  out.depot = t.apply(instance.depot);
  for (auto& p : out.coords) p = t.apply(p);
  return out;
}

std::vector<CvrpInstance> augment8(const CvrpInstance& instance) {
  std::vector<CvrpInstance> out;
  out.reserve(GeometricTransform::kCount);
  for (int id = 0; id < GeometricTransform::kCount; ++id) out.push_back(geometric_transform(instance, {id}));
  return out;
}

CvrpInstance demand_permute(const CvrpInstance& instance, const CvrpSolution& solution, DemandStrategy strategy,
                            std::uint64_t seed) {
  const auto report = check_feasible(instance, solution);
  if (!report.feasible()) throw InputError("demand_permute needs a feasible solution: " + report.summary());
  CvrpInstance out = instance;
  for (std::size_t r = 0; r < solution.routes.size(); ++r) {
    const auto& route = solution.routes[r];
    std::vector<int> d;
    d.reserve(route.size());
    for (int c : route) d.push_back(instance.demand(c));
    switch (strategy) {
      case DemandStrategy::inversion: std::reverse(d.begin(), d.end()); break;
      case DemandStrategy::cw_cyclic: std::rotate(d.rbegin(), d.rbegin() + 1, d.rend()); break;
      case DemandStrategy::ccw_cyclic: std::rotate(d.begin(), d.begin() + 1, d.end()); break;
      case DemandStrategy::random_reassignment: {
        auto rng = substream(seed, "demand/" + std::to_string(r));
        std::shuffle(d.begin(), d.end(), rng);
        break;
      }
    }
    for (std::size_t k = 0; k < route.size(); ++k) out.demands[static_cast<std::size_t>(route[k] - 1)] = d[k];
  }
  return out;
}

}  // namespace cvrpdiff
