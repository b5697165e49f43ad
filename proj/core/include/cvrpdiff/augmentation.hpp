#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cvrpdiff/instance.hpp"

namespace cvrpdiff {

// Element of the dihedral group of the unit square, acting about (0.5, 0.5):
//   0 identity, 1/2/3 rotation by 90/180/270 degrees counter-clockwise,
//   4 reflection across the horizontal axis y = 0.5,
//   5 reflection across the vertical axis x = 0.5,
//   6 reflection across the main diagonal y = x,
//   7 reflection across the anti-diagonal y = 1 - x.
// Transforms 4-7 are the four axial symmetries used for training-time
// augmentation.
struct GeometricTransform {
  int id = 0;
  static constexpr int kCount = 8;
  Point apply(const Point& p) const;
};

enum class DemandStrategy { inversion, random_reassignment, cw_cyclic, ccw_cyclic };

DemandStrategy parse_demand_strategy(std::string_view name);

// Throws InputError when a coordinate lies outside [0,1]^2.
CvrpInstance geometric_transform(const CvrpInstance& instance, GeometricTransform t);

// All eight variants ordered by transform id; element 0 is the input.
std::vector<CvrpInstance> augment8(const CvrpInstance& instance);

// Permutes demands among the customers of each route of a feasible
// solution. cw_cyclic moves every demand to the next customer in visit
// order (the last wraps to the first); ccw_cyclic is its inverse. The
// solution stays feasible with an unchanged objective.
CvrpInstance demand_permute(const CvrpInstance& instance, const CvrpSolution& solution, DemandStrategy strategy,
                            std::uint64_t seed);

}  // namespace cvrpdiff
