#pragma once

#include <Eigen/Core>

namespace cvrpdiff {

// Row-major so that node and edge rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace cvrpdiff
