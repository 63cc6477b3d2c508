#pragma once

#include <vector>

#include "corap/tensor.hpp"

namespace corap {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials, O(n^3)). Entry r of the result is the column
/// assigned to row r.
std::vector<Index> solve_assignment(const Matrix<double>& cost);

}  // namespace corap
