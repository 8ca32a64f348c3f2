#pragma once

#include <vector>

#include "dicode/core/types.hpp"

namespace dicode::projection {

/// Minimum-cost perfect matching on a square matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns perm with row i assigned to column perm[i].
std::vector<int> assignment(const Mat& cost);

/// Rows may be fewer than columns; each row gets a distinct column.
std::vector<int> assignment_rectangular(const Mat& cost);

double assignment_cost(const Mat& cost, const std::vector<int>& perm);

}  // namespace dicode::projection
