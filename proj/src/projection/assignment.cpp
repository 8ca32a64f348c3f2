#include "dicode/projection/assignment.hpp"

#include <cmath>
#include <limits>

#include "dicode/core/errors.hpp"

namespace dicode::projection {

std::vector<int> assignment(const Mat& cost) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("assignment: cost matrix must be square");
  if (!cost.allFinite()) throw InvalidArgument("assignment: cost matrix has non-finite entries");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};

  // 1-based arrays; column 0 is a virtual source.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> perm(n, -1);
  for (int j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
  return perm;
}

std::vector<int> assignment_rectangular(const Mat& cost) {
  if (cost.rows() > cost.cols()) throw InvalidArgument("assignment: more rows than columns");
  Mat square = Mat::Zero(cost.cols(), cost.cols());
  square.topRows(cost.rows()) = cost;
  std::vector<int> perm = assignment(square);
  perm.resize(static_cast<std::size_t>(cost.rows()));
  return perm;
}

double assignment_cost(const Mat& cost, const std::vector<int>& perm) {
  double total = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) total += cost(static_cast<Index>(i), perm[i]);
  return total;
}

}  // namespace dicode::projection
