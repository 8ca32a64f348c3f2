#include "dicode/projection/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dicode/core/errors.hpp"
#include "dicode/core/rng.hpp"
#include "dicode/projection/assignment.hpp"

namespace dicode::projection {

// ---------------------------------------------------------------------------
// Binary masks

Vec project_binary_topk(const Vec& x, int rows, int cols, const std::vector<int>& counts,
                        const std::vector<int>& forbidden_cells, double on, double off) {
  const int cells = rows * cols;
  const int channels = static_cast<int>(counts.size());
  if (rows < 1 || cols < 1 || channels < 1) throw InvalidArgument("project_binary_topk: empty grid");
  if (x.size() != static_cast<Index>(cells) * channels)
    throw InvalidArgument("project_binary_topk: input size does not match grid");

  std::vector<char> taken(static_cast<std::size_t>(cells), 0);
  for (int f : forbidden_cells) {
    if (f < 0 || f >= cells) throw InvalidArgument("project_binary_topk: forbidden cell out of range");
    taken[static_cast<std::size_t>(f)] = 1;
  }
  const long available = std::count(taken.begin(), taken.end(), 0);
  long requested = 0;
  for (int c : counts) {
    if (c < 0) throw InvalidArgument("project_binary_topk: negative count");
    requested += c;
  }
  if (requested > available) throw ProjectionError("project_binary_topk: counts exceed available cells");

  // Entry e = channel * cells + cell. Order by value, then cell, then channel.
  std::vector<int> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (x[a] != x[b]) return x[a] > x[b];
    if (a % cells != b % cells) return a % cells < b % cells;
    return a / cells < b / cells;
  });

  Vec out = Vec::Constant(x.size(), off);
  std::vector<int> remaining = counts;
  long placed = 0;
  for (int e : order) {
    if (placed == requested) break;
    const int cell = e % cells, ch = e / cells;
    if (taken[static_cast<std::size_t>(cell)] || remaining[static_cast<std::size_t>(ch)] == 0) continue;
    taken[static_cast<std::size_t>(cell)] = 1;
    --remaining[static_cast<std::size_t>(ch)];
    out[e] = on;
    ++placed;
  }
  return out;
}

BinaryTopkProjection::BinaryTopkProjection(int rows, int cols, std::vector<int> counts,
                                           std::vector<int> forbidden_cells, double on, double off)
    : rows_(rows), cols_(cols), counts_(std::move(counts)), forbidden_(std::move(forbidden_cells)), on_(on), off_(off) {
  if (!(on_ > off_)) throw InvalidArgument("BinaryTopkProjection: on must exceed off");
}

Index BinaryTopkProjection::dim() const { return static_cast<Index>(rows_) * cols_ * static_cast<Index>(counts_.size()); }

Vec BinaryTopkProjection::project(const Vec& x) const {
  return project_binary_topk(x, rows_, cols_, counts_, forbidden_, on_, off_);
}

// ---------------------------------------------------------------------------
// Coordinate snap

std::vector<int> SnapGrid::candidates() const {
  std::vector<int> out;
  for (int cell = 0; cell < rows * cols; ++cell)
    if (std::find(forbidden_cells.begin(), forbidden_cells.end(), cell) == forbidden_cells.end()) out.push_back(cell);
  return out;
}

namespace {

double manhattan_to_cell(double r, double c, int cell, int cols) {
  return std::abs(r - cell / cols) + std::abs(c - cell % cols);
}

void clamp_to_grid(double& r, double& c, const SnapGrid& grid) {
  r = std::clamp(r, 0.0, static_cast<double>(grid.rows - 1));
  c = std::clamp(c, 0.0, static_cast<double>(grid.cols - 1));
}

}  // namespace

int nearest_candidate(double r, double c, const SnapGrid& grid, const std::vector<int>& candidates, double margin) {
  int best = -1;
  double d1 = INFINITY, d2 = INFINITY;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double d = manhattan_to_cell(r, c, candidates[k], grid.cols);
    if (d < d1) {
      d2 = d1;
      d1 = d;
      best = static_cast<int>(k);
    } else if (d < d2) {
      d2 = d;
    }
  }
  return d1 + margin < d2 ? best : -1;
}

Vec project_coordinate_snap(const Vec& points, const SnapGrid& grid, double tol, double margin) {
  if (points.size() % 2 != 0) throw InvalidArgument("project_coordinate_snap: expected (row, col) pairs");
  const Index n = points.size() / 2;
  const std::vector<int> cand = grid.candidates();
  if (n > static_cast<Index>(cand.size())) throw ProjectionError("project_coordinate_snap: more entities than cells");

  Vec out = points;
  for (Index i = 0; i < n; ++i) clamp_to_grid(out[2 * i], out[2 * i + 1], grid);

  Mat cost(n, static_cast<Index>(cand.size()));
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < cost.cols(); ++k)
      cost(i, k) = manhattan_to_cell(out[2 * i], out[2 * i + 1], cand[static_cast<std::size_t>(k)], grid.cols);
  const std::vector<int> match = assignment_rectangular(cost);

  for (Index i = 0; i < n; ++i) {
    const int target = match[static_cast<std::size_t>(i)];
    const double r0 = out[2 * i], c0 = out[2 * i + 1];
    const double tr = cand[static_cast<std::size_t>(target)] / grid.cols;
    const double tc = cand[static_cast<std::size_t>(target)] % grid.cols;
    auto at = [&](double lambda) { return std::pair{r0 + lambda * (tr - r0), c0 + lambda * (tc - c0)}; };
    auto ok = [&](double lambda) {
      const auto [r, c] = at(lambda);
      return nearest_candidate(r, c, grid, cand, margin) == target;
    };
    if (ok(0.0)) continue;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? hi : lo) = mid;
    }
    const auto [r, c] = at(hi);
    out[2 * i] = r;
    out[2 * i + 1] = c;
  }
  return out;
}

Vec finalize_coordinate_snap(const Vec& points, const SnapGrid& grid) {
  if (points.size() % 2 != 0) throw InvalidArgument("finalize_coordinate_snap: expected (row, col) pairs");
  const std::vector<int> cand = grid.candidates();
  std::vector<int> used;
  Vec out(points.size());
  for (Index i = 0; i < points.size() / 2; ++i) {
    double r = points[2 * i], c = points[2 * i + 1];
    clamp_to_grid(r, c, grid);
    int k = nearest_candidate(r, c, grid, cand, 0.0);
    if (k < 0) throw ProjectionError("finalize_coordinate_snap: entity " + std::to_string(i) + " has no unique nearest cell");
    const int cell = cand[static_cast<std::size_t>(k)];
    if (std::find(used.begin(), used.end(), cell) != used.end())
      throw ProjectionError("finalize_coordinate_snap: two entities share cell " + std::to_string(cell));
    used.push_back(cell);
    out[2 * i] = cell / grid.cols;
    out[2 * i + 1] = cell % grid.cols;
  }
  return out;
}

CoordinateSnapProjection::CoordinateSnapProjection(SnapGrid grid, int n_entities) : grid_(std::move(grid)), n_(n_entities) {
  if (grid_.rows < 1 || grid_.cols < 1 || n_entities < 1) throw InvalidArgument("CoordinateSnapProjection: empty grid");
}

Vec CoordinateSnapProjection::to_grid(const Vec& x) const {
  if (x.size() != 2 * n_) throw InvalidArgument("CoordinateSnapProjection: wrong design size");
  Vec g(x.size());
  for (Index i = 0; i < n_; ++i) {
    g[2 * i] = 0.5 * (x[2 * i] + 1.0) * (grid_.rows - 1);
    g[2 * i + 1] = 0.5 * (x[2 * i + 1] + 1.0) * (grid_.cols - 1);
  }
  return g;
}

Vec CoordinateSnapProjection::from_grid(const Vec& g) const {
  Vec x(g.size());
  for (Index i = 0; i < n_; ++i) {
    x[2 * i] = grid_.rows > 1 ? 2.0 * g[2 * i] / (grid_.rows - 1) - 1.0 : 0.0;
    x[2 * i + 1] = grid_.cols > 1 ? 2.0 * g[2 * i + 1] / (grid_.cols - 1) - 1.0 : 0.0;
  }
  return x;
}

Vec CoordinateSnapProjection::project(const Vec& x) const {
  return from_grid(project_coordinate_snap(to_grid(x), grid_));
}

Vec CoordinateSnapProjection::finalize(const Vec& x) const {
  return from_grid(finalize_coordinate_snap(project_coordinate_snap(to_grid(x), grid_), grid_));
}

// ---------------------------------------------------------------------------
// Minimum distance

namespace {

double pair_distance(const Vec& p, Index i, Index j) {
  const double dx = p[2 * j] - p[2 * i], dy = p[2 * j + 1] - p[2 * i + 1];
  return std::sqrt(dx * dx + dy * dy);
}

void clamp_point(Vec& p, Index i, const Bounds& b) {
  p[2 * i] = std::clamp(p[2 * i], b.x_lo, b.x_hi);
  p[2 * i + 1] = std::clamp(p[2 * i + 1], b.y_lo, b.y_hi);
}

bool in_bounds(const Vec& p, const Bounds& b) {
  for (Index i = 0; i < p.size() / 2; ++i)
    if (p[2 * i] < b.x_lo || p[2 * i] > b.x_hi || p[2 * i + 1] < b.y_lo || p[2 * i + 1] > b.y_hi) return false;
  return true;
}

bool feasible(const Vec& p, double d_min, const Bounds& b) {
  return in_bounds(p, b) && min_pairwise_distance(p) >= d_min;
}

int lattice_count(double w, double h, double d, bool hex) {
  constexpr double eps = 1e-12;
  const double row_gap = hex ? d * std::sqrt(3.0) / 2.0 : d;
  const int n_rows = static_cast<int>(std::floor(h / row_gap + eps)) + 1;
  int total = 0;
  for (int k = 0; k < n_rows; ++k) {
    const double offset = (hex && k % 2 == 1) ? d / 2.0 : 0.0;
    if (offset <= w) total += static_cast<int>(std::floor((w - offset) / d + eps)) + 1;
  }
  return total;
}

void check_points(const Vec& points, double d_min, const Bounds& b, const char* who) {
  if (points.size() % 2 != 0) throw InvalidArgument(std::string(who) + ": expected (x, y) pairs");
  if (!(d_min > 0.0)) throw InvalidArgument(std::string(who) + ": d_min must be positive");
  if (!(b.x_hi >= b.x_lo && b.y_hi >= b.y_lo)) throw InvalidArgument(std::string(who) + ": empty bounds");
  if (!points.allFinite()) throw NumericalError(std::string(who) + ": non-finite coordinates");
  if (!hex_packing_fits(static_cast<int>(points.size() / 2), d_min, b))
    throw ProjectionError(std::string(who) + ": too many points for the box");
}

}  // namespace

double min_pairwise_distance(const Vec& points) {
  double best = INFINITY;
  const Index n = points.size() / 2;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) best = std::min(best, pair_distance(points, i, j));
  return best;
}

bool hex_packing_fits(int n, double d_min, const Bounds& b) {
  const double w = b.x_hi - b.x_lo, h = b.y_hi - b.y_lo;
  const int best = std::max({lattice_count(w, h, d_min, true), lattice_count(h, w, d_min, true),
                             lattice_count(w, h, d_min, false)});
  return n <= best;
}

Vec finalize_min_distance(const Vec& points, double d_min, const Bounds& b, std::uint64_t seed, int max_iters) {
  check_points(points, d_min, b, "finalize_min_distance");
  const Index n = points.size() / 2;
  const double target = d_min * (1.0 + 1e-9);
  Rng rng(seed);
  Vec p = points;
  for (Index i = 0; i < n; ++i) clamp_point(p, i, b);

  for (int iter = 0; iter < max_iters; ++iter) {
    bool violated = false;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        double r = pair_distance(p, i, j);
        if (r >= d_min) continue;
        violated = true;
        double ux, uy;
        if (r < 1e-12) {
          const double a = rng.uniform(0.0, 2.0 * M_PI);
          ux = std::cos(a);
          uy = std::sin(a);
        } else {
          ux = (p[2 * j] - p[2 * i]) / r;
          uy = (p[2 * j + 1] - p[2 * i + 1]) / r;
        }
        const double half = 0.5 * (target - r);
        p[2 * i] -= half * ux;
        p[2 * i + 1] -= half * uy;
        p[2 * j] += half * ux;
        p[2 * j + 1] += half * uy;
        clamp_point(p, i, b);
        clamp_point(p, j, b);
        // A wall may have absorbed part of the move; give the rest to whichever point can still move.
        r = pair_distance(p, i, j);
        if (r < target) {
          p[2 * j] += (target - r) * ux;
          p[2 * j + 1] += (target - r) * uy;
          clamp_point(p, j, b);
          r = pair_distance(p, i, j);
          if (r < target) {
            p[2 * i] -= (target - r) * ux;
            p[2 * i + 1] -= (target - r) * uy;
            clamp_point(p, i, b);
          }
        }
      }
    }
    if (!violated) return p;
  }
  throw ProjectionError("finalize_min_distance: repair did not converge");
}

Vec project_min_distance(const Vec& points, double d_min, const Bounds& b, std::uint64_t seed) {
  check_points(points, d_min, b, "project_min_distance");
  if (feasible(points, d_min, b)) return points;

  // Work in units of d_min so the pair constraint reads |u_i - u_j| >= 1.
  constexpr double rho = 1000.0;
  const Index n = points.size() / 2;
  const Vec anchor = points / d_min;
  const Bounds nb{b.x_lo / d_min, b.x_hi / d_min, b.y_lo / d_min, b.y_hi / d_min};

  auto objective = [&](const Vec& u, Vec* grad) {
    double f = (u - anchor).squaredNorm();
    if (grad) *grad = 2.0 * (u - anchor);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double r = pair_distance(u, i, j);
        if (r >= 1.0) continue;
        f += rho * (1.0 - r) * (1.0 - r);
        if (grad && r > 1e-12) {
          const double g = -2.0 * rho * (1.0 - r) / r;
          const double dx = u[2 * j] - u[2 * i], dy = u[2 * j + 1] - u[2 * i + 1];
          (*grad)[2 * j] += g * dx;
          (*grad)[2 * j + 1] += g * dy;
          (*grad)[2 * i] -= g * dx;
          (*grad)[2 * i + 1] -= g * dy;
        }
      }
    }
    for (Index k = 0; k < 2 * n; ++k) {
      const double lo = k % 2 == 0 ? nb.x_lo : nb.y_lo, hi = k % 2 == 0 ? nb.x_hi : nb.y_hi;
      const double v = u[k] < lo ? u[k] - lo : (u[k] > hi ? u[k] - hi : 0.0);
      f += rho * v * v;
      if (grad) (*grad)[k] += 2.0 * rho * v;
    }
    return f;
  };

  Vec u = anchor, grad;
  double f = objective(u, &grad);
  for (int iter = 0; iter < 200; ++iter) {
    const double g2 = grad.squaredNorm();
    if (g2 < 1e-20) break;
    double step = 1.0;
    Vec trial;
    double f_trial = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
      trial = u - step * grad;
      f_trial = objective(trial, nullptr);
      if (f_trial <= f - 1e-4 * step * g2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    u = trial;
    f = objective(u, &grad);
  }
  return finalize_min_distance(u * d_min, d_min, b, seed);
}

MinDistanceProjection::MinDistanceProjection(int n_points, double d_min, Bounds bounds, std::uint64_t seed)
    : n_(n_points), d_min_(d_min), bounds_(bounds), seed_(seed) {
  if (!hex_packing_fits(n_points, d_min, bounds)) throw ProjectionError("MinDistanceProjection: infeasible packing");
}

// ---------------------------------------------------------------------------
// Box

BoxProjection::BoxProjection(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size() || (lo_.array() > hi_.array()).any()) throw InvalidArgument("BoxProjection: bad bounds");
}

Vec BoxProjection::project(const Vec& x) const {
  if (x.size() != lo_.size()) throw InvalidArgument("BoxProjection: wrong design size");
  return x.cwiseMax(lo_).cwiseMin(hi_);
}

}  // namespace dicode::projection
