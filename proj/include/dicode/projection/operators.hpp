#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dicode/core/types.hpp"

namespace dicode::projection {

/// Maps wide-domain samples toward the feasible set. `project` is idempotent
/// and fixes valid designs; `finalize` lands exactly in the feasible set.
class ProjectionOperator {
 public:
  virtual ~ProjectionOperator() = default;
  virtual Index dim() const = 0;
  virtual Vec project(const Vec& x) const = 0;
  virtual Vec finalize(const Vec& x) const = 0;
};

using ProjectionPtr = std::shared_ptr<const ProjectionOperator>;

// ---------------------------------------------------------------------------
// Binary masks

/// x holds one block of rows*cols values per channel (channel-major, cells
/// row-major). Cells are claimed in descending value order (ties: lower cell
/// index, then lower channel); a cell already claimed, forbidden, or whose
/// channel is full is skipped and the next-ranked entry fills in.
Vec project_binary_topk(const Vec& x, int rows, int cols, const std::vector<int>& counts,
                        const std::vector<int>& forbidden_cells = {}, double on = 1.0, double off = 0.0);

class BinaryTopkProjection final : public ProjectionOperator {
 public:
  BinaryTopkProjection(int rows, int cols, std::vector<int> counts, std::vector<int> forbidden_cells,
                       double on = 1.0, double off = -1.0);
  Index dim() const override;
  Vec project(const Vec& x) const override;
  Vec finalize(const Vec& x) const override { return project(x); }

 private:
  int rows_, cols_;
  std::vector<int> counts_, forbidden_;
  double on_, off_;
};

// ---------------------------------------------------------------------------
// Coordinate snap

/// Grid of candidate cells with centres at integer (row, col) coordinates.
/// Distances between points and cells are Manhattan.
struct SnapGrid {
  int rows = 0;
  int cols = 0;
  std::vector<int> forbidden_cells;  // linear index row*cols + col

  std::vector<int> candidates() const;
};

/// Index into grid.candidates() of the strictly nearest candidate, or -1 on a
/// tie within `margin`.
int nearest_candidate(double r, double c, const SnapGrid& grid, const std::vector<int>& candidates,
                      double margin = 0.0);

/// points holds (row, col) pairs, one per entity. Clamps to the grid's
/// bounding box, matches entities to distinct candidate cells by Manhattan
/// cost, then moves each entity toward its cell centre by the smallest
/// fraction that makes that cell strictly nearest.
Vec project_coordinate_snap(const Vec& points, const SnapGrid& grid, double tol = 1e-6, double margin = 1e-9);

/// Replaces each point with its nearest candidate centre. Throws
/// ProjectionError if two entities share a nearest cell.
Vec finalize_coordinate_snap(const Vec& points, const SnapGrid& grid);

/// Coordinate snap on a design normalized to [-1, 1] per axis.
class CoordinateSnapProjection final : public ProjectionOperator {
 public:
  CoordinateSnapProjection(SnapGrid grid, int n_entities);
  Index dim() const override { return 2 * n_; }
  Vec project(const Vec& x) const override;
  Vec finalize(const Vec& x) const override;

  Vec to_grid(const Vec& x) const;
  Vec from_grid(const Vec& g) const;

 private:
  SnapGrid grid_;
  Index n_;
};

// ---------------------------------------------------------------------------
// Minimum distance

struct Bounds {
  double x_lo, x_hi, y_lo, y_hi;
};

/// Sufficient condition: n points fit in the box on a hexagonal lattice of
/// spacing d_min.
bool hex_packing_fits(int n, double d_min, const Bounds& b);

/// Penalty descent on |x' - x|^2 + rho * (pair and boundary violations)^2,
/// followed by the exact repair, so the result is feasible. Feasible input is
/// returned unchanged.
Vec project_min_distance(const Vec& points, double d_min, const Bounds& b, std::uint64_t seed = 0);

/// Pushes violating pairs apart symmetrically until every pair is at least
/// d_min apart and all points lie in the box. Coincident pairs separate along
/// a direction drawn from `seed`.
Vec finalize_min_distance(const Vec& points, double d_min, const Bounds& b, std::uint64_t seed = 0,
                          int max_iters = 10000);

double min_pairwise_distance(const Vec& points);

class MinDistanceProjection final : public ProjectionOperator {
 public:
  MinDistanceProjection(int n_points, double d_min, Bounds bounds, std::uint64_t seed = 0);
  Index dim() const override { return 2 * n_; }
  Vec project(const Vec& x) const override { return project_min_distance(x, d_min_, bounds_, seed_); }
  Vec finalize(const Vec& x) const override { return finalize_min_distance(x, d_min_, bounds_, seed_); }
  double d_min() const { return d_min_; }
  const Bounds& bounds() const { return bounds_; }

 private:
  Index n_;
  double d_min_;
  Bounds bounds_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Box

class BoxProjection final : public ProjectionOperator {
 public:
  BoxProjection(Vec lo, Vec hi);
  Index dim() const override { return lo_.size(); }
  Vec project(const Vec& x) const override;
  Vec finalize(const Vec& x) const override { return project(x); }

 private:
  Vec lo_, hi_;
};

}  // namespace dicode::projection
