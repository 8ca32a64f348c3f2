#include "dicode/envs/warehouse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dicode/core/errors.hpp"

namespace dicode::envs {

using P = WarehouseParams;

namespace {

constexpr int kCells = P::kRows * P::kCols;
constexpr int kShelves = P::kColours * P::kShelvesPerColour;

int manhattan(int a, int b) { return std::abs(a / P::kCols - b / P::kCols) + std::abs(a % P::kCols - b % P::kCols); }

std::vector<int> non_goal_cells() {
  std::vector<int> out;
  for (int c = 0; c < kCells; ++c)
    if (P::goal_colour(c) < 0) out.push_back(c);
  return out;
}

/// Partial Fisher-Yates: the first k entries become a uniform ordered sample.
std::vector<int> sample_without_replacement(std::vector<int> pool, int k, Rng& rng) {
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace

const std::vector<std::pair<int, int>>& WarehouseParams::goals() {
  static const std::vector<std::pair<int, int>> g{{cell(0, 0), 0},
                                                  {cell(kRows - 1, 0), 0},
                                                  {cell(0, kCols - 1), 1},
                                                  {cell(kRows - 1, kCols - 1), 1}};
  return g;
}

std::vector<int> WarehouseParams::goal_cells() {
  std::vector<int> out;
  for (const auto& [c, col] : goals()) out.push_back(c);
  return out;
}

int WarehouseParams::goal_colour(int c) {
  for (const auto& [g, col] : goals())
    if (g == c) return col;
  return -1;
}

// ---------------------------------------------------------------------------
// Environment

WarehouseEnv::WarehouseEnv(const ShelfLayout& layout, std::vector<int> agent_cells, std::vector<int> requested_boxes,
                           int horizon, std::uint64_t seed)
    : shelf_colour_(kCells, -1), agent_cell_(std::move(agent_cells)), horizon_(horizon), rng_(seed) {
  if (static_cast<int>(agent_cell_.size()) != P::kAgents) throw InvalidArgument("warehouse: wrong agent count");
  if (layout.cells.size() != layout.colours.size()) throw InvalidArgument("warehouse: malformed layout");
  for (std::size_t i = 0; i < layout.cells.size(); ++i) {
    const int c = layout.cells[i];
    if (c < 0 || c >= kCells || shelf_colour_[static_cast<std::size_t>(c)] >= 0)
      throw InvalidArgument("warehouse: invalid shelf cell");
    shelf_colour_[static_cast<std::size_t>(c)] = layout.colours[i];
    boxes_.push_back(Box{layout.colours[i], c, -1, false, false});
  }
  for (int b : requested_boxes) boxes_.at(static_cast<std::size_t>(b)).requested = true;
  carrying_.assign(agent_cell_.size(), -1);
}

int WarehouseEnv::box_at(int cell) const {
  for (std::size_t b = 0; b < boxes_.size(); ++b)
    if (boxes_[b].cell == cell) return static_cast<int>(b);
  return -1;
}

int WarehouseEnv::nearest_goal_distance(int cell, int colour) const {
  int best = 1 << 20;
  for (const auto& [g, col] : P::goals())
    if (col == colour) best = std::min(best, manhattan(cell, g));
  return best;
}

void WarehouseEnv::request_new() {
  std::vector<int> pool;
  for (std::size_t b = 0; b < boxes_.size(); ++b)
    if (boxes_[b].cell >= 0 && !boxes_[b].requested && !boxes_[b].empty) pool.push_back(static_cast<int>(b));
  if (pool.empty()) return;
  const auto pick = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
  boxes_[static_cast<std::size_t>(pool[pick])].requested = true;
}

Vec WarehouseEnv::potential() const {
  Vec phi = Vec::Zero(P::kAgents);
  for (int a = 0; a < P::kAgents; ++a) {
    const int b = carrying_[static_cast<std::size_t>(a)];
    if (b < 0) continue;
    const Box& box = boxes_[static_cast<std::size_t>(b)];
    if (box.requested)
      phi[a] = P::kPickupBonus - P::kDistanceWeight * nearest_goal_distance(agent_cell_[static_cast<std::size_t>(a)], box.colour);
    else if (box.empty)
      phi[a] = -P::kEmptyPenalty;
  }
  return phi;
}

StepResult WarehouseEnv::step(const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != P::kAgents) throw InvalidArgument("warehouse: expected one action per agent");
  for (int a : actions)
    if (a < 0 || a > Toggle) throw InvalidArgument("warehouse: action out of range");
  StepResult out;
  out.rewards = Vec::Zero(P::kAgents);

  for (std::size_t a = 0; a < agent_cell_.size(); ++a) {
    const int act = actions[a];
    const int cell = agent_cell_[a];
    const int r = cell / P::kCols, c = cell % P::kCols;
    if (act >= Up && act <= Right) {
      int nr = r, nc = c;
      if (act == Up) --nr;
      if (act == Down) ++nr;
      if (act == Left) --nc;
      if (act == Right) ++nc;
      if (nr < 0 || nr >= P::kRows || nc < 0 || nc >= P::kCols) continue;
      const int target = P::cell(nr, nc);
      if (std::find(agent_cell_.begin(), agent_cell_.end(), target) != agent_cell_.end()) continue;
      agent_cell_[a] = target;
    } else if (act == Toggle) {
      const int held = carrying_[a];
      if (held < 0) {
        const int b = box_at(cell);
        if (b >= 0) {
          boxes_[static_cast<std::size_t>(b)].cell = -1;
          boxes_[static_cast<std::size_t>(b)].carrier = static_cast<int>(a);
          carrying_[a] = b;
        }
        continue;
      }
      Box& box = boxes_[static_cast<std::size_t>(held)];
      if (box.requested) {
        if (P::goal_colour(cell) == box.colour) {
          box.requested = false;
          box.empty = true;
          out.rewards[static_cast<Index>(a)] += 1.0;
          ++deliveries_;
          request_new();
        }
      } else if (shelf_colour_[static_cast<std::size_t>(cell)] == box.colour && box_at(cell) < 0) {
        box.cell = cell;
        box.carrier = -1;
        box.empty = false;
        carrying_[a] = -1;
      }
    }
  }
  ++t_;
  out.done = t_ >= horizon_;
  return out;
}

Mat WarehouseEnv::observations() const {
  constexpr int half = P::kCrop / 2;
  constexpr int crop_cells = P::kCrop * P::kCrop;
  const int dim = crop_cells * P::kCropChannels + 3 + 2 + 2 + 2 + 4;
  Mat obs = Mat::Zero(dim, P::kAgents);
  const double scale = 1.0 / (P::kRows - 1);

  for (int a = 0; a < P::kAgents; ++a) {
    const int cell = agent_cell_[static_cast<std::size_t>(a)];
    const int r = cell / P::kCols, c = cell % P::kCols;
    for (int dr = -half; dr <= half; ++dr) {
      for (int dc = -half; dc <= half; ++dc) {
        const int k = (dr + half) * P::kCrop + (dc + half);
        auto ch = [&](int channel) -> double& { return obs(channel * crop_cells + k, a); };
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= P::kRows || cc < 0 || cc >= P::kCols) {
          ch(0) = 1.0;
          continue;
        }
        const int q = P::cell(rr, cc);
        const int sc = shelf_colour_[static_cast<std::size_t>(q)];
        if (sc == 0) ch(1) = 1.0;
        if (sc == 1) ch(2) = 1.0;
        const int b = box_at(q);
        if (b >= 0) {
          ch(3) = 1.0;
          if (boxes_[static_cast<std::size_t>(b)].requested) ch(4) = 1.0;
        }
        const int gc = P::goal_colour(q);
        if (gc >= 0) ch(5) = gc == 0 ? 1.0 : -1.0;
        for (int o = 0; o < P::kAgents; ++o)
          if (o != a && agent_cell_[static_cast<std::size_t>(o)] == q) ch(6) = 1.0;
      }
    }
    Index k = crop_cells * P::kCropChannels;
    auto offset_to = [&](int target) {
      obs(k, a) = (target / P::kCols - r) * scale;
      obs(k + 1, a) = (target % P::kCols - c) * scale;
    };

    // Nearest requested box on a shelf.
    int best = -1, best_d = 1 << 20;
    for (const Box& box : boxes_)
      if (box.requested && box.cell >= 0 && manhattan(cell, box.cell) < best_d) {
        best_d = manhattan(cell, box.cell);
        best = box.cell;
      }
    if (best >= 0) {
      offset_to(best);
      obs(k + 2, a) = 1.0;
    }
    k += 3;

    const int held = carrying_[static_cast<std::size_t>(a)];
    if (held >= 0) {
      const Box& box = boxes_[static_cast<std::size_t>(held)];
      int g_best = -1, g_d = 1 << 20;
      for (const auto& [g, col] : P::goals())
        if (col == box.colour && manhattan(cell, g) < g_d) {
          g_d = manhattan(cell, g);
          g_best = g;
        }
      offset_to(g_best);
      k += 2;
      int s_best = -1, s_d = 1 << 20;
      for (int q = 0; q < kCells; ++q)
        if (shelf_colour_[static_cast<std::size_t>(q)] == box.colour && box_at(q) < 0 && manhattan(cell, q) < s_d) {
          s_d = manhattan(cell, q);
          s_best = q;
        }
      if (s_best >= 0) offset_to(s_best);
      k += 2;
    } else {
      k += 4;
    }

    obs(k++, a) = r * scale;
    obs(k++, a) = c * scale;
    obs(k++, a) = held >= 0 ? 1.0 : 0.0;
    obs(k++, a) = held >= 0 && boxes_[static_cast<std::size_t>(held)].requested ? 1.0 : 0.0;
    obs(k++, a) = held >= 0 && boxes_[static_cast<std::size_t>(held)].empty ? 1.0 : 0.0;
    obs(k++, a) = held >= 0 ? static_cast<double>(boxes_[static_cast<std::size_t>(held)].colour) : 0.0;
  }
  return obs;
}

Vec WarehouseEnv::global_state() const {
  Vec s = Vec::Zero(4 * kCells + 4 * P::kAgents);
  for (int q = 0; q < kCells; ++q) {
    const int sc = shelf_colour_[static_cast<std::size_t>(q)];
    if (sc == 0) s[q] = 1.0;
    if (sc == 1) s[kCells + q] = 1.0;
  }
  for (const Box& box : boxes_) {
    if (box.cell < 0) continue;
    s[2 * kCells + box.cell] = 1.0;
    if (box.requested) s[3 * kCells + box.cell] = 1.0;
  }
  const double scale = 1.0 / (P::kRows - 1);
  for (int a = 0; a < P::kAgents; ++a) {
    const int cell = agent_cell_[static_cast<std::size_t>(a)];
    const int held = carrying_[static_cast<std::size_t>(a)];
    const Index k = 4 * kCells + 4 * a;
    s[k] = (cell / P::kCols) * scale;
    s[k + 1] = (cell % P::kCols) * scale;
    s[k + 2] = held >= 0 ? 1.0 : 0.0;
    s[k + 3] = held >= 0 && boxes_[static_cast<std::size_t>(held)].requested ? 1.0 : 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenarios

WarehouseScenarioBase::WarehouseScenarioBase(std::string id, int horizon) : id_(std::move(id)), horizon_(horizon) {
  if (horizon < 1) throw InvalidArgument("warehouse: horizon must be >= 1");
}

int WarehouseScenarioBase::obs_dim() const { return P::kCrop * P::kCrop * P::kCropChannels + 13; }
int WarehouseScenarioBase::state_dim() const { return 4 * kCells + 4 * P::kAgents; }

std::unique_ptr<WarehouseEnv> WarehouseScenarioBase::instantiate_layout(const ShelfLayout& layout,
                                                                        std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<int> agents = sample_without_replacement(non_goal_cells(), P::kAgents, rng);
  std::vector<int> all(layout.cells.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> requested =
      sample_without_replacement(all, std::min<int>(P::kRequested, static_cast<int>(all.size())), rng);
  return std::make_unique<WarehouseEnv>(layout, std::move(agents), std::move(requested), horizon_, rng.next_u64());
}

std::unique_ptr<Env> WarehouseScenarioBase::instantiate(const Vec& theta, std::uint64_t seed) const {
  const Validation v = validate(theta);
  if (!v.ok) throw InvalidArgument(id_ + ": invalid design (" + v.violations.front() + ")");
  return instantiate_layout(layout(theta), seed);
}

ShelfLayout WarehouseScenarioBase::random_layout(Rng& rng) const {
  ShelfLayout l;
  l.cells = sample_without_replacement(non_goal_cells(), kShelves, rng);
  for (int i = 0; i < kShelves; ++i) l.colours.push_back(i / P::kShelvesPerColour);
  return l;
}

WarehouseMaskScenario::WarehouseMaskScenario(int horizon) : WarehouseScenarioBase("warehouse", horizon) {
  projection_ = std::make_shared<projection::BinaryTopkProjection>(
      P::kRows, P::kCols, std::vector<int>(P::kColours, P::kShelvesPerColour), P::goal_cells(), 1.0, -1.0);
}

Index WarehouseMaskScenario::design_dim() const { return static_cast<Index>(P::kColours) * kCells; }

Validation WarehouseMaskScenario::validate(const Vec& theta) const {
  Validation v;
  if (theta.size() != design_dim()) {
    v.fail("shape: expected " + std::to_string(design_dim()) + " values");
    return v;
  }
  std::vector<int> per_cell(kCells, 0);
  for (int ch = 0; ch < P::kColours; ++ch) {
    int count = 0;
    for (int q = 0; q < kCells; ++q) {
      const double x = theta[ch * kCells + q];
      if (x == 1.0) {
        ++count;
        ++per_cell[static_cast<std::size_t>(q)];
        if (P::goal_colour(q) >= 0) v.fail("shelf on goal cell " + std::to_string(q));
      } else if (x != -1.0) {
        v.fail("non-binary value at channel " + std::to_string(ch) + " cell " + std::to_string(q));
      }
    }
    if (count != P::kShelvesPerColour)
      v.fail("count: channel " + std::to_string(ch) + " has " + std::to_string(count) + " shelves");
  }
  for (int q = 0; q < kCells; ++q)
    if (per_cell[static_cast<std::size_t>(q)] > 1) v.fail("cell conflict at " + std::to_string(q));
  return v;
}

ShelfLayout WarehouseMaskScenario::layout(const Vec& theta) const {
  ShelfLayout l;
  for (int ch = 0; ch < P::kColours; ++ch)
    for (int q = 0; q < kCells; ++q)
      if (theta[ch * kCells + q] > 0.0) {
        l.cells.push_back(q);
        l.colours.push_back(ch);
      }
  return l;
}

Vec WarehouseMaskScenario::encode(const ShelfLayout& layout) const {
  Vec x = Vec::Constant(design_dim(), -1.0);
  for (std::size_t i = 0; i < layout.cells.size(); ++i) x[layout.colours[i] * kCells + layout.cells[i]] = 1.0;
  return x;
}

Vec WarehouseMaskScenario::uniform_generate(Rng& rng) const { return encode(random_layout(rng)); }

WarehouseCoordScenario::WarehouseCoordScenario(int horizon) : WarehouseScenarioBase("warehouse_coord", horizon) {
  projection_ = std::make_shared<projection::CoordinateSnapProjection>(
      projection::SnapGrid{P::kRows, P::kCols, P::goal_cells()}, kShelves);
}

Index WarehouseCoordScenario::design_dim() const { return 2 * kShelves; }

namespace {

double to_grid(double x, int n) { return 0.5 * (x + 1.0) * (n - 1); }
double from_grid(double g, int n) { return 2.0 * g / (n - 1) - 1.0; }

}  // namespace

Validation WarehouseCoordScenario::validate(const Vec& theta) const {
  Validation v;
  if (theta.size() != design_dim()) {
    v.fail("shape: expected " + std::to_string(design_dim()) + " values");
    return v;
  }
  std::vector<int> seen;
  for (int i = 0; i < kShelves; ++i) {
    const double x = theta[2 * i], y = theta[2 * i + 1];
    if (!(x >= -1.0 && x <= 1.0 && y >= -1.0 && y <= 1.0)) {
      v.fail("bounds: shelf " + std::to_string(i));
      continue;
    }
    const double gr = to_grid(x, P::kRows), gc = to_grid(y, P::kCols);
    const double rr = std::round(gr), rc = std::round(gc);
    if (std::abs(gr - rr) > 1e-9 || std::abs(gc - rc) > 1e-9) {
      v.fail("off-grid: shelf " + std::to_string(i));
      continue;
    }
    const int q = P::cell(static_cast<int>(rr), static_cast<int>(rc));
    if (P::goal_colour(q) >= 0) v.fail("shelf on goal cell " + std::to_string(q));
    if (std::find(seen.begin(), seen.end(), q) != seen.end()) v.fail("cell conflict at " + std::to_string(q));
    seen.push_back(q);
  }
  return v;
}

ShelfLayout WarehouseCoordScenario::layout(const Vec& theta) const {
  ShelfLayout l;
  for (int i = 0; i < kShelves; ++i) {
    const int r = static_cast<int>(std::round(to_grid(theta[2 * i], P::kRows)));
    const int c = static_cast<int>(std::round(to_grid(theta[2 * i + 1], P::kCols)));
    l.cells.push_back(P::cell(r, c));
    l.colours.push_back(i / P::kShelvesPerColour);
  }
  return l;
}

Vec WarehouseCoordScenario::encode(const ShelfLayout& layout) const {
  // Slots are colour-ordered, so place colour-0 shelves first.
  Vec x(design_dim());
  int slot[P::kColours] = {0, P::kShelvesPerColour};
  for (std::size_t i = 0; i < layout.cells.size(); ++i) {
    const int s = slot[layout.colours[i]]++;
    x[2 * s] = from_grid(layout.cells[i] / P::kCols, P::kRows);
    x[2 * s + 1] = from_grid(layout.cells[i] % P::kCols, P::kCols);
  }
  return x;
}

Vec WarehouseCoordScenario::uniform_generate(Rng& rng) const { return encode(random_layout(rng)); }

int shelves_near_matching_goal(const ShelfLayout& layout, int radius) {
  int count = 0;
  for (std::size_t i = 0; i < layout.cells.size(); ++i)
    for (const auto& [g, col] : P::goals())
      if (col == layout.colours[i] && manhattan(layout.cells[i], g) <= radius) {
        ++count;
        break;
      }
  return count;
}

}  // namespace dicode::envs
