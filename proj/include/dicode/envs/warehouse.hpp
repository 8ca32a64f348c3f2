#pragma once

#include <array>

#include "dicode/envs/scenario.hpp"

namespace dicode::envs {

/// Shelf placement on the warehouse grid: cell index (row * cols + col) and colour.
struct ShelfLayout {
  std::vector<int> cells;
  std::vector<int> colours;
};

/// Grid warehouse with coloured shelves. Agents fetch requested boxes,
/// deliver them to a goal of the box's colour and return the emptied box to
/// a free shelf of that colour.
struct WarehouseParams {
  static constexpr int kRows = 8;
  static constexpr int kCols = 8;
  static constexpr int kColours = 2;
  static constexpr int kShelvesPerColour = 4;
  static constexpr int kAgents = 2;
  static constexpr int kRequested = 2;
  static constexpr int kCrop = 5;
  static constexpr int kCropChannels = 7;
  static constexpr double kPickupBonus = 0.6;
  static constexpr double kDistanceWeight = 0.05;
  static constexpr double kEmptyPenalty = 0.1;

  static int cell(int r, int c) { return r * kCols + c; }
  /// Goal cells: colour 0 on the left corners, colour 1 on the right corners.
  static const std::vector<std::pair<int, int>>& goals();  // (cell, colour)
  static std::vector<int> goal_cells();
  static int goal_colour(int cell);  // -1 if not a goal
};

class WarehouseEnv final : public Env {
 public:
  enum Action { Noop = 0, Up, Down, Left, Right, Toggle };

  struct Box {
    int colour = 0;
    int cell = -1;     // -1 while carried
    int carrier = -1;  // agent index while carried
    bool requested = false;
    bool empty = false;  // delivered and not yet returned
  };

  WarehouseEnv(const ShelfLayout& layout, std::vector<int> agent_cells, std::vector<int> requested_boxes,
               int horizon, std::uint64_t seed);

  int n_agents() const override { return WarehouseParams::kAgents; }
  int t() const override { return t_; }
  Mat observations() const override;
  Vec global_state() const override;
  Vec potential() const override;
  StepResult step(const std::vector<int>& actions) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<WarehouseEnv>(*this); }

  const std::vector<int>& agent_cells() const { return agent_cell_; }
  const std::vector<int>& carrying() const { return carrying_; }
  const std::vector<Box>& boxes() const { return boxes_; }
  int shelf_colour(int cell) const { return shelf_colour_[static_cast<std::size_t>(cell)]; }
  int box_at(int cell) const;
  int deliveries() const { return deliveries_; }

 private:
  void request_new();
  int nearest_goal_distance(int cell, int colour) const;

  std::vector<int> shelf_colour_;  // per cell, -1 when no shelf
  std::vector<Box> boxes_;
  std::vector<int> agent_cell_;
  std::vector<int> carrying_;  // box index or -1
  int horizon_;
  int t_ = 0;
  int deliveries_ = 0;
  Rng rng_;
};

/// Shared base for the two warehouse design representations.
class WarehouseScenarioBase : public Scenario {
 public:
  explicit WarehouseScenarioBase(std::string id, int horizon);

  const std::string& id() const override { return id_; }
  int n_agents() const override { return WarehouseParams::kAgents; }
  int horizon() const override { return horizon_; }
  int obs_dim() const override;
  int state_dim() const override;
  int n_actions() const override { return 6; }
  projection::ProjectionPtr projection() const override { return projection_; }

  std::unique_ptr<Env> instantiate(const Vec& theta, std::uint64_t seed) const override;
  /// Environment for an explicit layout (used by instantiate and scripted tests).
  std::unique_ptr<WarehouseEnv> instantiate_layout(const ShelfLayout& layout, std::uint64_t seed) const;

  virtual ShelfLayout layout(const Vec& theta) const = 0;

 protected:
  ShelfLayout random_layout(Rng& rng) const;
  std::string id_;
  int horizon_;
  projection::ProjectionPtr projection_;
};

/// Design = one binary mask per colour (values +1 / -1), channel-major.
class WarehouseMaskScenario final : public WarehouseScenarioBase {
 public:
  explicit WarehouseMaskScenario(int horizon = 128);
  Index design_dim() const override;
  Validation validate(const Vec& theta) const override;
  Vec uniform_generate(Rng& rng) const override;
  ShelfLayout layout(const Vec& theta) const override;
  Vec encode(const ShelfLayout& layout) const;
};

/// Design = normalized (row, col) per shelf in [-1, 1]; the first half of
/// the shelves has colour 0, the rest colour 1.
class WarehouseCoordScenario final : public WarehouseScenarioBase {
 public:
  explicit WarehouseCoordScenario(int horizon = 128);
  Index design_dim() const override;
  Validation validate(const Vec& theta) const override;
  Vec uniform_generate(Rng& rng) const override;
  ShelfLayout layout(const Vec& theta) const override;
  Vec encode(const ShelfLayout& layout) const;
};

/// Count of shelves within Manhattan distance `radius` of a goal of their own colour.
int shelves_near_matching_goal(const ShelfLayout& layout, int radius = 2);

}  // namespace dicode::envs
