#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "coachlab/mdp.hpp"

namespace coachlab {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Action indices of the dog grid. "up" increases y.
enum class GridAction : ActionId { up = 0, down = 1, left = 2, right = 3 };
inline constexpr std::size_t kGridActions = 4;

std::string_view to_string(GridAction a);

/// Evaluation-only rewards. Landing on the goal pays `goal`, landing on a
/// penalty cell pays `penalty`, any other move pays `step`.
struct GridRewards {
  double step = -1.0;
  double penalty = -20.0;
  double goal = 10.0;
};

struct GridConfig {
  int width = 5;
  int height = 5;
  Cell start{3, 0};
  Cell goal{3, 4};
  std::vector<Cell> penalty_cells{{3, 1}, {3, 2}, {3, 3}};
  GridRewards rewards;
  double gamma = 0.99;

  /// Throws std::invalid_argument when the layout is malformed.
  void validate() const;
};

class GridWorld {
 public:
  explicit GridWorld(GridConfig config);

  const GridConfig& config() const { return config_; }
  int width() const { return config_.width; }
  int height() const { return config_.height; }
  std::size_t num_states() const { return static_cast<std::size_t>(config_.width * config_.height); }

  StateId state_of(Cell c) const;
  Cell cell_of(StateId s) const;
  bool contains(Cell c) const;
  bool is_penalty(Cell c) const;
  bool is_goal(Cell c) const { return c == config_.goal; }
  StateId start_state() const { return state_of(config_.start); }
  StateId goal_state() const { return state_of(config_.goal); }

  /// Deterministic move; off-grid moves leave the cell unchanged.
  Cell move(Cell c, GridAction a) const;
  double reward(Cell landed) const;

 private:
  GridConfig config_;
  std::vector<char> penalty_;
};

struct DogGrid {
  Mdp mdp;
  GridWorld world;
};

/// Builds the episodic grid MDP; the goal is the only terminal state.
DogGrid build_dog_grid(const GridConfig& config = {});

/// Plain-text map: one character per cell, `S` start, `G` goal, `X`
/// penalty, `.` free; rows top (highest y) first.
GridConfig parse_grid_map(std::string_view text, const GridRewards& rewards = {}, double gamma = 0.99);
GridConfig load_grid_map(const std::string& path, const GridRewards& rewards = {}, double gamma = 0.99);
std::string format_grid_map(const GridConfig& config);

enum class DogBehavior { bad, alright, good };
DogBehavior parse_dog_behavior(std::string_view name);
std::string_view to_string(DogBehavior kind);

/// Deterministic reference behaviours: `bad` takes the shortest route and
/// ignores penalty cells, `good` takes the shortest penalty-free route, and
/// `alright` additionally keeps one cell of clearance from penalty cells.
/// Ties go to the lowest action index.
TabularPolicy scripted_dog_policy(const GridWorld& world, DogBehavior kind);

/// Follows a deterministic policy from `from` until the goal or max_steps.
std::vector<Cell> rollout_path(const GridWorld& world, const TabularPolicy& policy, Cell from,
                               std::size_t max_steps = 1000);

}  // namespace coachlab
