#include "coachlab/gridworld.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace coachlab {

std::string_view to_string(GridAction a) {
  switch (a) {
    case GridAction::up: return "up";
    case GridAction::down: return "down";
    case GridAction::left: return "left";
    case GridAction::right: return "right";
  }
  return "?";
}

void GridConfig::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
  auto inside = [&](Cell c) { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; };
  if (!inside(start)) throw std::invalid_argument("start lies outside the grid");
  if (!inside(goal)) throw std::invalid_argument("goal lies outside the grid");
  for (const Cell& c : penalty_cells) {
    if (!inside(c)) throw std::invalid_argument("penalty cell lies outside the grid");
    if (c == goal) throw std::invalid_argument("goal cannot be a penalty cell");
    if (c == start) throw std::invalid_argument("start cannot be a penalty cell");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("grid gamma must lie in [0, 1)");
}

GridWorld::GridWorld(GridConfig config) : config_(std::move(config)) {
  config_.validate();
  penalty_.assign(num_states(), 0);
  for (const Cell& c : config_.penalty_cells) penalty_[state_of(c)] = 1;
}

StateId GridWorld::state_of(Cell c) const {
  if (!contains(c)) throw std::out_of_range("cell outside grid");
  return static_cast<StateId>(c.y * config_.width + c.x);
}

Cell GridWorld::cell_of(StateId s) const {
  if (s >= num_states()) throw std::out_of_range("state outside grid");
  const int i = static_cast<int>(s);
  return {i % config_.width, i / config_.width};
}

bool GridWorld::contains(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < config_.width && c.y < config_.height;
}

bool GridWorld::is_penalty(Cell c) const { return contains(c) && penalty_[state_of(c)] != 0; }

Cell GridWorld::move(Cell c, GridAction a) const {
  Cell next = c;
  switch (a) {
    case GridAction::up: ++next.y; break;
    case GridAction::down: --next.y; break;
    case GridAction::left: --next.x; break;
    case GridAction::right: ++next.x; break;
  }
  return contains(next) ? next : c;
}

double GridWorld::reward(Cell landed) const {
  if (is_goal(landed)) return config_.rewards.goal;
  if (is_penalty(landed)) return config_.rewards.penalty;
  return config_.rewards.step;
}

DogGrid build_dog_grid(const GridConfig& config) {
  GridWorld world(config);
  Mdp::Builder builder(world.num_states(), kGridActions, config.gamma);
  for (StateId s = 0; s < world.num_states(); ++s) {
    const Cell c = world.cell_of(s);
    if (world.is_goal(c)) {
      builder.set_terminal(s);
      continue;
    }
    for (ActionId a = 0; a < kGridActions; ++a) {
      const Cell next = world.move(c, static_cast<GridAction>(a));
      builder.add_outcome(s, a, world.state_of(next), 1.0, world.reward(next));
    }
  }
  return {builder.build(), std::move(world)};
}

GridConfig parse_grid_map(std::string_view text, const GridRewards& rewards, double gamma) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw std::invalid_argument("grid map is empty");

  GridConfig config;
  config.rewards = rewards;
  config.gamma = gamma;
  config.penalty_cells.clear();
  config.height = static_cast<int>(rows.size());
  config.width = static_cast<int>(rows.front().size());
  int starts = 0;
  int goals = 0;
  for (int r = 0; r < config.height; ++r) {
    const std::string& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != config.width) throw std::invalid_argument("grid map rows differ in width");
    const int y = config.height - 1 - r;
    for (int x = 0; x < config.width; ++x) {
      switch (row[static_cast<std::size_t>(x)]) {
        case 'S': config.start = {x, y}; ++starts; break;
        case 'G': config.goal = {x, y}; ++goals; break;
        case 'X': config.penalty_cells.push_back({x, y}); break;
        case '.': break;
        default: throw std::invalid_argument(std::string("unexpected map character '") + row[static_cast<std::size_t>(x)] + "'");
      }
    }
  }
  if (starts != 1 || goals != 1) throw std::invalid_argument("grid map needs exactly one S and one G");
  std::sort(config.penalty_cells.begin(), config.penalty_cells.end());
  config.validate();
  return config;
}

GridConfig load_grid_map(const std::string& path, const GridRewards& rewards, double gamma) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open grid map " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid_map(buf.str(), rewards, gamma);
}

std::string format_grid_map(const GridConfig& config) {
  config.validate();
  std::string out;
  for (int y = config.height - 1; y >= 0; --y) {
    for (int x = 0; x < config.width; ++x) {
      const Cell c{x, y};
      char ch = '.';
      if (std::find(config.penalty_cells.begin(), config.penalty_cells.end(), c) != config.penalty_cells.end()) ch = 'X';
      if (c == config.start) ch = 'S';
      if (c == config.goal) ch = 'G';
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

DogBehavior parse_dog_behavior(std::string_view name) {
  if (name == "bad") return DogBehavior::bad;
  if (name == "alright") return DogBehavior::alright;
  if (name == "good") return DogBehavior::good;
  throw std::invalid_argument("unknown dog behaviour '" + std::string(name) + "'");
}

std::string_view to_string(DogBehavior kind) {
  switch (kind) {
    case DogBehavior::bad: return "bad";
    case DogBehavior::alright: return "alright";
    case DogBehavior::good: return "good";
  }
  return "?";
}

TabularPolicy scripted_dog_policy(const GridWorld& world, DogBehavior kind) {
  const std::size_t n = world.num_states();
  const auto& cfg = world.config();

  // Cost of entering each cell; the shortest-cost route defines the behaviour.
  std::vector<double> entry_cost(n, 1.0);
  if (kind != DogBehavior::bad) {
    const double penalty_cost = kind == DogBehavior::good ? 1e3 : 1e6;
    for (StateId s = 0; s < n; ++s) {
      const Cell c = world.cell_of(s);
      if (world.is_penalty(c)) {
        entry_cost[s] = penalty_cost;
      } else if (kind == DogBehavior::alright && c != cfg.start && c != cfg.goal) {
        for (ActionId a = 0; a < kGridActions; ++a) {
          const Cell nb = world.move(c, static_cast<GridAction>(a));
          if (world.is_penalty(nb)) entry_cost[s] = 1e3;
        }
      }
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost_to_go(n, inf);
  cost_to_go[world.goal_state()] = 0.0;
  auto step_cost = [&](StateId s, ActionId a) {
    const StateId next = world.state_of(world.move(world.cell_of(s), static_cast<GridAction>(a)));
    return next == s ? inf : entry_cost[next] + cost_to_go[next];
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (s == world.goal_state()) continue;
      for (ActionId a = 0; a < kGridActions; ++a) {
        const double c = step_cost(s, a);
        if (c < cost_to_go[s]) {
          cost_to_go[s] = c;
          changed = true;
        }
      }
    }
  }

  std::vector<ActionId> actions(n, 0);
  for (StateId s = 0; s < n; ++s) {
    if (s == world.goal_state()) continue;
    double best = inf;
    for (ActionId a = 0; a < kGridActions; ++a) {
      const double c = step_cost(s, a);
      if (c < best) {
        best = c;
        actions[s] = a;
      }
    }
  }
  return TabularPolicy::deterministic(actions, kGridActions);
}

std::vector<Cell> rollout_path(const GridWorld& world, const TabularPolicy& policy, Cell from, std::size_t max_steps) {
  std::vector<Cell> path{from};
  Cell c = from;
  for (std::size_t i = 0; i < max_steps && !world.is_goal(c); ++i) {
    const auto row = policy.row(world.state_of(c));
    const auto a = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
    c = world.move(c, static_cast<GridAction>(a));
    path.push_back(c);
  }
  return path;
}

}  // namespace coachlab
