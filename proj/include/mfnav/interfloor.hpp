#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "planner.hpp"
#include "semantic_map.hpp"

namespace mfnav {

enum class Phase { Inactive, RoutingToStairs, Traversing, Settling };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Inactive: return "inactive";
    case Phase::RoutingToStairs: return "routing_to_stairs";
    case Phase::Traversing: return "traversing";
    case Phase::Settling: return "settling";
  }
  return "?";
}

struct InterfloorConfig {
  int seal_radius = 2;       // r_seal
  int deadline_steps = 200;  // forced reset after activation
  int settle_steps = 10;
  int cooldown_steps = 100;  // MFNP disabled after a reset
  int abort_cooldown = 50;   // MFNP disabled after a failed activation
};

struct InterfloorState {
  Phase phase = Phase::Inactive;
  int entered_at = -1;
  int deadline = -1;
  Cell stair_goal;
  std::optional<Cell> entry_cell;
  std::vector<Cell> entrance_cells;  // sealed cells, nonempty iff traversing
  std::optional<Cell> exit_waypoint;
  int settle_started = -1;
  int cooldown_until = 0;

  bool active() const { return phase != Phase::Inactive; }
  bool mfnp_allowed(int t) const { return phase == Phase::Inactive && t >= cooldown_until; }
};

enum class ActivationResult { Activated, Refused, Aborted };

/// Routes to the stair-channel cell with the smallest arrival time from the
/// agent. Refused unless inactive and out of cooldown; aborted (with a short
/// cooldown) when no stair cell is reachable.
inline ActivationResult activate(const SemanticMap& map, InterfloorState& state, int t,
                                 const InterfloorConfig& cfg = {}) {
  if (state.phase != Phase::Inactive || t < state.cooldown_until || map.stair_count() == 0)
    return ActivationResult::Refused;
  const Cell agent = map.agent_cell();
  const DistanceField field = solve_fmm(map, std::span<const Cell>(&agent, 1), {false, true});
  const Rect r = field.roi();
  std::optional<Cell> best;
  double best_t = kInf;
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x) {
      const Cell c{x, y};
      if (map.stair(c) && field[c] < best_t) {
        best_t = field[c];
        best = c;
      }
    }
  if (!best) {
    state.cooldown_until = t + cfg.abort_cooldown;
    return ActivationResult::Aborted;
  }
  state = InterfloorState{};
  state.phase = Phase::RoutingToStairs;
  state.entered_at = t;
  state.deadline = t + cfg.deadline_steps;
  state.stair_goal = *best;
  return ActivationResult::Activated;
}

/// Stair cell farthest from `entry` along the 4-connected stair region
/// containing it (BFS order, ties to the smaller cell).
inline Cell farthest_stair_cell(const SemanticMap& map, Cell entry) {
  const Rect r = map.explored_bounds().inflated(1).clipped(map.width(), map.height());
  Grid<int> dist(r.width(), r.height(), -1);
  auto loc = [&](Cell c) { return Cell{c.x - r.x0, c.y - r.y0}; };
  std::deque<Cell> queue{entry};
  dist[loc(entry)] = 0;
  Cell best = entry;
  int best_d = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int d = dist[loc(c)];
    if (d > best_d || (d == best_d && c < best)) {
      best_d = d;
      best = c;
    }
    for (Cell o : kNeighbors4) {
      const Cell n = c + o;
      if (!r.contains(n) || dist[loc(n)] >= 0 || !map.stair(n)) continue;
      dist[loc(n)] = d + 1;
      queue.push_back(n);
    }
  }
  return best;
}

/// Cells sealed behind an agent that entered the stairs at `entry`: the
/// Chebyshev disk of radius `r` around the entry, minus the stair cells
/// ahead of it and the agent's own cell.
inline std::vector<Cell> seal_footprint(const SemanticMap& map, Cell entry, Cell agent, int r) {
  std::vector<Cell> out;
  for (int y = entry.y - r; y <= entry.y + r; ++y)
    for (int x = entry.x - r; x <= entry.x + r; ++x) {
      const Cell c{x, y};
      if (!map.in_bounds(c) || c == agent) continue;
      if (c != entry && map.stair(c)) continue;
      out.push_back(c);
    }
  return out;
}

inline bool has_free_neighbor(const SemanticMap& map, Cell agent, const std::vector<Cell>& extra_blocked) {
  for (Cell d : kNeighbors4) {
    const Cell n = agent + d;
    if (!map.in_bounds(n) || map.obstacle(n)) continue;
    if (std::find(extra_blocked.begin(), extra_blocked.end(), n) != extra_blocked.end()) continue;
    return true;
  }
  return false;
}

/// Dilates the stair entrance by the seal radius and writes it into the
/// obstacle channel so the planner cannot route back out. The radius is
/// shrunk until the agent keeps a free neighbor; returns false when even the
/// bare entry cell would enclose it.
inline bool seal_entrance(SemanticMap& map, InterfloorState& state, const InterfloorConfig& cfg = {}) {
  const Cell agent = map.agent_cell();
  if (state.phase != Phase::RoutingToStairs || !state.entry_cell || !map.stair(agent))
    throw std::logic_error("seal_entrance: agent must stand on the stairs while routing");
  for (int r = cfg.seal_radius; r >= 0; --r) {
    auto cells = seal_footprint(map, *state.entry_cell, agent, r);
    if (cells.empty() || !has_free_neighbor(map, agent, cells)) continue;
    map.seal(cells);
    state.entrance_cells = std::move(cells);
    state.phase = Phase::Traversing;
    state.exit_waypoint = farthest_stair_cell(map, *state.entry_cell);
    return true;
  }
  return false;
}

struct Directive {
  enum class Kind { None, NavigateTo, LookAround, Reset };
  Kind kind = Kind::None;
  Cell target;
};

/// Resets the map on the agent's cell and disables MFNP for the cooldown.
inline void finish_interfloor(SemanticMap& map, InterfloorState& state, int t, const InterfloorConfig& cfg) {
  map.reset(map.to_world(map.agent_cell()));
  state = InterfloorState{};
  state.cooldown_until = t + cfg.cooldown_steps;
}

/// Advances the traversal state machine by one timestep.
inline Directive tick(SemanticMap& map, InterfloorState& state, int t, const InterfloorConfig& cfg = {}) {
  if (state.phase == Phase::Inactive) return {};
  const Cell agent = map.agent_cell();
  if (t >= state.deadline) {
    finish_interfloor(map, state, t, cfg);
    return {Directive::Kind::Reset, {}};
  }

  switch (state.phase) {
    case Phase::RoutingToStairs:
      if (map.stair(agent)) {
        if (!state.entry_cell) {
          state.entry_cell = agent;
          state.exit_waypoint = farthest_stair_cell(map, agent);
        } else if (agent != *state.entry_cell) {
          if (!seal_entrance(map, state, cfg)) {
            finish_interfloor(map, state, t, cfg);
            return {Directive::Kind::Reset, {}};
          }
        }
        if (state.phase == Phase::Traversing || *state.exit_waypoint != agent)
          return {Directive::Kind::NavigateTo, *state.exit_waypoint};
      }
      return {Directive::Kind::NavigateTo, state.stair_goal};

    case Phase::Traversing:
      state.exit_waypoint = farthest_stair_cell(map, *state.entry_cell);
      if (agent == *state.exit_waypoint) {
        state.phase = Phase::Settling;
        state.settle_started = t;
        return {Directive::Kind::LookAround, {}};
      }
      return {Directive::Kind::NavigateTo, *state.exit_waypoint};

    case Phase::Settling:
      if (t - state.settle_started >= cfg.settle_steps) {
        finish_interfloor(map, state, t, cfg);
        return {Directive::Kind::Reset, {}};
      }
      return {Directive::Kind::LookAround, {}};

    case Phase::Inactive: break;
  }
  return {};
}

}  // namespace mfnav
