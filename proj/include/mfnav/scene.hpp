#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grid.hpp"

namespace mfnav {

/// Raised when a scene or episode violates one of its structural invariants.
class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FloorCell {
  int floor = 0;
  Cell cell;

  friend constexpr bool operator==(const FloorCell&, const FloorCell&) = default;
  friend constexpr auto operator<=>(const FloorCell&, const FloorCell&) = default;
};

/// Occupancy of one floor; true marks an obstacle.
using FloorGrid = Grid<std::uint8_t>;

/// A stair connecting two adjacent floors. The corridor is the projection of
/// the stair onto the map plane; it starts at the lower endpoint cell and
/// ends at the upper endpoint cell. Its cells are tagged "stair" on both
/// floors.
struct Stairwell {
  FloorCell lower;
  FloorCell upper;
  std::vector<Cell> corridor;
};

struct PlacedObject {
  int category = 0;
  int floor = 0;
  Cell cell;
};

/// Immutable ground-truth multi-floor world.
class Scene {
 public:
  Scene() = default;

  Scene(std::vector<FloorGrid> floors, std::vector<Stairwell> stairwells, std::vector<PlacedObject> objects,
        std::vector<std::string> category_names, double cell_size_m = 0.25)
      : floors_(std::move(floors)),
        stairwells_(std::move(stairwells)),
        objects_(std::move(objects)),
        category_names_(std::move(category_names)),
        cell_size_m_(cell_size_m) {
    validate_and_index();
  }

  int floor_count() const { return int(floors_.size()); }
  int width() const { return floors_.empty() ? 0 : floors_.front().width(); }
  int height() const { return floors_.empty() ? 0 : floors_.front().height(); }
  int category_count() const { return int(category_names_.size()); }
  double cell_size_m() const { return cell_size_m_; }

  const std::vector<FloorGrid>& floors() const { return floors_; }
  const FloorGrid& floor(int f) const { return floors_.at(std::size_t(f)); }
  const std::vector<Stairwell>& stairwells() const { return stairwells_; }
  const std::vector<PlacedObject>& objects() const { return objects_; }
  const std::vector<std::string>& category_names() const { return category_names_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width() && c.y < height(); }
  bool is_obstacle(int f, Cell c) const { return floors_[std::size_t(f)][c] != 0; }

  /// Stairwell whose footprint covers `c` on floor `f`, or -1.
  int stair_at(int f, Cell c) const { return stair_index_[std::size_t(f)][c]; }
  bool is_stair(int f, Cell c) const { return stair_at(f, c) >= 0; }

  /// Ground-truth category of the object at `c` on floor `f`, or -1.
  int object_at(int f, Cell c) const { return object_index_[std::size_t(f)][c]; }

  /// True when an agent on floor `f` may stand on `c` without being in a
  /// stair traversal: free, and either off any stair footprint or the
  /// endpoint of that stair on this floor.
  bool walkable(int f, Cell c) const {
    if (f < 0 || f >= floor_count() || !in_bounds(c) || is_obstacle(f, c)) return false;
    const int s = stair_at(f, c);
    if (s < 0) return true;
    const auto& sw = stairwells_[std::size_t(s)];
    return (sw.lower.floor == f && sw.lower.cell == c) || (sw.upper.floor == f && sw.upper.cell == c);
  }

  std::vector<FloorCell> object_cells(int category) const {
    std::vector<FloorCell> out;
    for (const auto& o : objects_) {
      if (o.category == category) out.push_back({o.floor, o.cell});
    }
    return out;
  }

  friend bool operator==(const Scene& a, const Scene& b) {
    return a.floors_ == b.floors_ && a.cell_size_m_ == b.cell_size_m_ && a.category_names_ == b.category_names_ &&
           a.objects_.size() == b.objects_.size() && a.stairwells_.size() == b.stairwells_.size() &&
           std::equal(a.objects_.begin(), a.objects_.end(), b.objects_.begin(),
                      [](const PlacedObject& x, const PlacedObject& y) {
                        return x.category == y.category && x.floor == y.floor && x.cell == y.cell;
                      }) &&
           std::equal(a.stairwells_.begin(), a.stairwells_.end(), b.stairwells_.begin(),
                      [](const Stairwell& x, const Stairwell& y) {
                        return x.lower == y.lower && x.upper == y.upper && x.corridor == y.corridor;
                      });
  }

 private:
  static std::string at_str(int f, Cell c) { return "floor " + std::to_string(f) + " cell " + to_string(c); }

  void validate_and_index() {
    if (floors_.empty()) throw SceneError("scene has no floors");
    if (floors_.size() > 3) throw SceneError("scene has more than 3 floors");
    if (!(cell_size_m_ > 0.0)) throw SceneError("cell_size_m must be positive");
    const int w = floors_.front().width(), h = floors_.front().height();
    if (w <= 0 || h <= 0) throw SceneError("floor extent must be positive");
    for (std::size_t f = 0; f < floors_.size(); ++f) {
      if (floors_[f].width() != w || floors_[f].height() != h)
        throw SceneError("floor " + std::to_string(f) + " extent differs from floor 0");
    }

    stair_index_.assign(floors_.size(), Grid<std::int16_t>(w, h, -1));
    object_index_.assign(floors_.size(), Grid<std::int16_t>(w, h, -1));

    for (std::size_t s = 0; s < stairwells_.size(); ++s) {
      const auto& sw = stairwells_[s];
      const std::string tag = "stairwell " + std::to_string(s) + ": ";
      for (const auto& end : {sw.lower, sw.upper}) {
        if (end.floor < 0 || end.floor >= floor_count()) throw SceneError(tag + "endpoint floor out of range");
        if (!in_bounds(end.cell)) throw SceneError(tag + "endpoint out of bounds at " + at_str(end.floor, end.cell));
        if (is_obstacle(end.floor, end.cell))
          throw SceneError(tag + "endpoint is not free at " + at_str(end.floor, end.cell));
      }
      if (sw.upper.floor - sw.lower.floor != 1) throw SceneError(tag + "endpoint floors must differ by exactly 1");
      if (sw.corridor.size() < 2) throw SceneError(tag + "corridor needs at least 2 cells");
      if (sw.corridor.front() != sw.lower.cell || sw.corridor.back() != sw.upper.cell)
        throw SceneError(tag + "corridor must start at the lower and end at the upper endpoint");
      for (std::size_t i = 0; i < sw.corridor.size(); ++i) {
        const Cell c = sw.corridor[i];
        if (!in_bounds(c)) throw SceneError(tag + "corridor cell out of bounds at " + to_string(c));
        if (i > 0 && manhattan(c, sw.corridor[i - 1]) != 1)
          throw SceneError(tag + "corridor not 4-connected at " + to_string(c));
        for (int f : {sw.lower.floor, sw.upper.floor}) {
          if (is_obstacle(f, c)) throw SceneError(tag + "corridor cell is an obstacle at " + at_str(f, c));
          auto& slot = stair_index_[std::size_t(f)][c];
          if (slot >= 0 && slot != std::int16_t(s))
            throw SceneError(tag + "footprint overlaps another stairwell at " + at_str(f, c));
          slot = std::int16_t(s);
        }
      }
    }

    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const auto& o = objects_[i];
      const std::string tag = "object " + std::to_string(i) + ": ";
      if (o.category < 0 || o.category >= category_count()) throw SceneError(tag + "category out of range");
      if (o.floor < 0 || o.floor >= floor_count()) throw SceneError(tag + "floor out of range");
      if (!in_bounds(o.cell)) throw SceneError(tag + "cell out of bounds at " + at_str(o.floor, o.cell));
      if (is_obstacle(o.floor, o.cell)) throw SceneError(tag + "occupies an obstacle at " + at_str(o.floor, o.cell));
      auto& slot = object_index_[std::size_t(o.floor)][o.cell];
      if (slot >= 0) throw SceneError(tag + "shares a cell with another object at " + at_str(o.floor, o.cell));
      slot = std::int16_t(o.category);
    }
  }

  std::vector<FloorGrid> floors_;
  std::vector<Stairwell> stairwells_;
  std::vector<PlacedObject> objects_;
  std::vector<std::string> category_names_;
  double cell_size_m_ = 0.25;
  std::vector<Grid<std::int16_t>> stair_index_;
  std::vector<Grid<std::int16_t>> object_index_;
};

// ---------------------------------------------------------------------------
// Agent, actions, episodes

enum class Action : std::uint8_t { MoveForward, TurnLeft, TurnRight, LookUp, LookDown, Stop };

inline const char* action_name(Action a) {
  static constexpr const char* names[] = {"move_forward", "turn_left", "turn_right", "look_up", "look_down", "stop"};
  return names[int(a)];
}

/// In-progress stair traversal: the agent sits on corridor[index] and every
/// forward step advances `direction` (+1 upward, -1 downward).
struct StairTraversal {
  int stairwell = -1;
  int index = 0;
  int direction = 1;

  friend bool operator==(const StairTraversal&, const StairTraversal&) = default;
};

struct AgentState {
  int floor = 0;
  Cell cell;
  Heading heading = Heading::North;
  std::optional<StairTraversal> stair;
  int timestep = 0;
  bool terminated = false;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct StepOutcome {
  bool moved = false;
  bool collision = false;
  bool floor_changed = false;
  bool stopped = false;
  bool timed_out = false;
};

struct EpisodeSpec {
  std::string scene_id;
  int start_floor = 0;
  Cell start_cell;
  Heading start_heading = Heading::North;
  int target_category = 0;
  int max_steps = 500;
  /// Success radius. The benchmark convention is 1.0 m; 0.1 m is the
  /// stricter alternative.
  double success_dist_m = 1.0;

  AgentState initial_state() const { return AgentState{start_floor, start_cell, start_heading, std::nullopt, 0, false}; }
};

inline void validate_episode(const Scene& scene, const EpisodeSpec& spec) {
  if (spec.max_steps <= 0) throw SceneError("episode max_steps must be positive");
  if (!(spec.success_dist_m > 0.0)) throw SceneError("episode success_dist_m must be positive");
  if (spec.target_category < 0 || spec.target_category >= scene.category_count())
    throw SceneError("episode target category out of range");
  if (scene.object_cells(spec.target_category).empty())
    throw SceneError("episode target category has no instance in the scene");
  if (!scene.walkable(spec.start_floor, spec.start_cell))
    throw SceneError("episode start " + to_string(spec.start_cell) + " is not walkable");
}

/// Advances the world by one action. Invalid motion is a no-op that sets
/// `collision`.
inline StepOutcome step(const Scene& scene, AgentState& agent, Action action,
                        int max_steps = std::numeric_limits<int>::max()) {
  if (agent.terminated) throw std::logic_error("step called on a terminated episode");
  StepOutcome out;

  switch (action) {
    case Action::TurnLeft: agent.heading = turned_left(agent.heading); break;
    case Action::TurnRight: agent.heading = turned_right(agent.heading); break;
    case Action::LookUp:
    case Action::LookDown: break;  // no pitch in a 2D world
    case Action::Stop:
      agent.terminated = true;
      out.stopped = true;
      break;
    case Action::MoveForward: {
      if (agent.stair) {
        auto& tr = *agent.stair;
        const auto& sw = scene.stairwells()[std::size_t(tr.stairwell)];
        const Cell prev = sw.corridor[std::size_t(tr.index)];
        tr.index += tr.direction;
        agent.cell = sw.corridor[std::size_t(tr.index)];
        if (auto h = heading_of(agent.cell - prev)) agent.heading = *h;
        out.moved = true;
        const int last = int(sw.corridor.size()) - 1;
        if (tr.index == (tr.direction > 0 ? last : 0)) {
          agent.floor = tr.direction > 0 ? sw.upper.floor : sw.lower.floor;
          agent.stair.reset();
          out.floor_changed = true;
        }
        break;
      }
      const Cell dest = agent.cell + offset(agent.heading);
      const int s = scene.in_bounds(agent.cell) ? scene.stair_at(agent.floor, agent.cell) : -1;
      if (s >= 0) {
        const auto& sw = scene.stairwells()[std::size_t(s)];
        const int last = int(sw.corridor.size()) - 1;
        const bool at_lower = sw.lower.floor == agent.floor && sw.lower.cell == agent.cell;
        const bool at_upper = sw.upper.floor == agent.floor && sw.upper.cell == agent.cell;
        if ((at_lower && dest == sw.corridor[1]) || (at_upper && dest == sw.corridor[std::size_t(last - 1)])) {
          const int dir = at_lower ? 1 : -1;
          const int idx = at_lower ? 1 : last - 1;
          agent.cell = dest;
          out.moved = true;
          if (idx == (dir > 0 ? last : 0)) {
            agent.floor = dir > 0 ? sw.upper.floor : sw.lower.floor;
            out.floor_changed = true;
          } else {
            agent.stair = StairTraversal{s, idx, dir};
          }
          break;
        }
      }
      if (scene.walkable(agent.floor, dest)) {
        agent.cell = dest;
        out.moved = true;
      } else {
        out.collision = true;
      }
      break;
    }
  }

  ++agent.timestep;
  if (!agent.terminated && agent.timestep >= max_steps) {
    agent.terminated = true;
    out.timed_out = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observation

struct SensorModel {
  int range_cells = 20;
  /// Full field-of-view angle; only 90 is exact on the integer wedge test.
  double fov_deg = 90.0;
};

struct NoiseModel {
  double noise_rate = 0.0;
  double correct_conf_lo = 0.6, correct_conf_hi = 1.0;
  double wrong_conf_lo = 0.2, wrong_conf_hi = 0.7;
};

struct VisibleCell {
  Cell cell;
  bool occupied = false;
  std::optional<int> reported_category;
  double seg_confidence = 0.0;
  bool is_stair = false;
};

struct Observation {
  int floor = 0;
  Cell cell;
  Heading heading = Heading::North;
  int timestep = 0;
  std::vector<VisibleCell> visible;
};

/// Every cell strictly between `from` and `to` on the Bresenham line is free.
inline bool line_of_sight(const FloorGrid& grid, Cell from, Cell to) {
  int x = from.x, y = from.y;
  const int dx = std::abs(to.x - from.x), dy = -std::abs(to.y - from.y);
  const int sx = from.x < to.x ? 1 : -1, sy = from.y < to.y ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (x == to.x && y == to.y) return true;
    if (!(x == from.x && y == from.y) && grid[{x, y}] != 0) return false;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

inline bool in_view(Cell agent, Heading heading, Cell target, const SensorModel& sensor) {
  const Cell v = target - agent;
  if (v.x * v.x + v.y * v.y > sensor.range_cells * sensor.range_cells) return false;
  const Cell f = offset(heading);
  const int forward = v.x * f.x + v.y * f.y;
  const int lateral = v.x * f.y - v.y * f.x;
  if (forward == 0 && lateral == 0) return true;
  if (sensor.fov_deg == 90.0) return forward >= std::abs(lateral);
  const double half = sensor.fov_deg * 0.5 * 3.14159265358979323846 / 180.0;
  return std::atan2(std::abs(double(lateral)), double(forward)) <= half + 1e-12;
}

/// Simulated perception. Labels object cells with their true category with
/// probability 1 - noise_rate, otherwise with a uniformly drawn other
/// category; correct labels draw their confidence from a higher band.
template <typename Rng>
Observation observe(const Scene& scene, const AgentState& agent, const NoiseModel& noise, Rng& rng,
                    const SensorModel& sensor = {}) {
  Observation obs{agent.floor, agent.cell, agent.heading, agent.timestep, {}};
  const FloorGrid& grid = scene.floor(agent.floor);
  const int r = sensor.range_cells;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int y = std::max(0, agent.cell.y - r); y <= std::min(scene.height() - 1, agent.cell.y + r); ++y) {
    for (int x = std::max(0, agent.cell.x - r); x <= std::min(scene.width() - 1, agent.cell.x + r); ++x) {
      const Cell c{x, y};
      if (!in_view(agent.cell, agent.heading, c, sensor) || !line_of_sight(grid, agent.cell, c)) continue;
      VisibleCell vc;
      vc.cell = c;
      vc.occupied = grid[c] != 0;
      vc.is_stair = scene.is_stair(agent.floor, c);
      const int truth = scene.object_at(agent.floor, c);
      if (truth >= 0) {
        const bool wrong = scene.category_count() > 1 && unit(rng) < noise.noise_rate;
        if (wrong) {
          std::uniform_int_distribution<int> pick(0, scene.category_count() - 2);
          int other = pick(rng);
          if (other >= truth) ++other;
          vc.reported_category = other;
          vc.seg_confidence = noise.wrong_conf_lo + (noise.wrong_conf_hi - noise.wrong_conf_lo) * unit(rng);
        } else {
          vc.reported_category = truth;
          vc.seg_confidence = noise.correct_conf_lo + (noise.correct_conf_hi - noise.correct_conf_lo) * unit(rng);
        }
      }
      obs.visible.push_back(vc);
    }
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Oracle geodesics over the multi-floor graph

namespace detail {

/// Node numbering: floor cells first, then one node per interior corridor
/// cell of every stairwell.
class MultiFloorGraph {
 public:
  explicit MultiFloorGraph(const Scene& scene) : scene_(scene) {
    floor_nodes_ = scene.floor_count() * scene.width() * scene.height();
    int next = floor_nodes_;
    for (const auto& sw : scene.stairwells()) {
      stair_base_.push_back(next);
      next += int(sw.corridor.size()) - 2;
    }
    node_count_ = next;
  }

  int node_count() const { return node_count_; }

  int floor_node(int f, Cell c) const { return (f * scene_.height() + c.y) * scene_.width() + c.x; }

  int node_of(const AgentState& a) const {
    if (a.stair) return stair_node(a.stair->stairwell, a.stair->index);
    return floor_node(a.floor, a.cell);
  }

  /// Corridor position `i` of stairwell `s`; endpoints map to floor nodes.
  int stair_node(int s, int i) const {
    const auto& sw = scene_.stairwells()[std::size_t(s)];
    if (i == 0) return floor_node(sw.lower.floor, sw.lower.cell);
    if (i == int(sw.corridor.size()) - 1) return floor_node(sw.upper.floor, sw.upper.cell);
    return stair_base_[std::size_t(s)] + i - 1;
  }

  template <typename F>
  void for_each_neighbor(int node, F&& visit) const {
    if (node >= floor_nodes_) {
      std::size_t s = 0;
      while (s + 1 < stair_base_.size() && node >= stair_base_[s + 1]) ++s;
      const int i = node - stair_base_[s] + 1;
      visit(stair_node(int(s), i - 1));
      visit(stair_node(int(s), i + 1));
      return;
    }
    const int per_floor = scene_.width() * scene_.height();
    const int f = node / per_floor;
    const Cell c{(node % per_floor) % scene_.width(), (node % per_floor) / scene_.width()};
    if (!scene_.walkable(f, c)) return;
    for (Cell d : kNeighbors4) {
      const Cell n = c + d;
      if (scene_.walkable(f, n)) visit(floor_node(f, n));
    }
    const int s = scene_.stair_at(f, c);
    if (s >= 0) {
      const auto& sw = scene_.stairwells()[std::size_t(s)];
      const int last = int(sw.corridor.size()) - 1;
      if (sw.lower.floor == f && sw.lower.cell == c) visit(stair_node(s, 1));
      if (sw.upper.floor == f && sw.upper.cell == c) visit(stair_node(s, last - 1));
    }
  }

 private:
  const Scene& scene_;
  int floor_nodes_ = 0;
  int node_count_ = 0;
  std::vector<int> stair_base_;
};

}  // namespace detail

/// Shortest walking distance in meters from the agent's pose to the nearest
/// member of `targets` over the multi-floor graph; kInf when unreachable.
inline double oracle_geodesic(const Scene& scene, const AgentState& from, const std::vector<FloorCell>& targets) {
  if (targets.empty()) throw std::invalid_argument("oracle_geodesic: empty target set");
  const detail::MultiFloorGraph graph(scene);
  std::vector<char> is_target(std::size_t(graph.node_count()), 0);
  for (const auto& t : targets) {
    if (t.floor >= 0 && t.floor < scene.floor_count() && scene.in_bounds(t.cell))
      is_target[std::size_t(graph.floor_node(t.floor, t.cell))] = 1;
  }
  const double w = scene.cell_size_m();
  std::vector<double> dist(std::size_t(graph.node_count()), kInf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const int src = graph.node_of(from);
  dist[std::size_t(src)] = 0.0;
  open.push({0.0, src});
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (d > dist[std::size_t(u)]) continue;
    if (is_target[std::size_t(u)]) return d;
    graph.for_each_neighbor(u, [&](int v) {
      const double nd = d + w;
      if (nd < dist[std::size_t(v)]) {
        dist[std::size_t(v)] = nd;
        open.push({nd, v});
      }
    });
  }
  return kInf;
}

inline double oracle_geodesic(const Scene& scene, const AgentState& from, int target_category) {
  return oracle_geodesic(scene, from, scene.object_cells(target_category));
}

/// Straight-line success test against every instance of the target category
/// on the agent's floor.
inline bool within_success_radius(const Scene& scene, const AgentState& agent, int target_category,
                                  double success_dist_m) {
  for (const auto& o : scene.objects()) {
    if (o.category == target_category && o.floor == agent.floor &&
        euclidean(o.cell, agent.cell) * scene.cell_size_m() < success_dist_m)
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Scene file I/O

inline nlohmann::json scene_to_json(const Scene& scene) {
  using nlohmann::json;
  json j;
  j["cell_size_m"] = scene.cell_size_m();
  json floors = json::array();
  for (const auto& g : scene.floors()) {
    json obstacles = json::array();
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x)
        if (g[{x, y}]) obstacles.push_back({x, y});
    floors.push_back({{"width", g.width()}, {"height", g.height()}, {"obstacles", std::move(obstacles)}});
  }
  j["floors"] = std::move(floors);
  json stairs = json::array();
  for (const auto& sw : scene.stairwells()) {
    json corridor = json::array();
    for (Cell c : sw.corridor) corridor.push_back({c.x, c.y});
    stairs.push_back({{"lower", {{"floor", sw.lower.floor}, {"cell", {sw.lower.cell.x, sw.lower.cell.y}}}},
                      {"upper", {{"floor", sw.upper.floor}, {"cell", {sw.upper.cell.x, sw.upper.cell.y}}}},
                      {"corridor", std::move(corridor)}});
  }
  j["stairwells"] = std::move(stairs);
  json objects = json::array();
  for (const auto& o : scene.objects())
    objects.push_back({{"category", o.category}, {"floor", o.floor}, {"cell", {o.cell.x, o.cell.y}}});
  j["objects"] = std::move(objects);
  j["category_names"] = scene.category_names();
  return j;
}

namespace detail {

inline Cell cell_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw SceneError(where + ": expected [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace detail

/// Parses and validates a scene document; the first violated invariant is
/// reported with its coordinates.
inline Scene scene_from_json(const nlohmann::json& j) {
  try {
    std::vector<FloorGrid> floors;
    for (std::size_t f = 0; f < j.at("floors").size(); ++f) {
      const auto& jf = j.at("floors")[f];
      FloorGrid g(jf.at("width").get<int>(), jf.at("height").get<int>(), 0);
      for (const auto& ob : jf.at("obstacles")) {
        const Cell c = detail::cell_from_json(ob, "floor " + std::to_string(f) + " obstacle");
        if (!g.in_bounds(c)) throw SceneError("floor " + std::to_string(f) + " obstacle out of bounds at " + to_string(c));
        g[c] = 1;
      }
      floors.push_back(std::move(g));
    }
    std::vector<Stairwell> stairs;
    for (const auto& js : j.value("stairwells", nlohmann::json::array())) {
      Stairwell sw;
      sw.lower = {js.at("lower").at("floor").get<int>(), detail::cell_from_json(js.at("lower").at("cell"), "stair lower")};
      sw.upper = {js.at("upper").at("floor").get<int>(), detail::cell_from_json(js.at("upper").at("cell"), "stair upper")};
      for (const auto& c : js.at("corridor")) sw.corridor.push_back(detail::cell_from_json(c, "stair corridor"));
      stairs.push_back(std::move(sw));
    }
    std::vector<PlacedObject> objects;
    for (const auto& jo : j.value("objects", nlohmann::json::array())) {
      objects.push_back({jo.at("category").get<int>(), jo.at("floor").get<int>(),
                         detail::cell_from_json(jo.at("cell"), "object cell")});
    }
    return Scene(std::move(floors), std::move(stairs), std::move(objects),
                 j.at("category_names").get<std::vector<std::string>>(), j.value("cell_size_m", 0.25));
  } catch (const nlohmann::json::exception& e) {
    throw SceneError(std::string("malformed scene document: ") + e.what());
  }
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SceneError("cannot parse scene file " + path + ": " + e.what());
  }
  return scene_from_json(j);
}

inline void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SceneError("cannot write scene file " + path);
  out << scene_to_json(scene).dump() << '\n';
}

}  // namespace mfnav
