#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "scene.hpp"

namespace mfnav {

class InfeasibleParams : public SceneError {
 public:
  explicit InfeasibleParams(const std::string& what) : SceneError("infeasible_params: " + what) {}
};

struct SceneGenParams {
  int floors = 2;
  int width = 40;
  int height = 40;
  int rooms = 4;  // per floor
  /// Objects per walkable cell.
  double object_density = 0.01;
  int stairwells = 1;  // per pair of adjacent floors
  int categories = 6;
  /// Categories reserved to a single floor; floor f owns ids
  /// [f*k, (f+1)*k). The remaining ids may appear on any floor.
  int exclusive_categories_per_floor = 0;
  int corridor_width = 5;
  int stair_length = 6;
  double cell_size_m = 0.25;
};

inline void to_json(nlohmann::json& j, const SceneGenParams& p) {
  j = {{"floors", p.floors},
       {"width", p.width},
       {"height", p.height},
       {"rooms", p.rooms},
       {"object_density", p.object_density},
       {"stairwells", p.stairwells},
       {"categories", p.categories},
       {"exclusive_categories_per_floor", p.exclusive_categories_per_floor},
       {"corridor_width", p.corridor_width},
       {"stair_length", p.stair_length},
       {"cell_size_m", p.cell_size_m}};
}

inline void from_json(const nlohmann::json& j, SceneGenParams& p) {
  const SceneGenParams d;
  p.floors = j.value("floors", d.floors);
  p.width = j.value("width", d.width);
  p.height = j.value("height", d.height);
  p.rooms = j.value("rooms", d.rooms);
  p.object_density = j.value("object_density", d.object_density);
  p.stairwells = j.value("stairwells", d.stairwells);
  p.categories = j.value("categories", d.categories);
  p.exclusive_categories_per_floor = j.value("exclusive_categories_per_floor", d.exclusive_categories_per_floor);
  p.corridor_width = j.value("corridor_width", d.corridor_width);
  p.stair_length = j.value("stair_length", d.stair_length);
  p.cell_size_m = j.value("cell_size_m", d.cell_size_m);
}

inline const std::vector<std::string>& default_category_names() {
  static const std::vector<std::string> names = {
      "chair", "bed", "plant", "toilet", "tv_monitor", "sofa", "table", "sink", "cabinet", "bathtub",
      "fireplace", "shower", "stool", "towel", "counter", "picture", "cushion", "chest", "seating", "gym", "clothes"};
  return names;
}

namespace detail {

struct RoomLayout {
  int cols = 1, rows = 1, slot_w = 0, slot_h = 0;

  Rect slot(int k) const {
    const int i = k % cols, j = k / cols;
    return {1 + i * slot_w, 1 + j * slot_h, i * slot_w + slot_w, j * slot_h + slot_h};
  }
  Rect max_room(int k) const { return slot(k).inflated(-1); }
};

inline void carve(FloorGrid& g, Rect r) {
  r = r.clipped(g.width(), g.height());
  r = Rect{std::max(r.x0, 1), std::max(r.y0, 1), std::min(r.x1, g.width() - 2), std::min(r.y1, g.height() - 2)};
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x) g[{x, y}] = 0;
}

struct ShaftPlan {
  int slot = 0;
  int lower_floor = 0;
  bool lower_on_west = true;
};

/// BFS over the multi-floor graph; true when every walkable cell on every
/// floor is reachable from `seed`.
inline bool fully_connected(const Scene& scene, FloorCell seed) {
  const MultiFloorGraph graph(scene);
  std::vector<char> seen(std::size_t(graph.node_count()), 0);
  std::vector<int> stack{graph.floor_node(seed.floor, seed.cell)};
  seen[std::size_t(stack.back())] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    graph.for_each_neighbor(u, [&](int v) {
      if (!seen[std::size_t(v)]) {
        seen[std::size_t(v)] = 1;
        stack.push_back(v);
      }
    });
  }
  for (int f = 0; f < scene.floor_count(); ++f)
    for (int y = 0; y < scene.height(); ++y)
      for (int x = 0; x < scene.width(); ++x)
        if (scene.walkable(f, {x, y}) && !seen[std::size_t(graph.floor_node(f, {x, y}))]) return false;
  return true;
}

inline Scene generate_once(const SceneGenParams& p, const RoomLayout& layout, std::mt19937_64& rng) {
  const int W = p.width, H = p.height, L = p.stair_length, hw = p.corridor_width / 2;
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  // Stair shafts occupy distinct room slots; the slot is a full-size room on
  // both floors it joins.
  std::vector<int> slots(std::size_t(p.rooms));
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<ShaftPlan> shafts;
  std::size_t next_slot = 0;
  for (int f = 0; f + 1 < p.floors; ++f)
    for (int s = 0; s < p.stairwells; ++s) shafts.push_back({slots[next_slot++], f, uniform(0, 1) == 0});

  std::vector<FloorGrid> floors;
  for (int f = 0; f < p.floors; ++f) {
    FloorGrid g(W, H, 1);
    std::vector<Rect> rooms;
    for (int k = 0; k < p.rooms; ++k) {
      const Rect m = layout.max_room(k);
      bool full = false;
      for (const auto& sh : shafts) full |= sh.slot == k && (sh.lower_floor == f || sh.lower_floor + 1 == f);
      Rect r = m;
      if (!full) {
        const int rw = uniform(std::min(8, m.width()), m.width());
        const int rh = uniform(std::min(8, m.height()), m.height());
        const int x0 = uniform(m.x0, m.x1 - rw + 1);
        const int y0 = uniform(m.y0, m.y1 - rh + 1);
        r = {x0, y0, x0 + rw - 1, y0 + rh - 1};
      }
      carve(g, r);
      rooms.push_back(r);
    }

    // Spanning tree over adjacent slots (Kruskal on shuffled edges) plus a
    // few loops.
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < p.rooms; ++k) {
      const int i = k % layout.cols;
      if (i + 1 < layout.cols && k + 1 < p.rooms) edges.push_back({k, k + 1});
      if (k + layout.cols < p.rooms) edges.push_back({k, k + layout.cols});
    }
    std::shuffle(edges.begin(), edges.end(), rng);
    std::vector<int> parent(std::size_t(p.rooms));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
      while (parent[std::size_t(a)] != a) a = parent[std::size_t(a)] = parent[std::size_t(parent[std::size_t(a)])];
      return a;
    };
    for (auto [a, b] : edges) {
      const bool joins = find(a) != find(b);
      if (joins) parent[std::size_t(find(a))] = find(b);
      if (!joins && uniform(0, 3) != 0) continue;
      const Cell ca{(rooms[std::size_t(a)].x0 + rooms[std::size_t(a)].x1) / 2,
                    (rooms[std::size_t(a)].y0 + rooms[std::size_t(a)].y1) / 2};
      const Cell cb{(rooms[std::size_t(b)].x0 + rooms[std::size_t(b)].x1) / 2,
                    (rooms[std::size_t(b)].y0 + rooms[std::size_t(b)].y1) / 2};
      carve(g, {std::min(ca.x, cb.x), ca.y - hw, std::max(ca.x, cb.x), ca.y - hw + p.corridor_width - 1});
      carve(g, {cb.x - hw, std::min(ca.y, cb.y), cb.x - hw + p.corridor_width - 1, std::max(ca.y, cb.y)});
    }
    floors.push_back(std::move(g));
  }

  std::vector<Stairwell> stairs;
  for (const auto& sh : shafts) {
    const Rect r = layout.max_room(sh.slot);
    const int cy = r.y0 + r.height() / 2;
    const int x0 = r.x0 + (r.width() - L) / 2;
    const int west_open = x0 - 1, east_open = x0 + L;
    for (int f : {sh.lower_floor, sh.lower_floor + 1}) {
      auto& g = floors[std::size_t(f)];
      for (int x = x0 - 1; x <= x0 + L; ++x) {
        g[{x, cy - 1}] = 1;
        g[{x, cy + 1}] = 1;
      }
      for (int x = x0; x < x0 + L; ++x) g[{x, cy}] = 0;
      const bool lower = f == sh.lower_floor;
      const bool open_west = lower == sh.lower_on_west;
      g[{west_open, cy}] = open_west ? 0 : 1;
      g[{east_open, cy}] = open_west ? 1 : 0;
    }
    Stairwell sw;
    for (int i = 0; i < L; ++i) sw.corridor.push_back({sh.lower_on_west ? x0 + i : x0 + L - 1 - i, cy});
    sw.lower = {sh.lower_floor, sw.corridor.front()};
    sw.upper = {sh.lower_floor + 1, sw.corridor.back()};
    stairs.push_back(std::move(sw));
  }

  // Objects on walkable, non-stair cells.
  std::vector<std::string> names;
  for (int c = 0; c < p.categories; ++c) {
    names.push_back(std::size_t(c) < default_category_names().size() ? default_category_names()[std::size_t(c)]
                                                                      : "category_" + std::to_string(c));
  }
  const Scene bare(floors, stairs, {}, names, p.cell_size_m);
  const int E = p.exclusive_categories_per_floor;
  std::vector<int> shared;
  for (int c = E * p.floors; c < p.categories; ++c) shared.push_back(c);

  std::vector<PlacedObject> objects;
  for (int f = 0; f < p.floors; ++f) {
    std::vector<Cell> free;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (bare.walkable(f, {x, y}) && !bare.is_stair(f, {x, y})) free.push_back({x, y});
    std::shuffle(free.begin(), free.end(), rng);
    const auto count = std::min(free.size(), std::size_t(std::lround(p.object_density * double(free.size()))));
    std::vector<int> allowed = shared;
    for (int c = f * E; c < (f + 1) * E; ++c) allowed.push_back(c);
    if (allowed.empty()) continue;
    for (std::size_t i = 0; i < count; ++i) {
      // Each exclusive category of this floor gets at least one instance.
      const int cat = i < std::size_t(E) ? f * E + int(i) : allowed[std::size_t(uniform(0, int(allowed.size()) - 1))];
      objects.push_back({cat, f, free[i]});
    }
  }
  return Scene(std::move(floors), std::move(stairs), std::move(objects), std::move(names), p.cell_size_m);
}

}  // namespace detail

/// Procedural multi-floor layout: rooms on a slot grid joined by corridors,
/// straight walled stair shafts between adjacent floors, scattered objects.
/// Deterministic for a given seed.
inline Scene generate_scene(const SceneGenParams& p, std::uint64_t seed) {
  if (p.floors < 1 || p.floors > 3) throw InfeasibleParams("floors must be in [1, 3]");
  if (p.width < 16 || p.height < 16 || p.width > 128 || p.height > 128)
    throw InfeasibleParams("width and height must be in [16, 128]");
  if (p.rooms < 1) throw InfeasibleParams("need at least one room");
  if (p.object_density < 0.0 || p.object_density > 0.25) throw InfeasibleParams("object_density must be in [0, 0.25]");
  if (p.categories < 1 || p.categories > 64) throw InfeasibleParams("categories must be in [1, 64]");
  if (p.exclusive_categories_per_floor < 0 || p.exclusive_categories_per_floor * p.floors > p.categories)
    throw InfeasibleParams("exclusive categories exceed the category count");
  if (p.corridor_width < 1 || p.corridor_width > 9) throw InfeasibleParams("corridor_width must be in [1, 9]");
  if (p.stair_length < 2) throw InfeasibleParams("stair_length must be at least 2");
  if (p.floors > 1 && p.stairwells < 1) throw InfeasibleParams("multi-floor scenes need a stairwell per floor pair");
  if ((p.floors - 1) * p.stairwells > p.rooms) throw InfeasibleParams("more stairwells than room slots");
  if (!(p.cell_size_m > 0.0)) throw InfeasibleParams("cell_size_m must be positive");

  detail::RoomLayout layout;
  layout.cols = int(std::ceil(std::sqrt(double(p.rooms))));
  layout.rows = (p.rooms + layout.cols - 1) / layout.cols;
  layout.slot_w = (p.width - 2) / layout.cols;
  layout.slot_h = (p.height - 2) / layout.rows;
  const int min_w = std::max(p.corridor_width + 4, p.floors > 1 ? p.stair_length + 6 : 0);
  const int min_h = std::max(p.corridor_width + 4, p.floors > 1 ? 7 : 0);
  if (layout.slot_w < min_w || layout.slot_h < min_h)
    throw InfeasibleParams("room slots of " + std::to_string(layout.slot_w) + "x" + std::to_string(layout.slot_h) +
                           " cells are too small");

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Scene s = detail::generate_once(p, layout, rng);
    FloorCell seed_cell{-1, {}};
    for (int y = 0; y < s.height() && seed_cell.floor < 0; ++y)
      for (int x = 0; x < s.width() && seed_cell.floor < 0; ++x)
        if (s.walkable(0, {x, y})) seed_cell = {0, {x, y}};
    if (seed_cell.floor >= 0 && detail::fully_connected(s, seed_cell)) return s;
  }
  throw InfeasibleParams("could not produce a connected layout");
}

enum class TargetPlacement { Any, OtherFloorOnly, StartFloorOnly };

struct EpisodeSampling {
  TargetPlacement placement = TargetPlacement::Any;
  int start_floor = 0;
  int max_steps = 500;
  double success_dist_m = 1.0;
};

/// Draws a start pose and a target category with at least one reachable
/// instance. With OtherFloorOnly the target category is absent from the
/// start floor; with StartFloorOnly it appears on no other floor.
inline EpisodeSpec sample_episode(const Scene& scene, const EpisodeSampling& opts, std::uint64_t seed,
                                  const std::string& scene_id = "") {
  std::mt19937_64 rng(seed);
  std::vector<int> present(std::size_t(scene.category_count()), 0), on_start(present), elsewhere(present);
  for (const auto& o : scene.objects()) {
    present[std::size_t(o.category)] = 1;
    (o.floor == opts.start_floor ? on_start : elsewhere)[std::size_t(o.category)] = 1;
  }
  std::vector<int> candidates;
  for (int c = 0; c < scene.category_count(); ++c) {
    if (!present[std::size_t(c)]) continue;
    if (opts.placement == TargetPlacement::OtherFloorOnly && on_start[std::size_t(c)]) continue;
    if (opts.placement == TargetPlacement::StartFloorOnly && elsewhere[std::size_t(c)]) continue;
    candidates.push_back(c);
  }
  if (candidates.empty()) throw SceneError("no target category satisfies the placement rule");

  std::vector<Cell> starts;
  for (int y = 0; y < scene.height(); ++y)
    for (int x = 0; x < scene.width(); ++x)
      if (scene.walkable(opts.start_floor, {x, y}) && !scene.is_stair(opts.start_floor, {x, y}))
        starts.push_back({x, y});
  if (starts.empty()) throw SceneError("start floor has no walkable cell");

  EpisodeSpec spec;
  spec.scene_id = scene_id;
  spec.start_floor = opts.start_floor;
  spec.max_steps = opts.max_steps;
  spec.success_dist_m = opts.success_dist_m;
  std::shuffle(candidates.begin(), candidates.end(), rng);
  spec.target_category = candidates.front();
  spec.start_heading = Heading(std::uniform_int_distribution<int>(0, 3)(rng));
  std::shuffle(starts.begin(), starts.end(), rng);
  for (Cell c : starts) {
    spec.start_cell = c;
    const AgentState a = spec.initial_state();
    if (within_success_radius(scene, a, spec.target_category, spec.success_dist_m)) continue;
    if (oracle_geodesic(scene, a, spec.target_category) < kInf) return spec;
  }
  throw SceneError("no start cell reaches the target");
}

}  // namespace mfnav
