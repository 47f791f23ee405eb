#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "scene.hpp"
#include "semantic_map.hpp"

namespace mfnav {

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arrival times (in cells) over a rectangular region of interest. Cells
/// outside the region read as unreachable.
class DistanceField {
 public:
  DistanceField() = default;
  explicit DistanceField(Rect roi) : roi_(roi), t_(roi.width(), roi.height(), kInf) {}

  const Rect& roi() const { return roi_; }
  bool contains(Cell c) const { return roi_.contains(c); }

  double operator[](Cell c) const { return roi_.contains(c) ? t_[local(c)] : kInf; }
  double& ref(Cell c) { return t_[local(c)]; }

  bool finite(Cell c) const { return std::isfinite((*this)[c]); }

  friend bool operator==(const DistanceField&, const DistanceField&) = default;

 private:
  Cell local(Cell c) const { return {c.x - roi_.x0, c.y - roi_.y0}; }

  Rect roi_;
  Grid<double> t_;
};

/// Records the accepted values in popping order.
struct FmmTrace {
  std::vector<double> accepted;
};

/// First-order upwind update for unit speed on a unit grid, given the
/// smallest known neighbor along each axis.
inline double eikonal_update(double a, double b) {
  if (b < a) std::swap(a, b);
  if (!std::isfinite(b) || b - a >= 1.0) return a + 1.0;
  const double d = b - a;
  return 0.5 * (a + b + std::sqrt(2.0 - d * d));
}

/// Fast marching on the 4-neighbor stencil. `traversable` is queried only
/// inside `roi`; cells popped from the queue have nondecreasing arrival time.
template <typename Traversable>
DistanceField solve_fmm(Rect roi, Traversable&& traversable, std::span<const Cell> sources, FmmTrace* trace = nullptr) {
  DistanceField field(roi);
  Grid<std::uint8_t> accepted(roi.width(), roi.height(), 0);
  auto loc = [&](Cell c) { return Cell{c.x - roi.x0, c.y - roi.y0}; };

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  bool any = false;
  for (Cell s : sources) {
    if (!roi.contains(s) || !traversable(s)) continue;
    any = true;
    field.ref(s) = 0.0;
    open.push({0.0, accepted.index(loc(s))});
  }
  if (!any) throw std::invalid_argument("solve_fmm: no traversable source inside the region");

  auto known = [&](Cell c) { return roi.contains(c) && accepted[loc(c)] ? field[c] : kInf; };

  while (!open.empty()) {
    const auto [t, idx] = open.top();
    open.pop();
    const Cell lc = accepted.cell_of(idx);
    if (accepted[lc]) continue;
    accepted[lc] = 1;
    if (trace) trace->accepted.push_back(t);
    const Cell c{lc.x + roi.x0, lc.y + roi.y0};
    for (Cell d : kNeighbors4) {
      const Cell n = c + d;
      if (!roi.contains(n) || accepted[loc(n)] || !traversable(n)) continue;
      const double a = std::min(known({n.x - 1, n.y}), known({n.x + 1, n.y}));
      const double b = std::min(known({n.x, n.y - 1}), known({n.x, n.y + 1}));
      const double cand = eikonal_update(a, b);
      if (cand < field[n]) {
        field.ref(n) = cand;
        open.push({cand, accepted.index(loc(n))});
      }
    }
  }
  return field;
}

struct TraversalPolicy {
  /// Candidate-distance fields let the front cross unexplored space;
  /// execution fields stay on explored free cells.
  bool unexplored_traversable = false;
  bool allow_stairs = false;
};

inline bool map_traversable(const SemanticMap& map, Cell c, TraversalPolicy policy) {
  if (!map.in_bounds(c)) return false;
  if (!map.explored(c)) return policy.unexplored_traversable;
  if (map.obstacle(c)) return false;
  return policy.allow_stairs || !map.stair(c);
}

/// Region the planner needs: explored bounds plus a one-cell rim, clipped to
/// the map, always covering the sources.
inline Rect planning_roi(const SemanticMap& map, std::span<const Cell> sources) {
  Rect r = map.explored_bounds();
  for (Cell s : sources) r.expand_to(s);
  return r.inflated(1).clipped(map.width(), map.height());
}

inline DistanceField solve_fmm(const SemanticMap& map, std::span<const Cell> sources, TraversalPolicy policy,
                               FmmTrace* trace = nullptr) {
  return solve_fmm(
      planning_roi(map, sources), [&](Cell c) { return map_traversable(map, c, policy); }, sources, trace);
}

/// Steepest descent from `goal` to a source over 4-neighbors. The returned
/// path runs source -> goal.
inline std::vector<Cell> extract_path(const DistanceField& field, Cell goal) {
  if (!field.finite(goal)) throw NoPathError("no path to " + to_string(goal));
  std::vector<Cell> path{goal};
  Cell cur = goal;
  const auto guard = std::size_t(field.roi().width()) * std::size_t(field.roi().height()) + 1;
  while (field[cur] > 0.0) {
    Cell best = cur;
    double best_t = field[cur];
    for (Cell d : kNeighbors4) {
      const Cell n = cur + d;
      if (field[n] < best_t) {
        best_t = field[n];
        best = n;
      }
    }
    if (best == cur || path.size() > guard) throw NoPathError("descent stalled at " + to_string(cur));
    cur = best;
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

/// Maps the first step of `path` onto the discrete action space. Returns
/// nullopt for a single-cell path; the caller decides whether to stop.
inline std::optional<Action> next_action(const std::vector<Cell>& path, Heading heading) {
  if (path.size() < 2) return std::nullopt;
  const auto want = heading_of(path[1] - path[0]);
  if (!want) throw std::invalid_argument("path is not 4-connected");
  if (*want == heading) return Action::MoveForward;
  if (*want == turned_right(heading)) return Action::TurnRight;
  return Action::TurnLeft;  // left turn also covers the 180 degree case
}

inline bool waypoint_reached(Cell agent, Cell goal) { return chebyshev(agent, goal) <= 1; }

/// Raster dump: "MFNF" magic, then little-endian int32 x0, y0, width,
/// height, then width*height float32 values in row-major order.
inline void write_field_raster(const DistanceField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write field raster " + path);
  const Rect& r = field.roi();
  out.write("MFNF", 4);
  const std::int32_t header[4] = {r.x0, r.y0, r.width(), r.height()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x) {
      const float v = float(field[{x, y}]);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

}  // namespace mfnav
