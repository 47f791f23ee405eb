#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "grid.hpp"
#include "planner.hpp"
#include "semantic_map.hpp"

namespace mfnav {

struct FrontierParams {
  double alpha = 0.5;
  int obstacle_dilation = 2;  // r_obs
  int min_region_area = 4;
  int benefit_radius = 10;    // r_b, Chebyshev
  int ratio_window = 5;       // half-width of the explored-ratio window
};

struct CandidateWaypoint {
  Cell cell;
  int benefit = 0;
  double distance = kInf;
  double score = -kInf;
  int region_size = 0;
  double explored_ratio = 0.0;
};

/// Cost-utility score B - alpha * D; unreachable candidates score -inf.
inline double score(double benefit, double distance, double alpha) {
  if (!std::isfinite(distance)) return -kInf;
  return benefit - alpha * distance;
}

/// Explored fraction of the (2r+1)^2 window around `c`, clipped to the map.
inline double explored_ratio(const SemanticMap& map, Cell c, int r) {
  long explored = 0, total = 0;
  for (int y = std::max(0, c.y - r); y <= std::min(map.height() - 1, c.y + r); ++y)
    for (int x = std::max(0, c.x - r); x <= std::min(map.width() - 1, c.x + r); ++x) {
      ++total;
      explored += map.explored({x, y});
    }
  return total == 0 ? 0.0 : double(explored) / double(total);
}

/// Unexplored cells within Chebyshev radius `r` of `c`.
inline int benefit(const SemanticMap& map, Cell c, int r) {
  int n = 0;
  for (int y = std::max(0, c.y - r); y <= std::min(map.height() - 1, c.y + r); ++y)
    for (int x = std::max(0, c.x - r); x <= std::min(map.width() - 1, c.x + r); ++x) n += !map.explored({x, y});
  return n;
}

inline bool is_frontier(const SemanticMap& map, Cell c) {
  if (!map.in_bounds(c) || !map.explored(c) || map.obstacle(c)) return false;
  for (Cell d : kNeighbors4) {
    const Cell n = c + d;
    if (map.in_bounds(n) && !map.explored(n)) return true;
  }
  return false;
}

inline bool near_obstacle(const SemanticMap& map, Cell c, int r) {
  for (int y = std::max(0, c.y - r); y <= std::min(map.height() - 1, c.y + r); ++y)
    for (int x = std::max(0, c.x - r); x <= std::min(map.width() - 1, c.x + r); ++x)
      if (map.obstacle({x, y})) return true;
  return false;
}

/// All frontier cells in scan order, without dilation or area filtering.
inline std::vector<Cell> frontier_cells(const SemanticMap& map) {
  std::vector<Cell> out;
  const Rect r = map.explored_bounds();
  if (r.empty()) return out;
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x)
      if (is_frontier(map, {x, y})) out.push_back({x, y});
  return out;
}

/// Frontier cells minus the dilated obstacle mask, grouped into 8-connected
/// regions; regions smaller than `min_region_area` are dropped and each
/// survivor contributes its centroid snapped to its nearest member cell.
/// Distance and score are left unset (see `score_candidates`).
inline std::vector<CandidateWaypoint> extract_candidates(const SemanticMap& map, const FrontierParams& p = {}) {
  std::vector<CandidateWaypoint> out;
  const Rect r = map.explored_bounds();
  if (r.empty()) return out;

  Grid<std::uint8_t> mask(r.width(), r.height(), 0);
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x)
      if (is_frontier(map, {x, y}) && !near_obstacle(map, {x, y}, p.obstacle_dilation)) mask[{x - r.x0, y - r.y0}] = 1;

  std::vector<Cell> region, stack;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if (mask[{x, y}] != 1) continue;
      region.clear();
      stack.assign(1, {x, y});
      mask[{x, y}] = 2;
      while (!stack.empty()) {
        const Cell c = stack.back();
        stack.pop_back();
        region.push_back(c);
        for (Cell d : kNeighbors8) {
          const Cell n = c + d;
          if (mask.in_bounds(n) && mask[n] == 1) {
            mask[n] = 2;
            stack.push_back(n);
          }
        }
      }
      if (int(region.size()) < p.min_region_area) continue;

      // Exact nearest-to-centroid test: compare |n*c - sum|^2 in integers.
      const long long n = static_cast<long long>(region.size());
      long long sx = 0, sy = 0;
      for (Cell c : region) {
        sx += c.x;
        sy += c.y;
      }
      Cell best = region.front();
      long long best_d = -1;
      for (Cell c : region) {
        const long long dx = n * c.x - sx, dy = n * c.y - sy;
        const long long d = dx * dx + dy * dy;
        if (best_d < 0 || d < best_d || (d == best_d && c < best)) {
          best_d = d;
          best = c;
        }
      }
      CandidateWaypoint cw;
      cw.cell = {best.x + r.x0, best.y + r.y0};
      cw.region_size = int(region.size());
      cw.benefit = benefit(map, cw.cell, p.benefit_radius);
      cw.explored_ratio = explored_ratio(map, cw.cell, p.ratio_window);
      out.push_back(cw);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cell < b.cell; });
  return out;
}

/// Strict ranking: higher score, then smaller distance, then cell order.
inline bool ranks_before(const CandidateWaypoint& a, const CandidateWaypoint& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.cell < b.cell;
}

/// Fills distance from `field` and the score, then orders candidates
/// best first.
inline void score_candidates(std::vector<CandidateWaypoint>& candidates, const DistanceField& field, double alpha) {
  for (auto& c : candidates) {
    c.distance = field[c.cell];
    c.score = score(double(c.benefit), c.distance, alpha);
  }
  std::sort(candidates.begin(), candidates.end(), ranks_before);
}

}  // namespace mfnav
