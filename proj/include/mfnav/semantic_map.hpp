#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "scene.hpp"

namespace mfnav {

struct SemanticMapConfig {
  int width = 480;
  int height = 480;
  /// Semantic labels below this segmentation confidence are not recorded.
  double recording_floor = 0.3;
  int min_stair_cells = 3;
};

/// Allocentric top-down map with C_n + 5 channels: obstacle, explored,
/// current position, history, one channel per object category, stair.
///
/// The agent's world cell at the last reset maps to the map center; world
/// and map frames differ by a pure translation because the agent pose is
/// ground truth.
class SemanticMap {
 public:
  static constexpr int kObstacle = 0;
  static constexpr int kExplored = 1;
  static constexpr int kPosition = 2;
  static constexpr int kHistory = 3;
  static constexpr int kFirstCategory = 4;

  SemanticMap(int category_count, Cell start_world_cell, SemanticMapConfig cfg = {})
      : cfg_(cfg),
        categories_(category_count),
        obstacle_(cfg.width, cfg.height, 0),
        explored_(cfg.width, cfg.height, 0),
        position_(cfg.width, cfg.height, 0),
        history_(cfg.width, cfg.height, 0),
        stair_(cfg.width, cfg.height, 0),
        sealed_(cfg.width, cfg.height, 0),
        confidence_(std::size_t(category_count), Grid<float>(cfg.width, cfg.height, 0.0f)) {
    if (category_count < 1) throw std::invalid_argument("semantic map needs at least one category");
    if (cfg.width < 3 || cfg.height < 3) throw std::invalid_argument("semantic map extent too small");
    reset(start_world_cell);
  }

  const SemanticMapConfig& config() const { return cfg_; }
  int width() const { return cfg_.width; }
  int height() const { return cfg_.height; }
  int category_count() const { return categories_; }
  int channel_count() const { return categories_ + 5; }
  int stair_channel() const { return kFirstCategory + categories_; }
  Cell center() const { return {cfg_.width / 2, cfg_.height / 2}; }
  bool in_bounds(Cell m) const { return obstacle_.in_bounds(m); }

  Cell to_map(Cell world) const { return world - anchor_ + center(); }
  Cell to_world(Cell map) const { return map - center() + anchor_; }
  Cell anchor() const { return anchor_; }

  Cell agent_cell() const { return agent_; }
  bool obstacle(Cell m) const { return obstacle_[m] != 0; }
  bool explored(Cell m) const { return explored_[m] != 0; }
  bool stair(Cell m) const { return stair_[m] != 0; }
  bool sealed(Cell m) const { return sealed_[m] != 0; }
  bool visited(Cell m) const { return history_[m] != 0; }
  float confidence(int category, Cell m) const { return confidence_[std::size_t(category)][m]; }
  bool labeled(int category, Cell m) const { return confidence(category, m) > 0.0f; }

  /// Channel value in [0, 1]; semantic channels return the recorded
  /// confidence.
  float channel(int ch, Cell m) const {
    if (ch == kObstacle) return obstacle_[m];
    if (ch == kExplored) return explored_[m];
    if (ch == kPosition) return position_[m];
    if (ch == kHistory) return history_[m];
    if (ch == stair_channel()) return stair_[m];
    if (ch >= kFirstCategory && ch < stair_channel()) return confidence(ch - kFirstCategory, m);
    throw std::out_of_range("channel index out of range");
  }

  long explored_count() const { return explored_count_; }
  long stair_count() const { return stair_count_; }
  long dropped_count() const { return dropped_; }
  /// Bounding box of explored cells (empty after a reset).
  const Rect& explored_bounds() const { return bounds_; }

  /// E_stair: a staircase has been mapped on the current floor.
  bool stair_present() const { return stair_count_ >= cfg_.min_stair_cells; }

  /// Writes one observation. Cells that fall outside the map are dropped and
  /// counted; the map never recenters on its own.
  void integrate(const Observation& obs) {
    set_agent(to_map(obs.cell));
    for (const auto& v : obs.visible) {
      const Cell m = to_map(v.cell);
      if (!in_bounds(m)) {
        ++dropped_;
        continue;
      }
      mark_explored(m);
      obstacle_[m] = (v.occupied || sealed_[m]) ? 1 : 0;
      set_stair(m, v.is_stair);
      if (v.reported_category && v.seg_confidence >= cfg_.recording_floor) {
        const int cat = *v.reported_category;
        if (cat >= 0 && cat < categories_) {
          float& c = confidence_[std::size_t(cat)][m];
          c = std::max(c, float(v.seg_confidence));
        }
      }
    }
  }

  /// Clears every channel and re-anchors the map on `world_cell`.
  void reset(Cell world_cell) {
    obstacle_.fill(0);
    explored_.fill(0);
    position_.fill(0);
    history_.fill(0);
    stair_.fill(0);
    sealed_.fill(0);
    for (auto& g : confidence_) g.fill(0.0f);
    explored_count_ = stair_count_ = dropped_ = 0;
    bounds_ = Rect{};
    anchor_ = world_cell;
    agent_ = center();
    position_[agent_] = 1;
    history_[agent_] = 1;
  }

  /// Marks cells as permanent obstacles until the next reset.
  void seal(const std::vector<Cell>& cells) {
    for (Cell m : cells) {
      if (!in_bounds(m)) continue;
      sealed_[m] = 1;
      obstacle_[m] = 1;
      mark_explored(m);
    }
  }

 private:
  void set_agent(Cell m) {
    if (!in_bounds(m)) throw std::out_of_range("agent left the semantic map at " + to_string(m));
    position_[agent_] = 0;
    agent_ = m;
    position_[m] = 1;
    history_[m] = 1;
    mark_explored(m);
  }

  void mark_explored(Cell m) {
    if (!explored_[m]) {
      explored_[m] = 1;
      ++explored_count_;
      bounds_.expand_to(m);
    }
  }

  void set_stair(Cell m, bool is_stair) {
    if (bool(stair_[m]) == is_stair) return;
    stair_[m] = is_stair ? 1 : 0;
    stair_count_ += is_stair ? 1 : -1;
  }

  SemanticMapConfig cfg_;
  int categories_;
  Cell anchor_;
  Cell agent_;
  Grid<std::uint8_t> obstacle_, explored_, position_, history_, stair_, sealed_;
  std::vector<Grid<float>> confidence_;
  long explored_count_ = 0;
  long stair_count_ = 0;
  long dropped_ = 0;
  Rect bounds_;
};

}  // namespace mfnav
