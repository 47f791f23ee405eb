#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scene.hpp"
#include "semantic_map.hpp"

namespace mfnav {

enum class MfnpTerm { Timestep = 0, Objects = 1, Explored = 2, Llm = 3 };

struct MfnpConfig {
  std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
  double threshold = 0.6;  // N_th
  int t_min = 150;         // no stair ascent before this timestep
  int final_window = 200;  // ... nor within this many steps of the budget
  int delta_t = 50;        // area sampling interval
  /// Ablation switches; a disabled term contributes nothing while the
  /// remaining weights stay as configured.
  std::array<bool, 4> enabled{true, true, true, true};

  int t_max(int max_steps) const { return max_steps - final_window; }

  void validate(int max_steps) const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("MFNP weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("MFNP weights must sum to 1");
    if (t_min < 0 || !(t_min < t_max(max_steps))) throw std::invalid_argument("MFNP window is empty");
    if (delta_t <= 0) throw std::invalid_argument("MFNP delta_t must be positive");
  }
};

/// f(t) = (max_steps - t) / max_steps.
inline double time_validity(int t, int max_steps) {
  if (max_steps <= 0 || t < 0 || t > max_steps) throw std::domain_error("time_validity: t outside [0, max_steps]");
  return double(max_steps - t) / double(max_steps);
}

struct MfnpTerms {
  double time_validity = 0.0;  // f(t)
  double object_ratio = 0.0;   // O_explored / O_total
  double area_growth = 1.0;    // E_t
  double p_llm = 0.0;
  double value = 0.0;          // N_MFNP
};

inline double compute_metric(double f, double object_ratio, double area_growth, double p_llm, const MfnpConfig& cfg) {
  const std::array<double, 4> terms{f, object_ratio, 1.0 - area_growth, p_llm};
  double n = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    if (cfg.enabled[i]) n += cfg.weights[i] * terms[i];
  return n;
}

/// Per floor-epoch exploration statistics.
class ExplorationStats {
 public:
  ExplorationStats(int total_categories, int max_steps, int delta_t = 50)
      : total_(total_categories), max_steps_(max_steps), delta_t_(delta_t), seen_(std::size_t(std::max(0, total_categories)), 0) {}

  int timestep() const { return timestep_; }
  int max_steps() const { return max_steps_; }
  int delta_t() const { return delta_t_; }
  int epoch_start() const { return epoch_start_; }
  int total_categories() const { return total_; }
  int objects_explored() const { return int(std::count(seen_.begin(), seen_.end(), 1)); }
  const std::vector<char>& seen_categories() const { return seen_; }
  const std::vector<std::pair<int, long>>& area_log() const { return area_log_; }
  double area_growth() const { return e_t_; }
  double p_llm() const { return p_llm_; }
  void set_p_llm(double p) { p_llm_ = std::clamp(p, 0.0, 1.0); }

  double object_ratio() const {
    if (total_ <= 0) throw std::domain_error("object ratio undefined for zero categories");
    return double(objects_explored()) / double(total_);
  }

  /// Call once per timestep after the map has absorbed `obs`.
  void update(const SemanticMap& map, const Observation& obs) {
    timestep_ = obs.timestep;
    for (const auto& v : obs.visible) {
      if (v.reported_category && v.seg_confidence >= map.config().recording_floor && *v.reported_category >= 0 &&
          *v.reported_category < total_)
        seen_[std::size_t(*v.reported_category)] = 1;
    }
    if ((timestep_ - epoch_start_) % delta_t_ == 0) record_area(timestep_, map.explored_count());
  }

  /// Appends an area sample and recomputes E_t; exposed for testing.
  void record_area(int t, long area) {
    if (!area_log_.empty() && t <= area_log_.back().first) throw std::logic_error("area samples must be time-ordered");
    area_log_.push_back({t, area});
    if (area_log_.size() >= 2) {
      const long prev = area_log_[area_log_.size() - 2].second;
      e_t_ = std::clamp(double(area - prev) / double(std::max(prev, 1L)), 0.0, 1.0);
    } else {
      e_t_ = 1.0;
    }
  }

  /// Starts a new floor-epoch after a map reset.
  void new_epoch(int t) {
    std::fill(seen_.begin(), seen_.end(), 0);
    area_log_.clear();
    e_t_ = 1.0;
    epoch_start_ = t;
  }

 private:
  int total_;
  int max_steps_;
  int delta_t_;
  int timestep_ = 0;
  int epoch_start_ = 0;
  std::vector<char> seen_;
  std::vector<std::pair<int, long>> area_log_;
  double e_t_ = 1.0;  // cold start
  double p_llm_ = 0.0;
};

inline MfnpTerms compute_metric(const ExplorationStats& s, const MfnpConfig& cfg) {
  if (s.total_categories() <= 0) throw std::domain_error("compute_metric: O_total is zero");
  MfnpTerms t;
  t.time_validity = time_validity(std::clamp(s.timestep(), 0, s.max_steps()), s.max_steps());
  t.object_ratio = s.object_ratio();
  t.area_growth = s.area_growth();
  t.p_llm = s.p_llm();
  t.value = compute_metric(t.time_validity, t.object_ratio, t.area_growth, t.p_llm, cfg);
  return t;
}

enum class FloorDecision { Stay, Go };

inline bool in_trigger_window(int t, int max_steps, const MfnpConfig& cfg) {
  return t >= cfg.t_min && t <= cfg.t_max(max_steps);
}

/// Go only when a staircase is mapped, t lies in the allowed window, and
/// N_MFNP exceeds the threshold.
inline FloorDecision should_go_multifloor(bool stair_present, int t, int max_steps, double n_mfnp,
                                          const MfnpConfig& cfg) {
  if (!stair_present || !in_trigger_window(t, max_steps, cfg)) return FloorDecision::Stay;
  return n_mfnp > cfg.threshold ? FloorDecision::Go : FloorDecision::Stay;
}

inline FloorDecision should_go_multifloor(const SemanticMap& map, const ExplorationStats& s, const MfnpConfig& cfg) {
  return should_go_multifloor(map.stair_present(), s.timestep(), s.max_steps(), compute_metric(s, cfg).value, cfg);
}

}  // namespace mfnav
