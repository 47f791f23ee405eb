#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "advisor_http.hpp"
#include "advisors.hpp"
#include "frontier.hpp"
#include "interfloor.hpp"
#include "mfnp.hpp"
#include "scene.hpp"
#include "scene_gen.hpp"
#include "semantic_map.hpp"

namespace mfnav {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AblationFlags {
  bool no_mfnp = false;
  bool no_timestep = false;
  bool no_objects = false;
  bool no_explored = false;
  bool no_llm = false;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct AdvisorConfig {
  bool remote = false;
  EndpointConfig endpoint;
  /// Minimum spacing between remote P_LLM queries, in timesteps.
  int query_interval = 50;
};

/// One group of episodes in a batch: either generated scenes or a scene
/// file, with `count` sampled episodes.
struct EpisodeSetConfig {
  std::string id_prefix = "ep";
  std::optional<SceneGenParams> generate;
  std::string scene_file;
  int count = 1;
  std::uint64_t seed = 1;
  TargetPlacement placement = TargetPlacement::Any;
  int start_floor = 0;
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  int max_steps = 500;
  double success_dist_m = 1.0;

  SensorModel sensor;
  NoiseModel noise{0.1};
  SemanticMapConfig map;
  FrontierParams frontier;
  SelectionParams selection;
  int replan_interval = 10;

  double beta = 0.6;
  double tau_conf = 0.65;
  double vlm_reliability = 0.9;

  MfnpConfig mfnp;
  InterfloorConfig interfloor;
  bool reset_on_floor_change = false;

  AdvisorConfig advisor;
  AblationFlags ablation;

  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
  bool trajectory = true;
  /// When set, the final semantic map of every episode is written here.
  std::string debug_dump_dir;
  std::vector<EpisodeSetConfig> episodes;

  /// MFNP settings with the ablation switches applied.
  MfnpConfig effective_mfnp() const {
    MfnpConfig m = mfnp;
    m.enabled = {!ablation.no_timestep, !ablation.no_objects, !ablation.no_explored, !ablation.no_llm};
    return m;
  }

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw ConfigError("invalid config: " + what);
    };
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    require(schema_version == kConfigSchemaVersion, "unsupported schema_version");
    require(max_steps > 0, "max_steps must be positive");
    require(success_dist_m > 0.0, "success_dist_m must be positive");
    require(sensor.range_cells > 0 && sensor.fov_deg > 0.0 && sensor.fov_deg <= 360.0, "sensor geometry");
    require(unit(noise.noise_rate), "noise_rate in [0, 1]");
    require(unit(noise.correct_conf_lo) && unit(noise.correct_conf_hi) && noise.correct_conf_lo <= noise.correct_conf_hi,
            "correct confidence band");
    require(unit(noise.wrong_conf_lo) && unit(noise.wrong_conf_hi) && noise.wrong_conf_lo <= noise.wrong_conf_hi,
            "wrong confidence band");
    require(map.width >= 16 && map.height >= 16 && map.width <= 4096 && map.height <= 4096, "map extent");
    require(unit(map.recording_floor), "recording_floor in [0, 1]");
    require(map.min_stair_cells >= 1, "min_stair_cells >= 1");
    require(frontier.alpha >= 0.0, "alpha >= 0");
    require(frontier.obstacle_dilation >= 0 && frontier.min_region_area >= 1 && frontier.benefit_radius >= 0 &&
                frontier.ratio_window >= 0,
            "frontier parameters");
    require(unit(selection.exclusion_ratio) && selection.repeat_limit >= 1 && selection.repeat_displacement >= 0.0 &&
                selection.free_explore_steps >= 0,
            "selection parameters");
    require(replan_interval >= 1, "replan_interval >= 1");
    require(unit(beta) && unit(tau_conf) && unit(vlm_reliability), "fusion parameters in [0, 1]");
    try {
      mfnp.validate(max_steps);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid config: ") + e.what());
    }
    require(interfloor.seal_radius >= 0 && interfloor.deadline_steps > 0 && interfloor.settle_steps >= 0 &&
                interfloor.cooldown_steps >= 0 && interfloor.abort_cooldown >= 0,
            "interfloor parameters");
    require(!advisor.remote || !advisor.endpoint.base_url.empty(), "remote advisor needs base_url");
    require(advisor.query_interval >= 1, "advisor query_interval >= 1");
    require(threads >= 0, "threads >= 0");
    for (const auto& e : episodes) {
      require(e.count >= 1, "episode set count >= 1");
      require(e.generate.has_value() != !e.scene_file.empty(), "episode set needs exactly one of generate/scene_file");
    }
  }
};

// ---------------------------------------------------------------------------
// JSON mapping. Every key is optional and defaults to the value above.

namespace detail {

template <typename T>
void get_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::get_opt;
  RunConfig c;
  try {
    get_opt(j, "schema_version", c.schema_version);
    get_opt(j, "max_steps", c.max_steps);
    get_opt(j, "success_dist_m", c.success_dist_m);
    get_opt(j, "seed", c.seed);
    get_opt(j, "threads", c.threads);
    get_opt(j, "trajectory", c.trajectory);
    get_opt(j, "debug_dump_dir", c.debug_dump_dir);
    get_opt(j, "replan_interval", c.replan_interval);
    get_opt(j, "beta", c.beta);
    get_opt(j, "tau_conf", c.tau_conf);
    get_opt(j, "vlm_reliability", c.vlm_reliability);
    get_opt(j, "reset_on_floor_change", c.reset_on_floor_change);
    if (j.contains("sensor")) {
      const auto& s = j["sensor"];
      get_opt(s, "range_cells", c.sensor.range_cells);
      get_opt(s, "fov_deg", c.sensor.fov_deg);
    }
    if (j.contains("noise")) {
      const auto& s = j["noise"];
      get_opt(s, "noise_rate", c.noise.noise_rate);
      get_opt(s, "correct_conf_lo", c.noise.correct_conf_lo);
      get_opt(s, "correct_conf_hi", c.noise.correct_conf_hi);
      get_opt(s, "wrong_conf_lo", c.noise.wrong_conf_lo);
      get_opt(s, "wrong_conf_hi", c.noise.wrong_conf_hi);
    }
    if (j.contains("map")) {
      const auto& s = j["map"];
      get_opt(s, "width", c.map.width);
      get_opt(s, "height", c.map.height);
      get_opt(s, "recording_floor", c.map.recording_floor);
      get_opt(s, "min_stair_cells", c.map.min_stair_cells);
    }
    if (j.contains("frontier")) {
      const auto& s = j["frontier"];
      get_opt(s, "alpha", c.frontier.alpha);
      get_opt(s, "obstacle_dilation", c.frontier.obstacle_dilation);
      get_opt(s, "min_region_area", c.frontier.min_region_area);
      get_opt(s, "benefit_radius", c.frontier.benefit_radius);
      get_opt(s, "ratio_window", c.frontier.ratio_window);
    }
    if (j.contains("selection")) {
      const auto& s = j["selection"];
      get_opt(s, "exclusion_ratio", c.selection.exclusion_ratio);
      get_opt(s, "repeat_limit", c.selection.repeat_limit);
      get_opt(s, "repeat_displacement", c.selection.repeat_displacement);
      get_opt(s, "free_explore_steps", c.selection.free_explore_steps);
    }
    if (j.contains("mfnp")) {
      const auto& s = j["mfnp"];
      get_opt(s, "weights", c.mfnp.weights);
      get_opt(s, "threshold", c.mfnp.threshold);
      get_opt(s, "t_min", c.mfnp.t_min);
      get_opt(s, "final_window", c.mfnp.final_window);
      get_opt(s, "delta_t", c.mfnp.delta_t);
    }
    if (j.contains("interfloor")) {
      const auto& s = j["interfloor"];
      get_opt(s, "seal_radius", c.interfloor.seal_radius);
      get_opt(s, "deadline_steps", c.interfloor.deadline_steps);
      get_opt(s, "settle_steps", c.interfloor.settle_steps);
      get_opt(s, "cooldown_steps", c.interfloor.cooldown_steps);
      get_opt(s, "abort_cooldown", c.interfloor.abort_cooldown);
    }
    if (j.contains("advisor")) {
      const auto& s = j["advisor"];
      const std::string kind = s.value("kind", "stub");
      if (kind != "stub" && kind != "remote") throw ConfigError("invalid config: advisor.kind must be stub or remote");
      c.advisor.remote = kind == "remote";
      get_opt(s, "base_url", c.advisor.endpoint.base_url);
      get_opt(s, "model", c.advisor.endpoint.model);
      get_opt(s, "api_key_env", c.advisor.endpoint.api_key_env);
      get_opt(s, "timeout_ms", c.advisor.endpoint.timeout_ms);
      get_opt(s, "query_interval", c.advisor.query_interval);
    }
    if (j.contains("ablation")) {
      const auto& s = j["ablation"];
      get_opt(s, "no_mfnp", c.ablation.no_mfnp);
      get_opt(s, "no_timestep", c.ablation.no_timestep);
      get_opt(s, "no_objects", c.ablation.no_objects);
      get_opt(s, "no_explored", c.ablation.no_explored);
      get_opt(s, "no_llm", c.ablation.no_llm);
    }
    for (const auto& e : j.value("episodes", nlohmann::json::array())) {
      EpisodeSetConfig s;
      get_opt(e, "id_prefix", s.id_prefix);
      get_opt(e, "scene_file", s.scene_file);
      get_opt(e, "count", s.count);
      get_opt(e, "seed", s.seed);
      get_opt(e, "start_floor", s.start_floor);
      if (e.contains("generate")) s.generate = e["generate"].get<SceneGenParams>();
      const std::string placement = e.value("placement", "any");
      if (placement == "other_floor") {
        s.placement = TargetPlacement::OtherFloorOnly;
      } else if (placement == "start_floor") {
        s.placement = TargetPlacement::StartFloorOnly;
      } else if (placement != "any") {
        throw ConfigError("invalid config: placement must be any, other_floor or start_floor");
      }
      c.episodes.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace mfnav
