#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "advisor_http.hpp"
#include "advisors.hpp"
#include "config.hpp"
#include "debug_dump.hpp"
#include "frontier.hpp"
#include "interfloor.hpp"
#include "mfnp.hpp"
#include "planner.hpp"
#include "scene.hpp"
#include "scene_gen.hpp"
#include "semantic_map.hpp"

namespace mfnav {

enum class Termination { StoppedSuccess, StoppedFailure, Timeout, Error };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::StoppedSuccess: return "stopped_success";
    case Termination::StoppedFailure: return "stopped_failure";
    case Termination::Timeout: return "timeout";
    case Termination::Error: return "error";
  }
  return "?";
}

struct EpisodeResult {
  std::string episode_id;
  bool success = false;
  double path_length_m = 0.0;
  double oracle_shortest_m = kInf;
  double spl = 0.0;
  double dtg_m = kInf;
  int steps_used = 0;
  bool mfnp_triggered = false;
  int trigger_timestep = -1;
  int floor_changes = 0;
  Termination termination = Termination::Timeout;
  int advisor_failures = 0;
  int planner_failures = 0;
  long dropped_cells = 0;
  std::string error;
};

/// Success-weighted path length for one episode. Zero on failure; a
/// zero-length optimum reached without moving counts as 1.
inline double spl(bool success, double shortest, double taken) {
  if (!success) return 0.0;
  const double m = std::max(taken, shortest);
  if (m == 0.0) return 1.0;
  return shortest / m;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// FNV-1a over the observation content.
inline std::uint64_t observation_digest(const Observation& obs) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  mix(std::uint64_t(obs.floor));
  mix(std::uint64_t(std::uint32_t(obs.cell.x)) | (std::uint64_t(std::uint32_t(obs.cell.y)) << 32));
  mix(std::uint64_t(obs.heading));
  mix(std::uint64_t(obs.timestep));
  for (const auto& v : obs.visible) {
    mix(std::uint64_t(std::uint32_t(v.cell.x)) | (std::uint64_t(std::uint32_t(v.cell.y)) << 32));
    mix(std::uint64_t(v.occupied) | (std::uint64_t(v.is_stair) << 1) |
        (std::uint64_t(std::uint32_t(v.reported_category.value_or(-1))) << 8));
    mix(std::bit_cast<std::uint64_t>(v.seg_confidence));
  }
  return h;
}

inline nlohmann::json cell_json(Cell c) { return nlohmann::json::array({c.x, c.y}); }

/// JSON has no infinity; unreachable distances are written as null.
inline nlohmann::json distance_json(double d) { return std::isfinite(d) ? nlohmann::json(d) : nlohmann::json(nullptr); }
inline double distance_from_json(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }

using TrajectorySink = std::function<void(const nlohmann::json&)>;

/// Builds the advisor the configuration asks for.
inline std::unique_ptr<Advisor> make_advisor(const RunConfig& cfg) {
  if (cfg.advisor.remote)
    return std::make_unique<RemoteAdvisor>(std::make_shared<HttpChatTransport>(cfg.advisor.endpoint));
  return std::make_unique<StubAdvisor>();
}

/// Closed-loop controller plus world for one episode, advanced one timestep
/// at a time.
class EpisodeRunner {
 public:
  EpisodeRunner(const Scene& scene, EpisodeSpec spec, const RunConfig& cfg, std::uint64_t seed, Advisor* advisor,
                TrajectorySink sink = {}, std::string episode_id = {}, nlohmann::json scene_source = nullptr)
      : scene_(scene),
        spec_(std::move(spec)),
        cfg_(cfg),
        mfnp_cfg_(cfg.effective_mfnp()),
        advisor_(advisor),
        sink_(std::move(sink)),
        rng_(seed),
        agent_(spec_.initial_state()),
        map_(scene.category_count(), spec_.start_cell, cfg.map),
        stats_(scene.category_count(), spec_.max_steps, cfg.mfnp.delta_t) {
    validate_episode(scene_, spec_);
    mfnp_cfg_.validate(spec_.max_steps);
    result_.episode_id = std::move(episode_id);
    if (sink_) {
      sink_ = [inner = std::move(sink_), id = result_.episode_id](const nlohmann::json& ev) {
        if (ev.contains("episode_id")) return inner(ev);
        nlohmann::json tagged = ev;
        tagged["episode_id"] = id;
        inner(tagged);
      };
    }
    result_.oracle_shortest_m = oracle_geodesic(scene_, agent_, spec_.target_category);
    target_name_ = scene_.category_names()[std::size_t(spec_.target_category)];
    if (sink_) {
      sink_({{"event", "episode_start"},
             {"episode_id", result_.episode_id},
             {"seed", seed},
             {"scene", scene_source},
             {"spec",
              {{"scene_id", spec_.scene_id},
               {"start_floor", spec_.start_floor},
               {"start_cell", cell_json(spec_.start_cell)},
               {"start_heading", heading_name(spec_.start_heading)},
               {"target_category", spec_.target_category},
               {"target_name", target_name_},
               {"max_steps", spec_.max_steps},
               {"success_dist_m", spec_.success_dist_m}}},
             {"cell_size_m", scene_.cell_size_m()},
             {"oracle_shortest_m", distance_json(result_.oracle_shortest_m)}});
    }
  }

  bool done() const { return agent_.terminated; }
  const AgentState& agent() const { return agent_; }
  const SemanticMap& map() const { return map_; }
  const ExplorationStats& stats() const { return stats_; }
  const InterfloorState& interfloor() const { return if_; }
  const MfnpTerms& last_terms() const { return terms_; }
  const std::optional<Cell>& waypoint() const { return waypoint_; }

  /// Runs one perceive-decide-act cycle.
  void step_once() {
    if (agent_.terminated) throw std::logic_error("episode already finished");
    const int t = agent_.timestep;
    const Observation obs = observe(scene_, agent_, cfg_.noise, rng_, cfg_.sensor);
    map_.integrate(obs);
    stats_.update(map_, obs);
    repeats_.tick();

    update_p_llm(t);
    terms_ = compute_metric(stats_, mfnp_cfg_);
    FloorDecision decision = FloorDecision::Stay;

    std::string mode;
    Action action = Action::TurnLeft;
    std::optional<Cell> goal;

    std::optional<Cell> target;
    if (!if_.active()) target = detect_target();

    if (target) {
      mode = "target";
      const Cell a = map_.agent_cell();
      if (euclidean(a, *target) * scene_.cell_size_m() < spec_.success_dist_m) {
        action = Action::Stop;
      } else {
        goal = target;
        action = plan_action(*target, true);
      }
    } else {
      if (!cfg_.ablation.no_mfnp && if_.mfnp_allowed(t)) {
        decision = should_go_multifloor(map_.stair_present(), t, spec_.max_steps, terms_.value, mfnp_cfg_);
        if (decision == FloorDecision::Go) {
          const Phase before = if_.phase;
          const auto r = activate(map_, if_, t, cfg_.interfloor);
          if (r == ActivationResult::Activated) {
            if (!result_.mfnp_triggered) result_.trigger_timestep = t;
            result_.mfnp_triggered = true;
            emit_phase(t, before, "mfnp_go");
          } else if (r == ActivationResult::Aborted) {
            emit({{"event", "interfloor_abort"}, {"t", t}, {"cooldown_until", if_.cooldown_until}});
          }
        }
      }

      bool explore = true;
      if (if_.active()) {
        explore = false;
        mode = "interfloor";
        const Phase before = if_.phase;
        const Directive d = tick(map_, if_, t, cfg_.interfloor);
        if (if_.phase != before) emit_phase(t, before, d.kind == Directive::Kind::Reset ? "reset" : "advance");
        switch (d.kind) {
          case Directive::Kind::NavigateTo:
            goal = d.target;
            if (d.target == map_.agent_cell()) {
              action = Action::TurnLeft;
            } else {
              action = plan_action(d.target, false);
            }
            break;
          case Directive::Kind::LookAround: action = Action::TurnLeft; break;
          case Directive::Kind::Reset:
            start_new_epoch(t);
            action = Action::TurnLeft;
            break;
          case Directive::Kind::None: explore = true; break;
        }
      }
      if (explore) {
        mode = "explore";
        action = explore_action(t, mode, goal);
      }
    }

    const StepOutcome out = step(scene_, agent_, action, spec_.max_steps);
    if (out.moved) {
      result_.path_length_m += scene_.cell_size_m();
      ++moves_;
    }
    if (out.floor_changed) {
      ++result_.floor_changes;
      if (cfg_.reset_on_floor_change && if_.active()) {
        const Phase before = if_.phase;
        finish_interfloor(map_, if_, agent_.timestep, cfg_.interfloor);
        emit_phase(agent_.timestep, before, "floor_change");
        start_new_epoch(agent_.timestep);
      }
    }

    if (sink_) {
      nlohmann::json ev = {{"event", "step"},
                           {"t", t},
                           {"action", action_name(action)},
                           {"moved", out.moved},
                           {"collision", out.collision},
                           {"floor_changed", out.floor_changed},
                           {"floor", agent_.floor},
                           {"cell", cell_json(agent_.cell)},
                           {"heading", heading_name(agent_.heading)},
                           {"mode", mode},
                           {"phase", phase_name(if_.phase)},
                           {"obs_digest", observation_digest(obs)},
                           {"mfnp",
                            {{"f", terms_.time_validity},
                             {"object_ratio", terms_.object_ratio},
                             {"area_growth", terms_.area_growth},
                             {"p_llm", terms_.p_llm},
                             {"n", terms_.value},
                             {"decision", decision == FloorDecision::Go ? "go" : "stay"}}}};
      if (goal) ev["goal_world"] = cell_json(map_.to_world(*goal));
      sink_(ev);
    }

    if (agent_.terminated) finish(out);
  }

  /// Runs to termination and returns the metrics.
  EpisodeResult run() {
    while (!agent_.terminated) step_once();
    return result_;
  }

  const EpisodeResult& result() const { return result_; }

 private:
  // -- perception -------------------------------------------------------------

  /// Confirmed target cell closest to the agent, or nullopt. Candidates are
  /// map cells labeled with the target category whose fused confidence
  /// clears tau_conf.
  std::optional<Cell> detect_target() {
    const Rect r = map_.explored_bounds();
    if (r.empty()) return std::nullopt;
    std::vector<Cell> confirmed;
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x) {
        const Cell c{x, y};
        if (!map_.labeled(spec_.target_category, c)) continue;
        const double p_seg = map_.confidence(spec_.target_category, c);
        const double p_vlm =
            stub_vlm_check(scene_, agent_.floor, map_.to_world(c), spec_.target_category, cfg_.vlm_reliability);
        if (fuse_detection(p_seg, p_vlm, cfg_.beta) >= cfg_.tau_conf) confirmed.push_back(c);
      }
    if (confirmed.empty()) return std::nullopt;
    const Cell a = map_.agent_cell();
    std::sort(confirmed.begin(), confirmed.end(), [&](Cell p, Cell q) {
      const double dp = euclidean(a, p), dq = euclidean(a, q);
      return dp != dq ? dp < dq : p < q;
    });
    return confirmed.front();
  }

  void update_p_llm(int t) {
    MultifloorQuery q;
    q.timestep = t;
    q.max_steps = spec_.max_steps;
    q.total_categories = scene_.category_count();
    q.delta_t = cfg_.mfnp.delta_t;
    q.area_growth = stats_.area_growth();
    q.target_name = target_name_;
    for (int c = 0; c < scene_.category_count(); ++c)
      if (stats_.seen_categories()[std::size_t(c)]) q.seen_categories.push_back(scene_.category_names()[std::size_t(c)]);

    if (!advisor_ || advisor_->provenance() != Provenance::Remote) {
      StubAdvisor stub;
      stats_.set_p_llm((advisor_ ? advisor_ : &stub)->multifloor_probability(q));
      return;
    }
    // Remote queries: only while a go decision is possible, at most once per
    // query_interval.
    const bool gated = !cfg_.ablation.no_mfnp && if_.mfnp_allowed(t) && map_.stair_present() &&
                       in_trigger_window(t, spec_.max_steps, mfnp_cfg_);
    if (!gated || (last_llm_query_ >= 0 && t - last_llm_query_ < cfg_.advisor.query_interval)) return;
    last_llm_query_ = t;
    try {
      stats_.set_p_llm(advisor_->multifloor_probability(q));
      emit({{"event", "advisor"}, {"t", t}, {"kind", "multifloor"}, {"transcript", advisor_->last_transcript()}});
    } catch (const AdvisorError& e) {
      ++result_.advisor_failures;
      stats_.set_p_llm(StubAdvisor{}.multifloor_probability(q));
      emit({{"event", "advisor_fallback"}, {"t", t}, {"kind", "multifloor"}, {"error", e.what()}});
    }
  }

  // -- planning ---------------------------------------------------------------

  bool stairs_allowed() const { return if_.active() || map_.stair(map_.agent_cell()); }

  DistanceField execution_field(bool optimistic) const {
    const Cell a = map_.agent_cell();
    return solve_fmm(map_, std::span<const Cell>(&a, 1), {optimistic, stairs_allowed()});
  }

  /// First action along the shortest path to `goal`; falls back to the
  /// optimistic field (unexplored cells passable) when allowed.
  Action plan_action(Cell goal, bool allow_optimistic) {
    for (bool optimistic : {false, true}) {
      if (optimistic && !allow_optimistic) break;
      const DistanceField field = execution_field(optimistic);
      if (!field.finite(goal)) continue;
      try {
        const auto path = extract_path(field, goal);
        return next_action(path, agent_.heading).value_or(Action::TurnLeft);
      } catch (const NoPathError&) {
      }
    }
    ++result_.planner_failures;
    return Action::TurnLeft;
  }

  Action explore_action(int t, std::string& mode, std::optional<Cell>& goal) {
    const Cell a = map_.agent_cell();
    if (waypoint_ && look_at_) {
      if (a == *waypoint_) {
        const Heading want = *heading_of(*look_at_ - a);
        if (agent_.heading != want) return want == turned_right(agent_.heading) ? Action::TurnRight : Action::TurnLeft;
        reached_.insert(*look_at_);
        reached_.insert(*waypoint_);
        waypoint_.reset();
        look_at_.reset();
      }
    } else if (waypoint_ && waypoint_reached(a, *waypoint_)) {
      reached_.insert(*waypoint_);
      waypoint_.reset();
    }
    bool stale = !waypoint_ || t - selected_at_ >= cfg_.replan_interval;
    if (!stale && look_at_) stale = map_.explored(*look_at_) && !is_frontier(map_, *look_at_);
    if (!stale && !look_at_) stale = !is_frontier(map_, *waypoint_);
    if (stale) select_new_waypoint(t);
    if (repeats_.free_explore()) mode = "free_explore";
    if (!waypoint_) {
      mode = "spin";
      return Action::TurnLeft;
    }
    goal = waypoint_;
    const DistanceField field = execution_field(false);
    try {
      const auto path = extract_path(field, *waypoint_);
      return next_action(path, agent_.heading).value_or(Action::TurnLeft);
    } catch (const NoPathError&) {
      ++result_.planner_failures;
      reached_.insert(look_at_ ? *look_at_ : *waypoint_);
      waypoint_.reset();
      look_at_.reset();
      return Action::TurnLeft;
    }
  }

  void select_new_waypoint(int t) {
    waypoint_.reset();
    look_at_.reset();
    selected_at_ = t;
    const Cell a = map_.agent_cell();
    const DistanceField exec = execution_field(false);

    auto cands = extract_candidates(map_, cfg_.frontier);
    std::erase_if(cands, [&](const CandidateWaypoint& c) { return reached_.count(c.cell) || !exec.finite(c.cell); });
    if (!cands.empty()) {
      const DistanceField cand_field = solve_fmm(map_, std::span<const Cell>(&a, 1), {true, stairs_allowed()});
      score_candidates(cands, cand_field, cfg_.frontier.alpha);
      const Selection sel =
          select_waypoint(cands, target_name_, t, advisor_, repeats_, map_.to_world(a), cfg_.selection);
      if (sel.advisor_failed) {
        ++result_.advisor_failures;
        emit({{"event", "advisor_fallback"}, {"t", t}, {"kind", "waypoint"}});
      } else if (sel.scores.provenance == Provenance::Remote) {
        emit({{"event", "advisor"}, {"t", t}, {"kind", "waypoint"}, {"transcript", sel.scores.transcript}});
      }
      waypoint_ = cands[sel.index].cell;
      return;
    }

    // No qualifying region: stand on the nearest raw frontier cell and face
    // its unexplored side. Cells the planner may not enter (stair openings)
    // are viewed from a reachable neighbor instead.
    double best = kInf;
    for (Cell c : frontier_cells(map_)) {
      if (reached_.count(c)) continue;
      if (exec.finite(c)) {
        if (exec[c] < best) {
          for (Cell d : kNeighbors4) {
            if (map_.in_bounds(c + d) && !map_.explored(c + d)) {
              best = exec[c];
              waypoint_ = c;
              look_at_ = c + d;
              break;
            }
          }
        }
        continue;
      }
      for (Cell d : kNeighbors4) {
        const Cell v = c + d;
        if (exec[v] < best) {
          best = exec[v];
          waypoint_ = v;
          look_at_ = c;
        }
      }
    }
  }

  void start_new_epoch(int t) {
    stats_.new_epoch(t);
    repeats_.clear();
    waypoint_.reset();
    look_at_.reset();
    reached_.clear();
    last_llm_query_ = -1;
  }

  // -- bookkeeping ------------------------------------------------------------

  void emit(const nlohmann::json& ev) {
    if (sink_) sink_(ev);
  }

  void emit_phase(int t, Phase from, const char* cause) {
    if (!sink_) return;
    nlohmann::json ev = {{"event", "phase"},
                         {"t", t},
                         {"from", phase_name(from)},
                         {"to", phase_name(if_.phase)},
                         {"cause", cause}};
    if (if_.phase == Phase::Traversing && from == Phase::RoutingToStairs) {
      nlohmann::json sealed = nlohmann::json::array();
      for (Cell c : if_.entrance_cells) sealed.push_back(cell_json(map_.to_world(c)));
      ev["sealed_world"] = sealed;
    }
    if (if_.phase == Phase::RoutingToStairs) ev["stair_goal_world"] = cell_json(map_.to_world(if_.stair_goal));
    sink_(ev);
  }

  void finish(const StepOutcome& out) {
    result_.steps_used = agent_.timestep;
    result_.dropped_cells = map_.dropped_count();
    if (out.stopped) {
      result_.success = within_success_radius(scene_, agent_, spec_.target_category, spec_.success_dist_m);
      result_.termination = result_.success ? Termination::StoppedSuccess : Termination::StoppedFailure;
    } else {
      result_.success = false;
      result_.termination = Termination::Timeout;
    }
    result_.dtg_m = oracle_geodesic(scene_, agent_, spec_.target_category);
    result_.spl = spl(result_.success, result_.oracle_shortest_m, result_.path_length_m);
    if (!cfg_.debug_dump_dir.empty())
      dump_map(map_, cfg_.debug_dump_dir, result_.episode_id.empty() ? "episode" : result_.episode_id);
    if (sink_) {
      nlohmann::json stair = nullptr;
      if (agent_.stair)
        stair = {{"stairwell", agent_.stair->stairwell},
                 {"index", agent_.stair->index},
                 {"direction", agent_.stair->direction}};
      sink_({{"event", "episode_end"},
             {"episode_id", result_.episode_id},
             {"success", result_.success},
             {"termination", termination_name(result_.termination)},
             {"steps", result_.steps_used},
             {"moves", moves_},
             {"path_length_m", result_.path_length_m},
             {"oracle_shortest_m", distance_json(result_.oracle_shortest_m)},
             {"spl", result_.spl},
             {"dtg_m", distance_json(result_.dtg_m)},
             {"mfnp_triggered", result_.mfnp_triggered},
             {"trigger_timestep", result_.trigger_timestep},
             {"floor_changes", result_.floor_changes},
             {"advisor_failures", result_.advisor_failures},
             {"planner_failures", result_.planner_failures},
             {"final",
              {{"floor", agent_.floor},
               {"cell", cell_json(agent_.cell)},
               {"heading", heading_name(agent_.heading)},
               {"stair", stair}}}});
    }
  }

  const Scene& scene_;
  EpisodeSpec spec_;
  const RunConfig& cfg_;
  MfnpConfig mfnp_cfg_;
  Advisor* advisor_;
  TrajectorySink sink_;
  std::mt19937_64 rng_;

  AgentState agent_;
  SemanticMap map_;
  ExplorationStats stats_;
  InterfloorState if_;
  RepeatDetector repeats_;
  MfnpTerms terms_;

  std::string target_name_;
  std::optional<Cell> waypoint_;
  std::optional<Cell> look_at_;  // frontier cell to face once at waypoint_
  int selected_at_ = 0;
  std::set<Cell> reached_;
  int last_llm_query_ = -1;
  long moves_ = 0;
  EpisodeResult result_;
};

inline EpisodeResult run_episode(const Scene& scene, const EpisodeSpec& spec, const RunConfig& cfg,
                                 std::uint64_t seed, Advisor* advisor, TrajectorySink sink = {},
                                 const std::string& episode_id = {}, const nlohmann::json& scene_source = nullptr) {
  EpisodeRunner runner(scene, spec, cfg, seed, advisor, std::move(sink), episode_id, scene_source);
  return runner.run();
}

// ---------------------------------------------------------------------------
// Batches

struct EpisodeJob {
  std::string id;
  std::shared_ptr<const Scene> scene;
  nlohmann::json scene_source;  // enough to rebuild the scene for replay
  EpisodeSpec spec;
  std::uint64_t seed = 0;
};

/// Expands the episode sets of `cfg` into concrete jobs. Relative scene
/// paths resolve against `base_dir`.
inline std::vector<EpisodeJob> build_jobs(const RunConfig& cfg, const std::filesystem::path& base_dir = {}) {
  std::vector<EpisodeJob> jobs;
  for (const auto& set : cfg.episodes) {
    std::shared_ptr<const Scene> file_scene;
    nlohmann::json file_source;
    if (!set.scene_file.empty()) {
      std::filesystem::path p(set.scene_file);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      file_scene = std::make_shared<const Scene>(load_scene(p.string()));
      file_source = {{"kind", "file"}, {"path", std::filesystem::absolute(p).string()}};
    }
    for (int i = 0; i < set.count; ++i) {
      EpisodeJob job;
      job.id = set.id_prefix + "-" + std::to_string(i);
      const std::uint64_t base = splitmix64(set.seed * 0x100000001b3ull + std::uint64_t(i));
      if (set.generate) {
        const std::uint64_t scene_seed = splitmix64(base ^ 0x5ce11e5ull);
        job.scene = std::make_shared<const Scene>(generate_scene(*set.generate, scene_seed));
        job.scene_source = {{"kind", "generated"}, {"params", *set.generate}, {"seed", scene_seed}};
      } else {
        job.scene = file_scene;
        job.scene_source = file_source;
      }
      EpisodeSampling sampling;
      sampling.placement = set.placement;
      sampling.start_floor = set.start_floor;
      sampling.max_steps = cfg.max_steps;
      sampling.success_dist_m = cfg.success_dist_m;
      job.spec = sample_episode(*job.scene, sampling, splitmix64(base ^ 0xe915de5ull), job.id);
      job.seed = splitmix64(base ^ cfg.seed);
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

struct BatchOutput {
  std::vector<EpisodeResult> results;                    // in job order
  std::vector<std::vector<nlohmann::json>> trajectories;  // empty unless enabled
};

/// Runs every job on a worker pool. Failures are recorded per episode with
/// termination "error"; results do not depend on the thread count.
inline BatchOutput run_batch(const std::vector<EpisodeJob>& jobs, const RunConfig& cfg) {
  BatchOutput out;
  out.results.resize(jobs.size());
  if (cfg.trajectory) out.trajectories.resize(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      TrajectorySink sink;
      if (cfg.trajectory) sink = [&log = out.trajectories[i]](const nlohmann::json& ev) { log.push_back(ev); };
      try {
        auto advisor = make_advisor(cfg);
        out.results[i] = run_episode(*job.scene, job.spec, cfg, job.seed, advisor.get(), sink, job.id, job.scene_source);
      } catch (const std::exception& e) {
        EpisodeResult r;
        r.episode_id = job.id;
        r.termination = Termination::Error;
        r.error = e.what();
        out.results[i] = r;
        if (cfg.trajectory)
          out.trajectories[i].push_back({{"event", "episode_error"}, {"episode_id", job.id}, {"error", e.what()}});
      }
    }
  };

  unsigned n = cfg.threads > 0 ? unsigned(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, unsigned(std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_results_csv(const std::vector<EpisodeResult>& results, std::ostream& out) {
  out << "episode_id,success,spl,dtg_m,steps,mfnp_triggered,floor_changes,termination\n";
  for (const auto& r : results) {
    out << r.episode_id << ',' << int(r.success) << ',' << format_double(r.spl) << ',' << format_double(r.dtg_m) << ','
        << r.steps_used << ',' << int(r.mfnp_triggered) << ',' << r.floor_changes << ','
        << termination_name(r.termination) << '\n';
  }
}

struct BatchSummary {
  int episodes = 0;
  int errors = 0;
  double success_rate = 0.0;
  double spl = 0.0;
  double dtg_m = 0.0;  // mean over episodes with a finite distance
  double mfnp_trigger_rate = 0.0;
};

inline BatchSummary summarize(const std::vector<EpisodeResult>& results) {
  BatchSummary s;
  s.episodes = int(results.size());
  int finite = 0;
  for (const auto& r : results) {
    s.errors += r.termination == Termination::Error;
    s.success_rate += r.success;
    s.spl += r.spl;
    s.mfnp_trigger_rate += r.mfnp_triggered;
    if (std::isfinite(r.dtg_m)) {
      s.dtg_m += r.dtg_m;
      ++finite;
    }
  }
  if (s.episodes > 0) {
    s.success_rate /= s.episodes;
    s.spl /= s.episodes;
    s.mfnp_trigger_rate /= s.episodes;
  }
  s.dtg_m = finite > 0 ? s.dtg_m / finite : kInf;
  return s;
}

inline nlohmann::json summary_json(const BatchSummary& s) {
  return {{"episodes", s.episodes},       {"errors", s.errors},
          {"success_rate", s.success_rate}, {"spl", s.spl},
          {"dtg_m", distance_json(s.dtg_m)}, {"mfnp_trigger_rate", s.mfnp_trigger_rate}};
}

/// One JSON object per line, episodes in job order.
inline void write_trajectories(const std::vector<std::vector<nlohmann::json>>& logs, std::ostream& out) {
  for (const auto& log : logs)
    for (const auto& ev : log) out << ev.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayResult {
  std::string episode_id;
  bool success = false;
  double spl = 0.0;
  double dtg_m = kInf;
  double recorded_spl = 0.0;
  double recorded_dtg_m = kInf;
  bool complete = false;  // an episode_end record was found
};

inline Scene scene_from_source(const nlohmann::json& source) {
  if (!source.is_object()) throw std::invalid_argument("trajectory carries no scene source");
  const std::string kind = source.at("kind").get<std::string>();
  if (kind == "generated")
    return generate_scene(source.at("params").get<SceneGenParams>(), source.at("seed").get<std::uint64_t>());
  if (kind == "file") return load_scene(source.at("path").get<std::string>());
  if (kind == "inline") return scene_from_json(source.at("scene"));
  throw std::invalid_argument("unknown scene source kind " + kind);
}

/// Recomputes SPL and distance-to-goal for one episode's events from the
/// recorded moves and the ground-truth scene.
inline ReplayResult replay_episode(const std::vector<nlohmann::json>& events) {
  ReplayResult r;
  const nlohmann::json* start = nullptr;
  const nlohmann::json* end = nullptr;
  for (const auto& ev : events) {
    const auto kind = ev.at("event").get<std::string>();
    if (kind == "episode_start") start = &ev;
    if (kind == "episode_end") end = &ev;
  }
  if (!start) throw std::invalid_argument("trajectory has no episode_start");
  r.episode_id = start->at("episode_id").get<std::string>();
  if (!end) return r;
  r.complete = true;

  const Scene scene = scene_from_source(start->at("scene"));
  const auto& spec = start->at("spec");
  AgentState s0;
  s0.floor = spec.at("start_floor").get<int>();
  s0.cell = {spec.at("start_cell")[0].get<int>(), spec.at("start_cell")[1].get<int>()};
  const int target = spec.at("target_category").get<int>();
  const double d = spec.at("success_dist_m").get<double>();

  double taken = 0.0;
  bool stopped = false;
  for (const auto& ev : events) {
    if (ev.at("event") != "step") continue;
    if (ev.at("moved").get<bool>()) taken += scene.cell_size_m();
    stopped = ev.at("action") == "stop";
  }

  const auto& fin = end->at("final");
  AgentState s1;
  s1.floor = fin.at("floor").get<int>();
  s1.cell = {fin.at("cell")[0].get<int>(), fin.at("cell")[1].get<int>()};
  if (!fin.at("stair").is_null()) {
    const auto& st = fin.at("stair");
    s1.stair = StairTraversal{st.at("stairwell").get<int>(), st.at("index").get<int>(), st.at("direction").get<int>()};
  }

  const double shortest = oracle_geodesic(scene, s0, target);
  r.success = stopped && within_success_radius(scene, s1, target, d);
  r.spl = spl(r.success, shortest, taken);
  r.dtg_m = oracle_geodesic(scene, s1, target);
  r.recorded_spl = end->at("spl").get<double>();
  r.recorded_dtg_m = distance_from_json(end->at("dtg_m"));
  return r;
}

/// Groups JSONL events by episode and replays each.
inline std::vector<ReplayResult> replay_jsonl(std::istream& in) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<nlohmann::json>> by_episode;
  std::string current;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto ev = nlohmann::json::parse(line);
    if (ev.contains("episode_id")) current = ev["episode_id"].get<std::string>();
    if (!by_episode.count(current)) order.push_back(current);
    by_episode[current].push_back(std::move(ev));
  }
  std::vector<ReplayResult> out;
  for (const auto& id : order) {
    bool has_start = false;
    for (const auto& ev : by_episode[id]) has_start |= ev.at("event") == "episode_start";
    if (has_start) out.push_back(replay_episode(by_episode[id]));
  }
  return out;
}

}  // namespace mfnav
