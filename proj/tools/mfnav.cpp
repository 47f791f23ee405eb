#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <mfnav/mfnav.hpp>

namespace fs = std::filesystem;
using namespace mfnav;

namespace {

struct RunArgs {
  std::string config;
  std::string out_dir = "mfnav_out";
  int threads = -1;
  long long seed = -1;
  bool no_trajectory = false;
  AblationFlags ablation;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("-c,--config", a.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out-dir", a.out_dir, "Output directory");
  cmd->add_option("-j,--threads", a.threads, "Worker threads (0: all cores)");
  cmd->add_option("--seed", a.seed, "Override the global seed");
  cmd->add_flag("--no-trajectory", a.no_trajectory, "Skip the JSONL trajectory dump");
}

void add_ablation_flags(CLI::App* cmd, AblationFlags& f) {
  cmd->add_flag("--no-mfnp", f.no_mfnp, "Never take the stairs");
  cmd->add_flag("--no-timestep", f.no_timestep, "Drop the time-validity term");
  cmd->add_flag("--no-objects", f.no_objects, "Drop the object-coverage term");
  cmd->add_flag("--no-explored", f.no_explored, "Drop the area-stagnation term");
  cmd->add_flag("--no-llm", f.no_llm, "Drop the advisor probability term");
}

int do_run(const RunArgs& a) {
  RunConfig cfg = load_config(a.config);
  if (a.threads >= 0) cfg.threads = a.threads;
  if (a.seed >= 0) cfg.seed = std::uint64_t(a.seed);
  if (a.no_trajectory) cfg.trajectory = false;
  cfg.ablation.no_mfnp |= a.ablation.no_mfnp;
  cfg.ablation.no_timestep |= a.ablation.no_timestep;
  cfg.ablation.no_objects |= a.ablation.no_objects;
  cfg.ablation.no_explored |= a.ablation.no_explored;
  cfg.ablation.no_llm |= a.ablation.no_llm;
  cfg.validate();
  if (cfg.episodes.empty()) throw ConfigError("config lists no episodes");

  const auto jobs = build_jobs(cfg, fs::path(a.config).parent_path());
  const auto out = run_batch(jobs, cfg);

  fs::create_directories(a.out_dir);
  {
    std::ofstream csv(fs::path(a.out_dir) / "results.csv");
    write_results_csv(out.results, csv);
  }
  const BatchSummary s = summarize(out.results);
  nlohmann::json summary = summary_json(s);
  summary["ablation"] = {{"no_mfnp", cfg.ablation.no_mfnp},
                         {"no_timestep", cfg.ablation.no_timestep},
                         {"no_objects", cfg.ablation.no_objects},
                         {"no_explored", cfg.ablation.no_explored},
                         {"no_llm", cfg.ablation.no_llm}};
  std::ofstream(fs::path(a.out_dir) / "summary.json") << summary.dump(2) << '\n';
  if (cfg.trajectory) {
    std::ofstream jsonl(fs::path(a.out_dir) / "trajectories.jsonl");
    write_trajectories(out.trajectories, jsonl);
  }

  std::printf("episodes %d  SR %.3f  SPL %.3f  DTG %.3f m  triggered %.3f  errors %d\n", s.episodes, s.success_rate,
              s.spl, s.dtg_m, s.mfnp_trigger_rate, s.errors);
  for (const auto& r : out.results)
    if (r.termination == Termination::Error) std::fprintf(stderr, "%s: %s\n", r.episode_id.c_str(), r.error.c_str());
  return s.errors > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-floor object navigation simulator"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a scene file");
  SceneGenParams gp;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "scene.json";
  gen->add_option("--floors", gp.floors, "Floors (1-3)");
  gen->add_option("--width", gp.width);
  gen->add_option("--height", gp.height);
  gen->add_option("--rooms", gp.rooms, "Rooms per floor");
  gen->add_option("--density", gp.object_density, "Objects per walkable cell");
  gen->add_option("--categories", gp.categories);
  gen->add_option("--exclusive", gp.exclusive_categories_per_floor, "Categories owned by a single floor");
  gen->add_option("--stair-length", gp.stair_length);
  gen->add_option("--cell-size", gp.cell_size_m, "Meters per cell");
  gen->add_option("--seed", gen_seed);
  gen->add_option("-o,--out", gen_out);

  // run / ablate
  RunArgs run_args, ablate_args;
  auto* run = app.add_subcommand("run", "Run the episodes of a config");
  add_run_options(run, run_args);
  add_ablation_flags(run, run_args.ablation);
  auto* ablate = app.add_subcommand("ablate", "Run a config with MFNP terms switched off");
  add_run_options(ablate, ablate_args);
  add_ablation_flags(ablate, ablate_args.ablation);

  // replay
  auto* replay = app.add_subcommand("replay", "Recompute SPL/DTG from a trajectory dump");
  std::string replay_in;
  double tol = 1e-12;
  replay->add_option("trajectory", replay_in, "trajectories.jsonl")->required()->check(CLI::ExistingFile);
  replay->add_option("--tolerance", tol);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Scene s = generate_scene(gp, gen_seed);
      if (fs::path(gen_out).has_parent_path()) fs::create_directories(fs::path(gen_out).parent_path());
      save_scene(s, gen_out);
      std::printf("wrote %s (%d floors, %zu stairwells, %zu objects)\n", gen_out.c_str(), s.floor_count(),
                  s.stairwells().size(), s.objects().size());
      return 0;
    }
    if (*run) return do_run(run_args);
    if (*ablate) {
      const auto& f = ablate_args.ablation;
      if (!(f.no_mfnp || f.no_timestep || f.no_objects || f.no_explored || f.no_llm)) {
        std::fprintf(stderr, "ablate: pass at least one --no-* flag\n");
        return 2;
      }
      return do_run(ablate_args);
    }
    if (*replay) {
      std::ifstream in(replay_in);
      int mismatches = 0;
      for (const auto& r : replay_jsonl(in)) {
        if (!r.complete) {
          std::printf("%s incomplete\n", r.episode_id.c_str());
          continue;
        }
        auto close = [tol](double a, double b) { return (std::isinf(a) && a == b) || std::abs(a - b) <= tol; };
        const bool ok = close(r.spl, r.recorded_spl) && close(r.dtg_m, r.recorded_dtg_m);
        mismatches += !ok;
        std::printf("%s success=%d spl=%s dtg_m=%s %s\n", r.episode_id.c_str(), int(r.success),
                    format_double(r.spl).c_str(), format_double(r.dtg_m).c_str(), ok ? "ok" : "MISMATCH");
      }
      return mismatches > 0 ? 1 : 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
