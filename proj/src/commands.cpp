#include "dcil/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>
#include <openssl/sha.h>

#include "dcil/checkpoint.hpp"
#include "dcil/error.hpp"

namespace dcil {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

void make_dirs(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

}  // namespace

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError&) {
    return exit_config;
  } catch (const PlanningFailed&) {
    return exit_planning;
  } catch (const NumericalDivergence&) {
    return exit_divergence;
  } catch (...) {
    return exit_error;
  }
}

int verbosity_from_env() {
  const char* v = std::getenv("DCIL_VERBOSE");
  if (v == nullptr || *v == '\0') return 1;
  return std::atoi(v);
}

std::string git_blob_sha1(const std::string& bytes) {
  const std::string blob = "blob " + std::to_string(bytes.size()) + '\0' + bytes;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
  std::string hex;
  for (unsigned char c : md) hex += fmt::format("{:02x}", c);
  return hex;
}

GenerateDemoResult cmd_generate_demo(const GenerateDemoOptions& opt, std::ostream& log,
                                     int verbosity) {
  TrainConfig cfg = opt.config_path.empty() ? default_config("dubins")
                                            : load_train_config(opt.config_path);
  if (!opt.maze_path.empty()) cfg.maze = load_maze(opt.maze_path);
  const DubinsEnv env(cfg.maze, cfg.dubins);

  GenerateDemoResult r;
  int tries = 1;
  std::optional<std::pair<int, int>> band = opt.goal_band;
  if (!band && cfg.demo_max_goals > 0) band = std::pair{cfg.demo_min_goals, cfg.demo_max_goals};
  if (band) {
    auto plan = plan_with_goal_band(env, cfg.maze.start(), cfg.maze.target(),
                                    cfg.demo_target_radius, opt.seed, cfg.rrt, cfg.eps_dist,
                                    cfg.eps_success, band->first, band->second,
                                    opt.max_tries);
    r.demo = std::move(plan.demo);
    r.n_goals = plan.gseq.size();
    r.plan_seed = plan.seed;
    tries = plan.tries;
  } else {
    r.demo = rrt_plan(env, cfg.maze.start(), cfg.maze.target(), cfg.demo_target_radius,
                      opt.seed, cfg.rrt);
    r.n_goals = extract_goals(r.demo, cfg.eps_dist, cfg.eps_success).size();
    r.plan_seed = opt.seed;
  }

  if (opt.out.has_parent_path()) make_dirs(opt.out.parent_path());
  save_demonstration(r.demo, opt.out);
  const double length = projected_arc_length(r.demo);
  write_file(opt.out.string() + ".summary",
             fmt::format("seed = {}\nplan_seed = {}\ntries = {}\nstates = {}\n"
                         "arc_length = {}\ngoals = {}\neps_dist = {}\n",
                         opt.seed, r.plan_seed, tries, r.demo.states.size(), length, r.n_goals,
                         cfg.eps_dist));
  if (verbosity >= 1) {
    fmt::print(log, "demo: {} states, arc length {:.3f}, {} goals (plan seed {}) -> {}\n",
               r.demo.states.size(), length, r.n_goals, r.plan_seed, opt.out.string());
  }
  return r;
}

TrainOutput cmd_train(const std::filesystem::path& config_path,
                      const std::filesystem::path& demo_path,
                      const std::filesystem::path& out_dir, std::ostream& log, int verbosity) {
  const std::string config_text = read_file(config_path);
  const TrainConfig cfg = parse_train_config(config_text);
  const std::string demo_text = read_file(demo_path);
  const Demonstration demo = load_demonstration(demo_path);
  const GoalSequence gseq = extract_goals(demo, cfg.eps_dist, cfg.eps_success);

  make_dirs(out_dir);
  write_file(out_dir / "config.input.ini", config_text);
  write_file(out_dir / "config.ini", format_train_config(cfg));
  write_file(out_dir / "demo.csv", demo_text);
  save_goal_sequence(gseq, out_dir / "goals.txt");

  const std::string config_hash = git_blob_sha1(config_text);
  const std::string demo_hash = git_blob_sha1(demo_text);
  nlohmann::ordered_json manifest;
  manifest["seed"] = cfg.seed;
  manifest["mode"] = std::string(to_string(cfg.mode));
  manifest["env"] = cfg.env;
  manifest["budget"] = cfg.budget;
  manifest["n_goals"] = gseq.size();
  manifest["inputs"] = {
      {"config", {{"path", config_path.string()}, {"sha1", config_hash}}},
      {"demo", {{"path", demo_path.string()}, {"sha1", demo_hash}}},
  };
  manifest["inputs_sha1"] = git_blob_sha1(config_hash + "\n" + demo_hash + "\n");
  manifest["layout"] = {
      {"config", "config.ini"},         {"config_input", "config.input.ini"},
      {"demo", "demo.csv"},             {"goals", "goals.txt"},
      {"metrics", "metrics.csv"},       {"checkpoints", "checkpoints/step_<n>"},
      {"final_checkpoint", "checkpoints/final"},
  };
  manifest["reproduce"] = "dcil train config.ini demo.csv <out-dir>";
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::ofstream metrics(out_dir / "metrics.csv");
  if (!metrics) throw IoError("cannot write " + (out_dir / "metrics.csv").string());
  write_metrics_header(metrics, gseq.size());

  if (verbosity >= 1) {
    fmt::print(log, "train: mode {}, {} goals, budget {}, seed {} -> {}\n", to_string(cfg.mode),
               gseq.size(), cfg.budget, cfg.seed, out_dir.string());
  }
  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRow& row) {
    write_metrics_row(metrics, row);
    metrics.flush();
    if (verbosity >= 2) {
      fmt::print(log, "step {:>7}  eval goals {:>3}/{}  critic {:.4g}  actor {:.4g}\n", row.step,
                 row.eval_goals_reached, gseq.size(), row.critic_loss, row.actor_loss);
    }
  };
  hooks.on_checkpoint = [&](std::int64_t step, const SacAgent& agent) {
    save_checkpoint(out_dir / "checkpoints" / fmt::format("step_{}", step), cfg, gseq, step,
                    agent);
  };

  TrainOutput out{run_training(cfg, gseq, hooks), out_dir};
  save_checkpoint(out_dir / "checkpoints" / "final", cfg, gseq, out.result.steps,
                  out.result.agent);
  if (verbosity >= 1) {
    if (out.result.first_chain_success_step) {
      fmt::print(log, "first chain success at step {}\n", *out.result.first_chain_success_step);
    } else {
      fmt::print(log, "no chain success within {} steps\n", out.result.steps);
    }
  }
  return out;
}

EvalResult cmd_eval(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& demo_path, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(checkpoint_dir);
  const Demonstration demo = load_demonstration(demo_path);
  const GoalSequence gseq = extract_goals(demo, ck.config.eps_dist, ck.config.eps_success);
  if (gseq.size() != ck.gseq.size()) {
    throw ConfigError(fmt::format("demonstration yields {} goals but the checkpoint has {}",
                                  gseq.size(), ck.gseq.size()));
  }
  const DubinsEnv env(ck.config.maze, ck.config.dubins);
  const EvalResult r = evaluate(ck.agent, gseq, env, ck.config.t_max);
  fmt::print(out, "goals_reached {}/{}\nchain_success {}\nsteps {}\n", r.goals_reached,
             gseq.size(), r.chain_success, r.steps);
  return r;
}

ValueGrid cmd_value_map(const std::filesystem::path& checkpoint_dir, int index,
                        const std::filesystem::path& out_dir, int resolution, std::ostream& log) {
  if (resolution < 1) throw ConfigError("resolution: must be >= 1");
  const Checkpoint ck = load_checkpoint(checkpoint_dir);
  if (index < 1 || index > ck.gseq.size()) {
    throw IndexOutOfRange(fmt::format("index {} outside [1, {}]", index, ck.gseq.size()));
  }
  constexpr double pi = std::numbers::pi;
  const ValueGrid grid =
      export_value_grid(ck.agent, index, ck.gseq.goal(index), {0.0, pi / 2, pi, -pi / 2},
                        resolution, resolution, ck.config.maze.bounds());
  make_dirs(out_dir);
  write_value_grid(grid, ck.agent.v_max(), out_dir);
  fmt::print(log, "value map for index {} ({}x{}) -> {}\n", index, resolution, resolution,
             out_dir.string());
  return grid;
}

}  // namespace dcil
