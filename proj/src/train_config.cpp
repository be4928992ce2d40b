#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dcil/error.hpp"
#include "dcil/trainer.hpp"
#include "ini.hpp"

namespace dcil {

namespace detail {
MazeLayout maze_from_section(const ini::Tree& sec);
}

namespace {

struct EnvBlock {
  std::vector<int> hidden;
  int batch;
  double gamma, alpha, lr, eps_success, eps_dist;
  int t_max;
};

EnvBlock env_block(const std::string& env) {
  if (env == "dubins") return {{400, 300}, 256, 0.9, 1e-3, 1e-3, 0.1, 1.0, 25};
  if (env == "fetch") return {{512, 512, 512}, 256, 0.98, 1e-4, 1e-4, 0.05, 0.5, 100};
  if (env == "humanoid_locomotion") {
    return {{512, 512, 512}, 64, 0.98, 1e-4, 3e-4, 0.05, 0.5, 100};
  }
  if (env == "humanoid_standup") return {{512, 512, 512}, 64, 0.98, 1e-4, 3e-4, 0.05, 0.3, 100};
  if (env == "cassie_run") return {{512, 512, 512}, 64, 0.98, 1e-4, 3e-4, 0.05, 0.75, 100};
  throw ConfigError("train.env: unknown environment '" + env + "'");
}

std::vector<int> sizes(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (double v : ini::numbers(key, value)) {
    if (v < 1 || v != std::floor(v)) throw ConfigError(key + ": layer sizes must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError(key + ": at least one hidden layer");
  return out;
}

// Reads an optional scalar; conversion failures are reported with the key.
template <typename T>
void read(const ini::Tree& sec, const std::string& section, const std::string& key, T& dst) {
  const auto raw = sec.get_optional<std::string>(key);
  if (!raw) return;
  std::istringstream in(*raw);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    const std::string s = *raw;
    if (s == "true" || s == "1" || s == "yes") {
      v = true;
    } else if (s == "false" || s == "0" || s == "no") {
      v = false;
    } else {
      throw ConfigError(section + "." + key + ": expected a boolean, got '" + s + "'");
    }
  } else {
    if (!(in >> v) || !(in >> std::ws).eof()) {
      throw ConfigError(section + "." + key + ": cannot parse '" + *raw + "'");
    }
  }
  dst = v;
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

void validate(const TrainConfig& c) {
  require(c.budget >= 0, "train.budget", "must be >= 0");
  require(c.t_max >= 1, "train.t_max", "must be >= 1");
  require(c.eval_period >= 0, "train.eval_period", "must be >= 0");
  require(c.relabel_fraction >= 0.0 && c.relabel_fraction <= 1.0, "train.relabel_fraction",
          "must lie in [0, 1]");
  require(c.init_steps >= 0, "train.init_steps", "must be >= 0");
  require(c.window >= 1, "train.window", "must be >= 1");
  require(c.roulette_delta > 0.0, "train.roulette_delta", "must be > 0");
  require(c.buffer_capacity >= 1, "train.buffer_capacity", "must be >= 1");
  require(c.checkpoint_period >= 0, "train.checkpoint_period", "must be >= 0");
  require(c.eps_success > 0.0, "env.eps_success", "must be > 0");
  require(c.eps_dist > 0.0, "env.eps_dist", "must be > 0");
  require(c.dubins.speed > 0.0, "env.speed", "must be > 0");
  require(c.dubins.dt > 0.0, "env.dt", "must be > 0");
  require(c.dubins.substeps >= 1, "env.substeps", "must be >= 1");
  require(c.dubins.max_steer > 0.0, "env.max_steer", "must be > 0");
  require(c.sac.batch_size >= 1, "sac.batch_size", "must be >= 1");
  require(c.sac.gamma >= 0.0 && c.sac.gamma < 1.0, "sac.gamma", "must lie in [0, 1)");
  require(c.sac.alpha >= 0.0, "sac.alpha", "must be >= 0");
  require(c.sac.actor_lr > 0.0, "sac.actor_lr", "must be > 0");
  require(c.sac.critic_lr > 0.0, "sac.critic_lr", "must be > 0");
  require(c.sac.tau > 0.0 && c.sac.tau <= 1.0, "sac.tau", "must lie in (0, 1]");
  require(c.sac.log_std_min < c.sac.log_std_max, "sac.log_std_min", "must be < log_std_max");
  require(c.sac.preact_clip > 0.0, "sac.preact_clip", "must be > 0");
  require(c.rrt.max_nodes >= 1, "demo.max_nodes", "must be >= 1");
  require(c.rrt.k_extend >= 1, "demo.k_extend", "must be >= 1");
  require(c.rrt.goal_bias >= 0.0 && c.rrt.goal_bias <= 1.0, "demo.goal_bias",
          "must lie in [0, 1]");
  require(c.demo_target_radius > 0.0, "demo.target_radius", "must be > 0");
  require(c.demo_max_goals >= 0, "demo.max_goals", "must be >= 0");
  require(c.demo_max_goals == 0 || (c.demo_min_goals >= 1 && c.demo_min_goals <= c.demo_max_goals),
          "demo.min_goals", "must satisfy 1 <= min_goals <= max_goals");
}

}  // namespace

TrainConfig default_config(const std::string& env) {
  const EnvBlock b = env_block(env);
  TrainConfig c;
  c.env = env;
  c.sac.actor_hidden = c.sac.critic_hidden = b.hidden;
  c.sac.batch_size = b.batch;
  c.sac.gamma = b.gamma;
  c.sac.alpha = b.alpha;
  c.sac.actor_lr = c.sac.critic_lr = b.lr;
  c.eps_success = b.eps_success;
  c.eps_dist = b.eps_dist;
  c.t_max = b.t_max;
  return c;
}

TrainConfig parse_train_config(const std::string& text) {
  const auto tree = ini::parse(text);
  for (const auto& [name, _] : tree) {
    if (name != "train" && name != "env" && name != "sac" && name != "demo" && name != "maze") {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  const ini::Tree empty;
  const auto section = [&](const char* name) -> const ini::Tree& {
    const auto s = tree.get_child_optional(name);
    return s ? *s : empty;
  };

  const auto& train = section("train");
  ini::reject_unknown(train, "train",
                      {"env", "mode", "budget", "t_max", "eval_period", "seed",
                       "relabel_fraction", "init_steps", "window", "roulette_delta",
                       "buffer_capacity", "stop_on_chain_success", "checkpoint_period"});
  TrainConfig c = default_config(train.get<std::string>("env", "dubins"));
  if (const auto m = train.get_optional<std::string>("mode")) {
    const auto mode = parse_relabel_mode(*m);
    if (!mode) throw ConfigError("train.mode: unknown mode '" + *m + "'");
    c.mode = *mode;
  }
  read(train, "train", "budget", c.budget);
  read(train, "train", "t_max", c.t_max);
  read(train, "train", "eval_period", c.eval_period);
  read(train, "train", "seed", c.seed);
  read(train, "train", "relabel_fraction", c.relabel_fraction);
  read(train, "train", "init_steps", c.init_steps);
  read(train, "train", "window", c.window);
  read(train, "train", "roulette_delta", c.roulette_delta);
  read(train, "train", "buffer_capacity", c.buffer_capacity);
  read(train, "train", "stop_on_chain_success", c.stop_on_chain_success);
  read(train, "train", "checkpoint_period", c.checkpoint_period);

  const auto& env = section("env");
  ini::reject_unknown(env, "env",
                      {"eps_success", "eps_dist", "speed", "dt", "substeps", "max_steer"});
  read(env, "env", "eps_success", c.eps_success);
  read(env, "env", "eps_dist", c.eps_dist);
  read(env, "env", "speed", c.dubins.speed);
  read(env, "env", "dt", c.dubins.dt);
  read(env, "env", "substeps", c.dubins.substeps);
  read(env, "env", "max_steer", c.dubins.max_steer);

  const auto& sac = section("sac");
  ini::reject_unknown(sac, "sac",
                      {"actor_hidden", "critic_hidden", "batch_size", "gamma", "alpha",
                       "actor_lr", "critic_lr", "tau", "log_std_min", "log_std_max",
                       "preact_clip"});
  if (const auto v = sac.get_optional<std::string>("actor_hidden")) {
    c.sac.actor_hidden = sizes("sac.actor_hidden", *v);
  }
  if (const auto v = sac.get_optional<std::string>("critic_hidden")) {
    c.sac.critic_hidden = sizes("sac.critic_hidden", *v);
  }
  read(sac, "sac", "batch_size", c.sac.batch_size);
  read(sac, "sac", "gamma", c.sac.gamma);
  read(sac, "sac", "alpha", c.sac.alpha);
  read(sac, "sac", "actor_lr", c.sac.actor_lr);
  read(sac, "sac", "critic_lr", c.sac.critic_lr);
  read(sac, "sac", "tau", c.sac.tau);
  read(sac, "sac", "log_std_min", c.sac.log_std_min);
  read(sac, "sac", "log_std_max", c.sac.log_std_max);
  read(sac, "sac", "preact_clip", c.sac.preact_clip);

  const auto& demo = section("demo");
  ini::reject_unknown(demo, "demo",
                      {"max_nodes", "k_extend", "goal_bias", "target_radius", "min_goals",
                       "max_goals"});
  read(demo, "demo", "max_nodes", c.rrt.max_nodes);
  read(demo, "demo", "k_extend", c.rrt.k_extend);
  read(demo, "demo", "goal_bias", c.rrt.goal_bias);
  read(demo, "demo", "target_radius", c.demo_target_radius);
  read(demo, "demo", "min_goals", c.demo_min_goals);
  read(demo, "demo", "max_goals", c.demo_max_goals);

  if (tree.get_child_optional("maze")) c.maze = detail::maze_from_section(section("maze"));

  validate(c);
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string format_train_config(const TrainConfig& c) {
  std::string out;
  out += fmt::format(
      "[train]\nenv = {}\nmode = {}\nbudget = {}\nt_max = {}\neval_period = {}\nseed = {}\n"
      "relabel_fraction = {}\ninit_steps = {}\nwindow = {}\nroulette_delta = {}\n"
      "buffer_capacity = {}\nstop_on_chain_success = {}\ncheckpoint_period = {}\n\n",
      c.env, to_string(c.mode), c.budget, c.t_max, c.eval_period, c.seed, c.relabel_fraction,
      c.init_steps, c.window, c.roulette_delta, c.buffer_capacity, c.stop_on_chain_success,
      c.checkpoint_period);
  out += fmt::format(
      "[env]\neps_success = {}\neps_dist = {}\nspeed = {}\ndt = {}\nsubsteps = {}\n"
      "max_steer = {}\n\n",
      c.eps_success, c.eps_dist, c.dubins.speed, c.dubins.dt, c.dubins.substeps,
      c.dubins.max_steer);
  out += fmt::format(
      "[sac]\nactor_hidden = {}\ncritic_hidden = {}\nbatch_size = {}\ngamma = {}\nalpha = {}\n"
      "actor_lr = {}\ncritic_lr = {}\ntau = {}\nlog_std_min = {}\nlog_std_max = {}\n"
      "preact_clip = {}\n\n",
      fmt::join(c.sac.actor_hidden, " "), fmt::join(c.sac.critic_hidden, " "),
      c.sac.batch_size, c.sac.gamma, c.sac.alpha, c.sac.actor_lr, c.sac.critic_lr, c.sac.tau,
      c.sac.log_std_min, c.sac.log_std_max, c.sac.preact_clip);
  out += fmt::format(
      "[demo]\nmax_nodes = {}\nk_extend = {}\ngoal_bias = {}\ntarget_radius = {}\n"
      "min_goals = {}\nmax_goals = {}\n\n",
      c.rrt.max_nodes, c.rrt.k_extend, c.rrt.goal_bias, c.demo_target_radius,
      c.demo_min_goals, c.demo_max_goals);
  out += format_maze(c.maze);
  return out;
}

}  // namespace dcil
