#pragma once

// Training orchestration: index roulette, rollouts with per-step learner
// updates, success bookkeeping, periodic full-chain evaluation.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcil/demo.hpp"
#include "dcil/dubins.hpp"
#include "dcil/replay.hpp"
#include "dcil/sac.hpp"

namespace dcil {

/// Per-index sliding windows of binary rollout outcomes.
class SuccessMemory {
 public:
  SuccessMemory(int n_goals, int window);

  void record(int index, bool success);
  /// successes / window length, 0 for an empty window.
  double ratio(int index) const;
  std::size_t window_length(int index) const { return windows_.at(index - 1).size(); }
  int size() const noexcept { return static_cast<int>(windows_.size()); }
  int window() const noexcept { return window_; }

 private:
  int window_;
  std::vector<std::deque<bool>> windows_;
};

/// Roulette weights (1 - ratio_i) + delta, normalized to sum to 1.
std::vector<double> index_probabilities(const SuccessMemory& mem, double delta = 0.05);
int select_index(const SuccessMemory& mem, Rng& rng, double delta = 0.05);

struct TrainConfig {
  std::string env = "dubins";
  RelabelMode mode = RelabelMode::dcil2;
  std::int64_t budget = 150000;
  int t_max = 25;
  int eval_period = 1000;
  std::uint64_t seed = 0;
  double relabel_fraction = 0.5;
  /// Random-action steps used to fit the normalizer; they also seed the
  /// replay buffer and count toward the budget.
  int init_steps = 10000;
  int window = 20;
  double roulette_delta = 0.05;
  std::size_t buffer_capacity = 1000000;
  bool stop_on_chain_success = false;
  std::int64_t checkpoint_period = 0;
  double eps_success = 0.1;
  double eps_dist = 1.0;
  SacConfig sac;
  DubinsParams dubins;
  MazeLayout maze = MazeLayout::canonical();
  RrtParams rrt;
  double demo_target_radius = 0.3;
  /// Accepted goal-count band when generating demonstrations; max_goals 0
  /// accepts the first plan found.
  int demo_min_goals = 0;
  int demo_max_goals = 0;
};

/// Published hyperparameter defaults for a named environment (dubins, fetch,
/// humanoid_locomotion, humanoid_standup, cassie_run).
TrainConfig default_config(const std::string& env);

/// Parses an INI training config. Unknown sections or keys are rejected.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& cfg);

struct EvalResult {
  bool chain_success = false;
  int goals_reached = 0;
  int steps = 0;
};

using Controller = std::function<SteerAction(const ExtendedState&)>;

/// Single rollout from the first demonstrated state with a fixed controller
/// and a per-index budget of t_max steps.
EvalResult evaluate(const Controller& policy, const GoalSequence& gseq, const DubinsEnv& env,
                    int t_max);
EvalResult evaluate(const SacAgent& agent, const GoalSequence& gseq, const DubinsEnv& env,
                    int t_max);

struct MetricsRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  int selected_index = 0;
  std::vector<double> success_ratios;
  int eval_goals_reached = 0;
  bool eval_chain_success = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  std::int64_t relabelled = 0;
};

void write_metrics_header(std::ostream& out, int n_goals);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

/// Invariant counters gathered over a training run.
struct TrainingAudit {
  std::size_t critic_targets = 0;
  std::size_t targets_out_of_range = 0;
  double target_min = 0.0;
  double target_max = 0.0;
  std::size_t transitions = 0;
  std::size_t reward_index_violations = 0;
  std::size_t terminal_flag_violations = 0;
  std::size_t index_step_violations = 0;
  std::size_t relabelled_samples = 0;
  std::size_t learner_updates = 0;
};

struct TrainResult {
  SacAgent agent;
  std::vector<MetricsRow> metrics;
  TrainingAudit audit;
  std::optional<std::int64_t> first_chain_success_step;
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(std::int64_t step, const SacAgent&)> on_checkpoint;
  std::function<void(const EpisodeRecord&)> on_episode;
};

/// Runs the full training loop. Deterministic for a given config and seed.
/// Throws NumericalDivergence on a non-finite loss.
TrainResult run_training(const TrainConfig& cfg, const GoalSequence& gseq,
                         const TrainHooks& hooks = {});

/// Q-value rasters over the maze for fixed headings.
struct ValueGrid {
  int nx = 0;
  int ny = 0;
  Bounds bounds;
  std::vector<double> thetas;
  /// values[t][iy * nx + ix] for heading thetas[t].
  std::vector<std::vector<double>> values;
  std::vector<double> max_values;

  double x_at(int ix) const;
  double y_at(int iy) const;
};

/// Evaluates min(Q1, Q2)(((x, y, theta), index, goal), mean action) at cell
/// centers of an nx by ny grid.
ValueGrid export_value_grid(const SacAgent& agent, int index, const Goal& goal,
                            const std::vector<double>& thetas, int nx, int ny,
                            const Bounds& bounds);

/// Writes one binary graymap per heading plus the max raster and a CSV with
/// one row per cell. Values are mapped linearly from [0, v_max] to [0, 255].
void write_value_grid(const ValueGrid& grid, double v_max, const std::filesystem::path& dir);

}  // namespace dcil
