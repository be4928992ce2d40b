#pragma once

// Sequential goal-conditioned MDP: observations extended with the index of
// the current goal in the sequence and the goal itself, automatic goal/index
// switching on success, and the termination logic of the training rollout.

#include <utility>

#include "dcil/demo.hpp"
#include "dcil/dubins.hpp"

namespace dcil {

struct ExtendedState {
  CarState state;
  /// 1-based position in the goal sequence. A value of N_goals + 1 appears
  /// only as the next index of a final-goal success, which is terminal.
  int index = 1;
  Goal goal;

  bool operator==(const ExtendedState&) const = default;
};

struct Transition {
  ExtendedState obs;
  SteerAction action;
  ExtendedState next_obs;
  double reward = 0.0;
  /// Terminal for bootstrapping: final-goal success or collision.
  bool done = false;
  bool success = false;
  /// Per-index step budget exhausted without success. Never terminal.
  bool timeout = false;
  /// The underlying environment ended the episode (collision).
  bool env_done = false;
};

enum class Discount { terminal, nonterminal };

/// 1 when next_state reaches the goal of `index`, else 0.
int compute_reward(const CarState& next_state, int index, const GoalSequence& gseq);

int next_index(const CarState& next_state, int index, const GoalSequence& gseq);

/// Success is tested against `goal`, which may be a relabelled goal; the goal
/// switched to always comes from the sequence. At the final index a success
/// yields (goal, N_goals + 1).
std::pair<Goal, int> next_goal_and_index(const CarState& next_state, const Goal& goal,
                                         int index, const GoalSequence& gseq);

Discount discount_flag(const CarState& next_state, int index_after,
                       const GoalSequence& gseq);

ExtendedState wrapper_reset(int index, const GoalSequence& gseq);

/// One rollout step. `t_in_index` counts the steps spent on the current
/// index including this one; reaching `t_max` without success is a timeout.
Transition wrapper_step(const DubinsEnv& env, const ExtendedState& obs,
                        SteerAction action, int t_in_index, int t_max,
                        const GoalSequence& gseq);

/// Rollout driver owning the per-index step counter.
class SequentialGoalEnv {
 public:
  SequentialGoalEnv(const DubinsEnv& env, const GoalSequence& gseq, int t_max);

  const ExtendedState& reset(int index);
  Transition step(SteerAction action);

  const ExtendedState& observation() const noexcept { return obs_; }
  int steps_in_index() const noexcept { return t_in_index_; }
  const GoalSequence& goals() const noexcept { return *gseq_; }
  const DubinsEnv& env() const noexcept { return *env_; }
  int t_max() const noexcept { return t_max_; }

 private:
  const DubinsEnv* env_;
  const GoalSequence* gseq_;
  int t_max_;
  ExtendedState obs_;
  int t_in_index_ = 0;
};

}  // namespace dcil
