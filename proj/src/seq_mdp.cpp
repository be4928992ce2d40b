#include "dcil/seq_mdp.hpp"

#include <fmt/format.h>

#include "dcil/error.hpp"

namespace dcil {

namespace {

void check_index(int index, const GoalSequence& gseq) {
  if (index < 1 || index > gseq.size()) {
    throw IndexOutOfRange(fmt::format("goal index {} outside [1, {}]", index, gseq.size()));
  }
}

}  // namespace

int compute_reward(const CarState& next_state, int index, const GoalSequence& gseq) {
  check_index(index, gseq);
  return is_success(next_state, gseq.goal(index), gseq.eps_success) ? 1 : 0;
}

int next_index(const CarState& next_state, int index, const GoalSequence& gseq) {
  return index + compute_reward(next_state, index, gseq);
}

std::pair<Goal, int> next_goal_and_index(const CarState& next_state, const Goal& goal,
                                         int index, const GoalSequence& gseq) {
  check_index(index, gseq);
  if (!is_success(next_state, goal, gseq.eps_success)) return {goal, index};
  if (index == gseq.size()) return {goal, index + 1};
  return {gseq.goal(index + 1), index + 1};
}

Discount discount_flag(const CarState& /*next_state*/, int index_after,
                       const GoalSequence& gseq) {
  return index_after == gseq.size() + 1 ? Discount::terminal : Discount::nonterminal;
}

ExtendedState wrapper_reset(int index, const GoalSequence& gseq) {
  check_index(index, gseq);
  return {gseq.reset_states[index - 1], index, gseq.goal(index)};
}

Transition wrapper_step(const DubinsEnv& env, const ExtendedState& obs,
                        SteerAction action, int t_in_index, int t_max,
                        const GoalSequence& gseq) {
  const auto [next_state, env_done] = env.step(obs.state, action);
  Transition t;
  t.obs = obs;
  t.action = {clamp_steer(action.dtheta, env.params().max_steer)};
  t.env_done = env_done;
  t.reward = compute_reward(next_state, obs.index, gseq);
  t.success = t.reward > 0.0;

  const auto [goal, index] = next_goal_and_index(next_state, obs.goal, obs.index, gseq);
  t.next_obs = {next_state, index, goal};

  const bool last_index = t.success && obs.index >= gseq.size();
  t.timeout = !t.success && !env_done && t_in_index >= t_max;
  t.done = env_done || last_index;
  return t;
}

SequentialGoalEnv::SequentialGoalEnv(const DubinsEnv& env, const GoalSequence& gseq,
                                     int t_max)
    : env_(&env), gseq_(&gseq), t_max_(t_max) {
  if (t_max < 1) throw ConfigError("t_max must be at least 1");
}

const ExtendedState& SequentialGoalEnv::reset(int index) {
  obs_ = wrapper_reset(index, *gseq_);
  t_in_index_ = 0;
  return obs_;
}

Transition SequentialGoalEnv::step(SteerAction action) {
  ++t_in_index_;
  Transition t = wrapper_step(*env_, obs_, action, t_in_index_, t_max_, *gseq_);
  if (t.success) t_in_index_ = 0;
  obs_ = t.next_obs;
  return t;
}

}  // namespace dcil
