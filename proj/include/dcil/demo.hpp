#pragma once

// Single state-only demonstration: generation by kinodynamic RRT, CSV I/O, and
// conversion into the goal sequence used for training.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dcil/dubins.hpp"

namespace dcil {

struct Demonstration {
  std::vector<CarState> states;
  /// Steering tape that produced `states` when planned internally; empty for
  /// demonstrations loaded from disk.
  std::vector<SteerAction> actions;
};

struct GoalSequence {
  std::vector<Goal> goals;
  /// reset_states[k] opens the sub-trajectory that ends at goals[k].
  std::vector<CarState> reset_states;
  double eps_success = 0.1;
  double eps_dist = 1.0;

  int size() const noexcept { return static_cast<int>(goals.size()); }
  /// 1-based access, matching goal indices.
  const Goal& goal(int index) const { return goals.at(index - 1); }
};

struct RrtParams {
  int max_nodes = 20000;
  int k_extend = 5;
  double goal_bias = 0.1;
};

/// Kinodynamic RRT over goal-space samples. Each expansion picks the tree
/// node nearest (in goal space) to a random sample and holds a uniformly
/// random steer for `k_extend` environment steps. Throws PlanningFailed after
/// `max_nodes` expansion attempts.
Demonstration rrt_plan(const DubinsEnv& env, const CarState& start,
                       const Goal& target, double target_radius,
                       std::uint64_t seed, const RrtParams& params = {});

Demonstration load_demonstration(const std::filesystem::path& path);
void save_demonstration(const Demonstration& demo,
                        const std::filesystem::path& path);

/// Total arc length of the demonstration projected into goal space.
double projected_arc_length(const Demonstration& demo);

/// Splits the projected demonstration into pieces of arc length `eps_dist`;
/// the final piece may be shorter and always ends on the last demonstrated
/// state.
GoalSequence extract_goals(const Demonstration& demo, double eps_dist,
                           double eps_success);

struct BandedPlan {
  Demonstration demo;
  GoalSequence gseq;
  /// Seed of the accepted plan and number of plans drawn to find it.
  std::uint64_t seed = 0;
  int tries = 0;
};

/// Plans with seeds seed, seed + 1, ... and keeps the first demonstration
/// whose goal count lies in [min_goals, max_goals]. Plans that fail count as
/// tries; throws PlanningFailed after `max_tries`.
BandedPlan plan_with_goal_band(const DubinsEnv& env, const CarState& start, const Goal& target,
                               double target_radius, std::uint64_t seed,
                               const RrtParams& params, double eps_dist, double eps_success,
                               int min_goals, int max_goals, int max_tries = 200);

void save_goal_sequence(const GoalSequence& gseq,
                        const std::filesystem::path& path);
GoalSequence load_goal_sequence(const std::filesystem::path& path);

}  // namespace dcil
