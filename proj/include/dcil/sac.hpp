#pragma once

// Soft actor-critic with twin critics, target critics, a fixed entropy
// coefficient, frozen observation normalization and clipped critic targets.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dcil/mlp.hpp"
#include "dcil/replay.hpp"
#include "dcil/seq_mdp.hpp"

namespace dcil {

struct SacConfig {
  std::vector<int> actor_hidden{400, 300};
  std::vector<int> critic_hidden{400, 300};
  int batch_size = 256;
  double gamma = 0.9;
  double alpha = 1e-3;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double tau = 0.005;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  /// Pre-tanh samples are clamped to +-preact_clip.
  double preact_clip = 5.0;
};

/// Layout of the network input for one observation:
///   [x, y, cos theta, sin theta] [gx - x, gy - y] [one-hot index]
/// The goal block is absent in no_goal mode; the one-hot block is absent in
/// the modes without an index (no_index, dcil1_bonus).
struct FeatureLayout {
  int n_goals = 1;
  bool has_goal = true;
  bool has_index = true;

  FeatureLayout() = default;
  FeatureLayout(int n_goals, RelabelMode mode);

  int normalized_size() const noexcept { return has_goal ? 6 : 4; }
  int size() const noexcept { return normalized_size() + (has_index ? n_goals : 0); }
};

/// Unnormalized leading block (state and relative goal) of the features.
Vector raw_features(const ExtendedState& obs, const FeatureLayout& layout);

Vector encode_obs(const ExtendedState& obs, const FeatureLayout& layout,
                  const Normalizer& norm);
Vector encode_obs(const ExtendedState& obs, const GoalSequence& gseq,
                  const Normalizer& norm, RelabelMode mode);

/// Squashed Gaussian sample for one batch: u = clamp(mu + sigma * noise),
/// a = scale * tanh(u).
struct PolicySample {
  Matrix actions;   // 1 x B
  Vector log_prob;  // B
};

PolicySample sample_policy(const Matrix& actor_out, const Vector& noise,
                           double action_scale, const SacConfig& cfg);

/// Mean squared error of a critic against fixed targets; adds parameter
/// gradients to `grads` when given.
double critic_loss(const Mlp& critic, const Matrix& inputs, const Vector& targets,
                   MlpGradients* grads);

/// mean(alpha * log pi(a|s) - min(Q1, Q2)(s, a)) with a reparameterized on
/// `noise`. Gradients w.r.t. the actor parameters go to `grads` when given.
double actor_loss(const Mlp& actor, const Mlp& q1, const Mlp& q2, const Matrix& features,
                  const Vector& noise, double alpha, double action_scale,
                  const SacConfig& cfg, MlpGradients* grads);

struct CriticStats {
  double loss = 0.0;
  double target_min = 0.0;
  double target_max = 0.0;
  /// Targets outside [0, v_max] before clamping.
  std::size_t clipped = 0;
  std::size_t count = 0;
};

class SacAgent {
 public:
  SacAgent(const SacConfig& cfg, RelabelMode mode, int n_goals, double action_scale,
           std::uint64_t seed);

  Matrix encode(std::span<const ExtendedState> obs) const;

  /// Stochastic action for rollouts.
  SteerAction act(const ExtendedState& obs);
  /// tanh of the Gaussian mean.
  SteerAction act_deterministic(const ExtendedState& obs) const;
  Vector mean_actions(std::span<const ExtendedState> obs) const;

  /// min(Q1, Q2) of the online critics.
  double q_value(const ExtendedState& obs, SteerAction action) const;
  Vector q_values(std::span<const ExtendedState> obs, const Vector& actions) const;

  /// One optimizer step on both critics. `relabelled` marks transitions whose
  /// goal was relabelled; the value bonus of dcil1_bonus applies only to the
  /// others.
  CriticStats critic_update(std::span<const Transition> batch,
                            const std::vector<bool>& relabelled, const GoalSequence& gseq);
  double actor_update(std::span<const Transition> batch);
  void soft_update(double tau);
  void soft_update() { soft_update(cfg_.tau); }

  /// Critic regression targets without clamping, with the noise used.
  Vector raw_targets(std::span<const Transition> batch, const std::vector<bool>& relabelled,
                     const GoalSequence& gseq, const Vector& noise) const;

  Normalizer& normalizer() noexcept { return norm_; }
  const Normalizer& normalizer() const noexcept { return norm_; }
  const FeatureLayout& layout() const noexcept { return layout_; }
  const SacConfig& config() const noexcept { return cfg_; }
  RelabelMode mode() const noexcept { return mode_; }
  double v_max() const noexcept { return v_max_; }
  double action_scale() const noexcept { return action_scale_; }

  Mlp& actor() noexcept { return actor_; }
  Mlp& q1() noexcept { return q1_; }
  Mlp& q2() noexcept { return q2_; }
  Mlp& q1_target() noexcept { return q1_target_; }
  Mlp& q2_target() noexcept { return q2_target_; }
  const Mlp& actor() const noexcept { return actor_; }
  const Mlp& q1() const noexcept { return q1_; }
  const Mlp& q2() const noexcept { return q2_; }
  const Mlp& q1_target() const noexcept { return q1_target_; }
  const Mlp& q2_target() const noexcept { return q2_target_; }

  void save(std::ostream& out) const;
  static SacAgent load(std::istream& in, const SacConfig& cfg, RelabelMode mode, int n_goals,
                       double action_scale);

 private:
  Matrix critic_inputs(const Matrix& features, const Matrix& actions) const;

  SacConfig cfg_;
  RelabelMode mode_;
  FeatureLayout layout_;
  double action_scale_;
  double v_max_;
  Rng rng_;
  Normalizer norm_;
  Mlp actor_, q1_, q2_, q1_target_, q2_target_;
  Adam actor_opt_, q1_opt_, q2_opt_;
};

}  // namespace dcil
