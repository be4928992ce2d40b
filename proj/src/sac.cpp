#include "dcil/sac.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dcil/error.hpp"

namespace dcil {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

// log(1 - tanh(u)^2), stable for large |u|.
double log1m_tanh2_stable(double u) {
  // softplus(-2u) computed without overflow on either side.
  const double x = -2.0 * u;
  const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return 2.0 * (std::numbers::ln2 - u - softplus);
}

Vector standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

FeatureLayout::FeatureLayout(int n, RelabelMode mode)
    : n_goals(n),
      has_goal(mode != RelabelMode::no_goal),
      has_index(mode == RelabelMode::dcil2 || mode == RelabelMode::no_goal) {}

Vector raw_features(const ExtendedState& obs, const FeatureLayout& layout) {
  Vector f(layout.normalized_size());
  const auto& s = obs.state;
  f(0) = s.x;
  f(1) = s.y;
  f(2) = std::cos(s.theta);
  f(3) = std::sin(s.theta);
  if (layout.has_goal) {
    f(4) = obs.goal.x - s.x;
    f(5) = obs.goal.y - s.y;
  }
  return f;
}

Vector encode_obs(const ExtendedState& obs, const FeatureLayout& layout,
                  const Normalizer& norm) {
  Vector f = Vector::Zero(layout.size());
  const int head = layout.normalized_size();
  f.head(head) = raw_features(obs, layout);
  if (norm.dim() == head) norm.apply(f.head(head));
  if (layout.has_index) {
    // N_goals + 1 only shows up behind terminal transitions.
    const int i = std::clamp(obs.index, 1, layout.n_goals);
    f(head + i - 1) = 1.0;
  }
  return f;
}

Vector encode_obs(const ExtendedState& obs, const GoalSequence& gseq,
                  const Normalizer& norm, RelabelMode mode) {
  return encode_obs(obs, FeatureLayout(gseq.size(), mode), norm);
}

PolicySample sample_policy(const Matrix& out, const Vector& noise, double scale,
                           const SacConfig& cfg) {
  const Eigen::Index b = out.cols();
  PolicySample s{Matrix(1, b), Vector(b)};
  for (Eigen::Index k = 0; k < b; ++k) {
    const double log_std = std::clamp(out(1, k), cfg.log_std_min, cfg.log_std_max);
    const double u = std::clamp(out(0, k) + std::exp(log_std) * noise(k), -cfg.preact_clip,
                                cfg.preact_clip);
    s.actions(0, k) = scale * std::tanh(u);
    s.log_prob(k) = -0.5 * noise(k) * noise(k) - log_std - kLogSqrt2Pi - std::log(scale) -
                    log1m_tanh2_stable(u);
  }
  return s;
}

double critic_loss(const Mlp& critic, const Matrix& inputs, const Vector& targets,
                   MlpGradients* grads) {
  Mlp::Tape tape;
  const Matrix q = critic.forward(inputs, tape);
  const Eigen::Index b = inputs.cols();
  const Vector diff = q.row(0).transpose() - targets;
  const double loss = diff.squaredNorm() / static_cast<double>(b);
  if (grads != nullptr) {
    const Matrix g = (2.0 / static_cast<double>(b)) * diff.transpose();
    critic.backward(tape, g, grads);
  }
  return loss;
}

double actor_loss(const Mlp& actor, const Mlp& q1, const Mlp& q2, const Matrix& features,
                  const Vector& noise, double alpha, double scale, const SacConfig& cfg,
                  MlpGradients* grads) {
  const Eigen::Index b = features.cols();
  const Eigen::Index fdim = features.rows();
  Mlp::Tape actor_tape;
  const Matrix out = actor.forward(features, actor_tape);
  const PolicySample pi = sample_policy(out, noise, scale, cfg);

  Matrix qin(fdim + 1, b);
  qin.topRows(fdim) = features;
  qin.row(fdim) = pi.actions / scale;
  Mlp::Tape t1, t2;
  const Matrix v1 = q1.forward(qin, t1);
  const Matrix v2 = q2.forward(qin, t2);

  double loss = 0.0;
  Matrix g1 = Matrix::Zero(1, b);
  Matrix g2 = Matrix::Zero(1, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const bool first = v1(0, k) <= v2(0, k);
    loss += alpha * pi.log_prob(k) - (first ? v1(0, k) : v2(0, k));
    (first ? g1 : g2)(0, k) = -1.0 / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);
  if (grads == nullptr) return loss;

  // dL/d(action) through whichever critic attained the minimum.
  const Matrix d1 = q1.backward(t1, g1, nullptr);
  const Matrix d2 = q2.backward(t2, g2, nullptr);

  Matrix grad_out = Matrix::Zero(2, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const double raw_log_std = out(1, k);
    const double log_std = std::clamp(raw_log_std, cfg.log_std_min, cfg.log_std_max);
    const double sigma = std::exp(log_std);
    const double u_raw = out(0, k) + sigma * noise(k);
    const bool u_free = u_raw > -cfg.preact_clip && u_raw < cfg.preact_clip;
    const double u = std::clamp(u_raw, -cfg.preact_clip, cfg.preact_clip);
    const double th = std::tanh(u);
    // d(action input)/du, where the critic sees action / scale = tanh(u).
    const double dq_da = d1(fdim, k) + d2(fdim, k);
    const double inv_b = 1.0 / static_cast<double>(b);
    // d/du of alpha * (-log(1 - tanh^2 u)) is 2 alpha tanh(u).
    const double dl_du = u_free ? (alpha * 2.0 * th * inv_b + dq_da * (1.0 - th * th)) : 0.0;
    grad_out(0, k) = dl_du;
    const bool s_free = raw_log_std > cfg.log_std_min && raw_log_std < cfg.log_std_max;
    grad_out(1, k) = s_free ? (-alpha * inv_b + dl_du * sigma * noise(k)) : 0.0;
  }
  actor.backward(actor_tape, grad_out, grads);
  return loss;
}

SacAgent::SacAgent(const SacConfig& cfg, RelabelMode mode, int n_goals, double action_scale,
                   std::uint64_t seed)
    : cfg_(cfg),
      mode_(mode),
      layout_(n_goals, mode),
      action_scale_(action_scale),
      v_max_(static_cast<double>(n_goals)),
      rng_(seed),
      norm_(layout_.normalized_size()) {
  if (n_goals < 1) throw ConfigError("agent needs at least one goal");
  const int in = layout_.size();
  actor_ = Mlp(with_ends(in, cfg_.actor_hidden, 2), rng_);
  q1_ = Mlp(with_ends(in + 1, cfg_.critic_hidden, 1), rng_);
  q2_ = Mlp(with_ends(in + 1, cfg_.critic_hidden, 1), rng_);
  q1_target_ = q1_;
  q2_target_ = q2_;
  actor_opt_ = Adam(actor_, cfg_.actor_lr);
  q1_opt_ = Adam(q1_, cfg_.critic_lr);
  q2_opt_ = Adam(q2_, cfg_.critic_lr);
}

Matrix SacAgent::encode(std::span<const ExtendedState> obs) const {
  Matrix f(layout_.size(), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t k = 0; k < obs.size(); ++k) {
    f.col(static_cast<Eigen::Index>(k)) = encode_obs(obs[k], layout_, norm_);
  }
  return f;
}

Matrix SacAgent::critic_inputs(const Matrix& features, const Matrix& actions) const {
  Matrix in(features.rows() + 1, features.cols());
  in.topRows(features.rows()) = features;
  in.row(features.rows()) = actions / action_scale_;
  return in;
}

SteerAction SacAgent::act(const ExtendedState& obs) {
  const Matrix out = actor_.forward(encode_obs(obs, layout_, norm_));
  const PolicySample s = sample_policy(out, standard_normal(rng_, 1), action_scale_, cfg_);
  return {s.actions(0, 0)};
}

SteerAction SacAgent::act_deterministic(const ExtendedState& obs) const {
  const Matrix out = actor_.forward(encode_obs(obs, layout_, norm_));
  return {action_scale_ * std::tanh(std::clamp(out(0, 0), -cfg_.preact_clip, cfg_.preact_clip))};
}

Vector SacAgent::mean_actions(std::span<const ExtendedState> obs) const {
  const Matrix out = actor_.forward(encode(obs));
  return (action_scale_ *
          out.row(0).array().cwiseMax(-cfg_.preact_clip).cwiseMin(cfg_.preact_clip).tanh())
      .transpose();
}

double SacAgent::q_value(const ExtendedState& obs, SteerAction action) const {
  Vector a(1);
  a(0) = action.dtheta;
  return q_values(std::span(&obs, 1), a)(0);
}

Vector SacAgent::q_values(std::span<const ExtendedState> obs, const Vector& actions) const {
  const Matrix in = critic_inputs(encode(obs), actions.transpose());
  return q1_.forward(in).cwiseMin(q2_.forward(in)).row(0).transpose();
}

Vector SacAgent::raw_targets(std::span<const Transition> batch,
                             const std::vector<bool>& relabelled, const GoalSequence& gseq,
                             const Vector& noise) const {
  const auto b = static_cast<Eigen::Index>(batch.size());
  std::vector<ExtendedState> next(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) next[k] = batch[k].next_obs;
  const Matrix next_feat = encode(next);
  const PolicySample pi = sample_policy(actor_.forward(next_feat), noise, action_scale_, cfg_);
  const Matrix next_in = critic_inputs(next_feat, pi.actions);
  const Matrix next_q = q1_target_.forward(next_in).cwiseMin(q2_target_.forward(next_in));

  // Reward bonus of dcil1_bonus: clipped value of the next goal of the
  // sequence, only for successes that were not produced by relabelling.
  Vector bonus = Vector::Zero(b);
  if (mode_ == RelabelMode::dcil1_bonus) {
    std::vector<ExtendedState> succ;
    std::vector<Eigen::Index> where;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto& t = batch[k];
      const bool original = k >= relabelled.size() || !relabelled[k];
      if (original && t.success && t.obs.index < gseq.size()) {
        succ.push_back({t.next_obs.state, t.obs.index + 1, gseq.goal(t.obs.index + 1)});
        where.push_back(static_cast<Eigen::Index>(k));
      }
    }
    if (!succ.empty()) {
      const Matrix f = encode(succ);
      Matrix a(1, f.cols());
      const Matrix out = actor_.forward(f);
      for (Eigen::Index k = 0; k < f.cols(); ++k) {
        a(0, k) = action_scale_ * std::tanh(std::clamp(out(0, k), -cfg_.preact_clip, cfg_.preact_clip));
      }
      const Matrix in = critic_inputs(f, a);
      const Matrix v = q1_target_.forward(in).cwiseMin(q2_target_.forward(in));
      for (std::size_t j = 0; j < where.size(); ++j) {
        bonus(where[j]) = std::clamp(v(0, static_cast<Eigen::Index>(j)), 0.0, v_max_);
      }
    }
  }

  Vector y(b);
  const bool terminal_success = terminal_successes(mode_);
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto& t = batch[static_cast<std::size_t>(k)];
    const bool terminal = t.done || (terminal_success && t.success);
    const double soft_v = next_q(0, k) - cfg_.alpha * pi.log_prob(k);
    y(k) = t.reward + bonus(k) + (terminal ? 0.0 : cfg_.gamma * soft_v);
  }
  return y;
}

CriticStats SacAgent::critic_update(std::span<const Transition> batch,
                                    const std::vector<bool>& relabelled,
                                    const GoalSequence& gseq) {
  if (batch.empty()) throw BufferEmpty("critic update on an empty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Vector raw = raw_targets(batch, relabelled, gseq, standard_normal(rng_, b));

  CriticStats stats;
  stats.count = batch.size();
  Vector y(b);
  for (Eigen::Index k = 0; k < b; ++k) {
    if (raw(k) < 0.0 || raw(k) > v_max_) ++stats.clipped;
    y(k) = std::clamp(raw(k), 0.0, v_max_);
  }
  stats.target_min = y.minCoeff();
  stats.target_max = y.maxCoeff();

  std::vector<ExtendedState> obs(batch.size());
  Vector actions(b);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    obs[k] = batch[k].obs;
    actions(static_cast<Eigen::Index>(k)) = batch[k].action.dtheta;
  }
  const Matrix in = critic_inputs(encode(obs), actions.transpose());

  MlpGradients g1 = q1_.zero_gradients();
  MlpGradients g2 = q2_.zero_gradients();
  stats.loss = critic_loss(q1_, in, y, &g1) + critic_loss(q2_, in, y, &g2);
  q1_opt_.step(q1_, g1);
  q2_opt_.step(q2_, g2);
  return stats;
}

double SacAgent::actor_update(std::span<const Transition> batch) {
  if (batch.empty()) throw BufferEmpty("actor update on an empty batch");
  std::vector<ExtendedState> obs(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) obs[k] = batch[k].obs;
  const Matrix feat = encode(obs);
  MlpGradients g = actor_.zero_gradients();
  const double loss = actor_loss(actor_, q1_, q2_, feat, standard_normal(rng_, feat.cols()),
                                 cfg_.alpha, action_scale_, cfg_, &g);
  actor_opt_.step(actor_, g);
  return loss;
}

void SacAgent::soft_update(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("soft update rate must lie in (0, 1]");
  q1_target_.blend_from(q1_, tau);
  q2_target_.blend_from(q2_, tau);
}

void SacAgent::save(std::ostream& out) const {
  norm_.save(out);
  actor_.save(out);
  q1_.save(out);
  q2_.save(out);
  q1_target_.save(out);
  q2_target_.save(out);
}

SacAgent SacAgent::load(std::istream& in, const SacConfig& cfg, RelabelMode mode, int n_goals,
                        double action_scale) {
  SacAgent agent(cfg, mode, n_goals, action_scale, 0);
  agent.norm_ = Normalizer::load(in);
  auto load_like = [&](const Mlp& shape) {
    Mlp net = Mlp::load(in);
    if (net.sizes() != shape.sizes()) throw ParseError("network architecture mismatch");
    return net;
  };
  agent.actor_ = load_like(agent.actor_);
  agent.q1_ = load_like(agent.q1_);
  agent.q2_ = load_like(agent.q2_);
  agent.q1_target_ = load_like(agent.q1_target_);
  agent.q2_target_ = load_like(agent.q2_target_);
  if (agent.norm_.dim() != agent.layout_.normalized_size()) {
    throw ParseError("normalizer dimension mismatch");
  }
  agent.actor_opt_ = Adam(agent.actor_, cfg.actor_lr);
  agent.q1_opt_ = Adam(agent.q1_, cfg.critic_lr);
  agent.q2_opt_ = Adam(agent.q2_, cfg.critic_lr);
  return agent;
}

}  // namespace dcil
