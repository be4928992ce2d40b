#include "dcil/trainer.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dcil/error.hpp"

namespace dcil {

SuccessMemory::SuccessMemory(int n_goals, int window)
    : window_(window), windows_(static_cast<std::size_t>(n_goals)) {
  if (n_goals < 1 || window < 1) throw ConfigError("success memory needs goals and a window");
}

void SuccessMemory::record(int index, bool success) {
  auto& w = windows_.at(static_cast<std::size_t>(index - 1));
  w.push_back(success);
  if (static_cast<int>(w.size()) > window_) w.pop_front();
}

double SuccessMemory::ratio(int index) const {
  const auto& w = windows_.at(static_cast<std::size_t>(index - 1));
  if (w.empty()) return 0.0;
  return static_cast<double>(std::count(w.begin(), w.end(), true)) /
         static_cast<double>(w.size());
}

std::vector<double> index_probabilities(const SuccessMemory& mem, double delta) {
  std::vector<double> w(static_cast<std::size_t>(mem.size()));
  for (int i = 1; i <= mem.size(); ++i) w[i - 1] = (1.0 - mem.ratio(i)) + delta;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

int select_index(const SuccessMemory& mem, Rng& rng, double delta) {
  const auto p = index_probabilities(mem, delta);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (std::size_t i = 0; i < p.size(); ++i) {
    r -= p[i];
    if (r < 0.0) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(p.size());
}

EvalResult evaluate(const Controller& policy, const GoalSequence& gseq, const DubinsEnv& env,
                    int t_max) {
  SequentialGoalEnv wrapper(env, gseq, t_max);
  EvalResult r;
  wrapper.reset(1);
  while (true) {
    const Transition t = wrapper.step(policy(wrapper.observation()));
    ++r.steps;
    if (t.success) ++r.goals_reached;
    if (t.done || t.timeout) break;
  }
  r.chain_success = r.goals_reached == gseq.size();
  return r;
}

EvalResult evaluate(const SacAgent& agent, const GoalSequence& gseq, const DubinsEnv& env,
                    int t_max) {
  return evaluate([&](const ExtendedState& obs) { return agent.act_deterministic(obs); }, gseq,
                  env, t_max);
}

void write_metrics_header(std::ostream& out, int n_goals) {
  out << "step,episode,selected_index";
  for (int i = 1; i <= n_goals; ++i) fmt::print(out, ",success_ratio_{}", i);
  out << ",eval_goals_reached,eval_chain_success,critic_loss,actor_loss,relabelled\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  fmt::print(out, "{},{},{}", row.step, row.episode, row.selected_index);
  for (double r : row.success_ratios) fmt::print(out, ",{}", r);
  fmt::print(out, ",{},{},{},{},{}\n", row.eval_goals_reached, int(row.eval_chain_success),
             row.critic_loss, row.actor_loss, row.relabelled);
}

namespace {

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const GoalSequence& gseq, const TrainHooks& hooks)
      : cfg_(cfg),
        gseq_(gseq),
        hooks_(hooks),
        env_(cfg.maze, cfg.dubins),
        wrapper_(env_, gseq, cfg.t_max),
        rng_(cfg.seed),
        buffer_(cfg.buffer_capacity, cfg.seed ^ 0x9e3779b97f4a7c15ULL),
        memory_(gseq.size(), cfg.window),
        result_{SacAgent(cfg.sac, cfg.mode, gseq.size(), cfg.dubins.max_steer,
                         cfg.seed * 6364136223846793005ULL + 1442695040888963407ULL),
                {}, {}, std::nullopt, 0, 0} {}

  TrainResult run() {
    initialization_phase();
    while (result_.steps < cfg_.budget && !stopped_) rollout();
    return std::move(result_);
  }

 private:
  void audit(const Transition& t, bool environment) {
    auto& a = result_.audit;
    ++a.transitions;
    const int shift = t.next_obs.index - t.obs.index;
    if ((t.reward == 1.0) != (shift == 1)) ++a.reward_index_violations;
    if (shift != 0 && shift != 1) ++a.index_step_violations;
    if (environment || cfg_.mode == RelabelMode::dcil2) {
      const bool final_success = t.success && t.obs.index == gseq_.size();
      if (t.done != (final_success || t.env_done)) ++a.terminal_flag_violations;
    }
  }

  void initialization_phase() {
    const std::int64_t init = std::min<std::int64_t>(cfg_.init_steps, cfg_.budget);
    std::uniform_real_distribution<double> steer(-cfg_.dubins.max_steer, cfg_.dubins.max_steer);
    auto& norm = result_.agent.normalizer();
    const auto& layout = result_.agent.layout();
    while (result_.steps < init) {
      const int index = select_index(memory_, rng_, cfg_.roulette_delta);
      norm.observe(raw_features(wrapper_.reset(index), layout));
      std::vector<Transition> episode;
      while (true) {
        const Transition t = wrapper_.step({steer(rng_)});
        ++result_.steps;
        audit(t, true);
        if (!t.done) norm.observe(raw_features(t.next_obs, layout));
        episode.push_back(t);
        if (t.done || t.timeout || result_.steps >= init) break;
      }
      finish_episode(std::move(episode));
    }
    norm.freeze();
  }

  void rollout() {
    const int index = select_index(memory_, rng_, cfg_.roulette_delta);
    selected_ = index;
    wrapper_.reset(index);
    std::vector<Transition> episode;
    while (true) {
      const Transition t = wrapper_.step(result_.agent.act(wrapper_.observation()));
      ++result_.steps;
      audit(t, true);
      if (t.success) {
        memory_.record(t.obs.index, true);
      } else if (t.timeout || t.env_done) {
        memory_.record(t.obs.index, false);
      }
      episode.push_back(t);

      if (buffer_.size() >= static_cast<std::size_t>(cfg_.sac.batch_size)) learn();
      if (cfg_.eval_period > 0 && result_.steps % cfg_.eval_period == 0) evaluate_now();
      if (cfg_.checkpoint_period > 0 && result_.steps % cfg_.checkpoint_period == 0 &&
          hooks_.on_checkpoint) {
        hooks_.on_checkpoint(result_.steps, result_.agent);
      }
      if (t.done || t.timeout || result_.steps >= cfg_.budget || stopped_) break;
    }
    finish_episode(std::move(episode));
  }

  void learn() {
    auto batch = buffer_.sample_batch(static_cast<std::size_t>(cfg_.sac.batch_size),
                                      cfg_.relabel_fraction, gseq_, cfg_.mode);
    for (const auto& t : batch.transitions) audit(t, false);
    auto& agent = result_.agent;
    const CriticStats cs = agent.critic_update(batch.transitions, batch.relabelled, gseq_);
    const double al = agent.actor_update(batch.transitions);
    agent.soft_update();
    if (!std::isfinite(cs.loss) || !std::isfinite(al)) {
      throw NumericalDivergence(fmt::format("non-finite loss at step {} (critic {}, actor {})",
                                            result_.steps, cs.loss, al));
    }
    auto& a = result_.audit;
    if (a.critic_targets == 0) {
      a.target_min = cs.target_min;
      a.target_max = cs.target_max;
    } else {
      a.target_min = std::min(a.target_min, cs.target_min);
      a.target_max = std::max(a.target_max, cs.target_max);
    }
    a.critic_targets += cs.count;
    if (cs.target_min < 0.0 || cs.target_max > agent.v_max()) ++a.targets_out_of_range;
    a.relabelled_samples += batch.relabelled_count;
    ++a.learner_updates;
    critic_loss_sum_ += cs.loss;
    actor_loss_sum_ += al;
    ++losses_;
  }

  void evaluate_now() {
    const EvalResult ev = evaluate(result_.agent, gseq_, env_, cfg_.t_max);
    MetricsRow row;
    row.step = result_.steps;
    row.episode = result_.episodes;
    row.selected_index = selected_;
    for (int i = 1; i <= gseq_.size(); ++i) row.success_ratios.push_back(memory_.ratio(i));
    row.eval_goals_reached = ev.goals_reached;
    row.eval_chain_success = ev.chain_success;
    if (losses_ > 0) {
      row.critic_loss = critic_loss_sum_ / static_cast<double>(losses_);
      row.actor_loss = actor_loss_sum_ / static_cast<double>(losses_);
    }
    row.relabelled = static_cast<std::int64_t>(result_.audit.relabelled_samples);
    critic_loss_sum_ = actor_loss_sum_ = 0.0;
    losses_ = 0;
    if (ev.chain_success && !result_.first_chain_success_step) {
      result_.first_chain_success_step = result_.steps;
      if (cfg_.stop_on_chain_success) stopped_ = true;
    }
    if (hooks_.on_metrics) hooks_.on_metrics(row);
    result_.metrics.push_back(std::move(row));
  }

  void finish_episode(std::vector<Transition> episode) {
    if (episode.empty()) return;
    auto record = EpisodeRecord::from_transitions(std::move(episode));
    if (hooks_.on_episode) hooks_.on_episode(record);
    buffer_.push(std::move(record));
    ++result_.episodes;
  }

  const TrainConfig& cfg_;
  const GoalSequence& gseq_;
  const TrainHooks& hooks_;
  DubinsEnv env_;
  SequentialGoalEnv wrapper_;
  Rng rng_;
  ReplayBuffer buffer_;
  SuccessMemory memory_;
  TrainResult result_;
  int selected_ = 0;
  bool stopped_ = false;
  double critic_loss_sum_ = 0.0;
  double actor_loss_sum_ = 0.0;
  std::int64_t losses_ = 0;
};

}  // namespace

TrainResult run_training(const TrainConfig& cfg, const GoalSequence& gseq,
                         const TrainHooks& hooks) {
  if (cfg.env != "dubins") {
    throw ConfigError("environment '" + cfg.env + "' is not simulated; only dubins is");
  }
  if (gseq.size() < 1 || gseq.reset_states.size() != gseq.goals.size()) {
    throw ConfigError("goal sequence is empty or inconsistent");
  }
  Trainer trainer(cfg, gseq, hooks);
  return trainer.run();
}

}  // namespace dcil
