#include "dcil/replay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dcil/error.hpp"

namespace dcil {

std::string_view to_string(RelabelMode mode) {
  switch (mode) {
    case RelabelMode::dcil2: return "dcil2";
    case RelabelMode::dcil1_bonus: return "dcil1_bonus";
    case RelabelMode::no_index: return "no_index";
    case RelabelMode::no_goal: return "no_goal";
  }
  return "?";
}

std::optional<RelabelMode> parse_relabel_mode(std::string_view name) {
  for (auto m : {RelabelMode::dcil2, RelabelMode::dcil1_bonus, RelabelMode::no_index,
                 RelabelMode::no_goal}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

bool terminal_successes(RelabelMode mode) {
  return mode == RelabelMode::no_index || mode == RelabelMode::dcil1_bonus;
}

EpisodeRecord EpisodeRecord::from_transitions(std::vector<Transition> transitions) {
  EpisodeRecord e;
  e.achieved_goals.reserve(transitions.size());
  for (const auto& t : transitions) e.achieved_goals.push_back(project_goal(t.next_obs.state));
  e.transitions = std::move(transitions);
  return e;
}

Transition relabel_transition(const Transition& t, const Goal& achieved,
                              const GoalSequence& gseq, RelabelMode mode) {
  if (t.success || mode == RelabelMode::no_goal) return t;

  Transition r = t;
  r.obs.goal = achieved;
  const bool success = is_success(t.next_obs.state, achieved, gseq.eps_success);
  r.success = success;
  r.reward = success ? 1.0 : 0.0;
  if (success) r.timeout = false;
  const int i = t.obs.index;

  if (mode == RelabelMode::dcil2) {
    if (success) {
      // Bootstrap into the sequence: same next-value slot as a real success.
      r.next_obs.index = i + 1;
      r.next_obs.goal = i < gseq.size() ? gseq.goal(i + 1) : achieved;
      r.done = i == gseq.size() || t.env_done;
    } else {
      r.next_obs.index = i;
      r.next_obs.goal = achieved;
      r.done = t.env_done;
    }
    return r;
  }

  // Vanilla HER: the relabelled goal persists and successes are terminal.
  r.next_obs.index = i + (success ? 1 : 0);
  r.next_obs.goal = achieved;
  r.done = success || t.env_done;
  return r;
}

Transition relabel_from_episode(const EpisodeRecord& episode, std::size_t step,
                                std::size_t future_step, const GoalSequence& gseq,
                                RelabelMode mode) {
  if (step >= episode.size() || future_step < step || future_step >= episode.size()) {
    throw NotSameEpisode(fmt::format(
        "relabel goal from step {} is not at or after step {} of a {}-step episode",
        future_step, step, episode.size()));
  }
  return relabel_transition(episode.transitions[step], episode.achieved_goals[future_step],
                            gseq, mode);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {}

void ReplayBuffer::push(EpisodeRecord episode) {
  if (episode.transitions.empty()) throw EmptyEpisode("cannot store an empty episode");
  if (episode.achieved_goals.size() != episode.transitions.size()) {
    episode = EpisodeRecord::from_transitions(std::move(episode.transitions));
  }
  total_ += episode.size();
  episodes_.push_back(std::move(episode));
  while (total_ > capacity_ && episodes_.size() > 1) {
    total_ -= episodes_.front().size();
    episodes_.pop_front();
  }
  rebuild_offsets();
}

void ReplayBuffer::rebuild_offsets() {
  ends_.resize(episodes_.size());
  std::size_t acc = 0;
  for (std::size_t e = 0; e < episodes_.size(); ++e) {
    acc += episodes_[e].size();
    ends_[e] = acc;
  }
}

SampledBatch ReplayBuffer::sample_batch(std::size_t n, double relabel_fraction,
                                        const GoalSequence& gseq, RelabelMode mode) {
  if (total_ == 0) throw BufferEmpty("sample from an empty replay buffer");
  relabel_fraction = std::clamp(relabel_fraction, 0.0, 1.0);

  SampledBatch batch;
  batch.transitions.reserve(n);
  batch.relabelled.assign(n, false);

  const std::size_t n_relabel =
      mode == RelabelMode::no_goal
          ? 0
          : static_cast<std::size_t>(std::floor(static_cast<double>(n) * relabel_fraction));
  std::vector<std::size_t> slots(n);
  std::iota(slots.begin(), slots.end(), 0);
  for (std::size_t k = 0; k < n_relabel; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(slots[k], slots[pick(rng_)]);
    batch.relabelled[slots[k]] = true;
  }

  std::uniform_int_distribution<std::size_t> any(0, total_ - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t flat = any(rng_);
    const auto e = static_cast<std::size_t>(
        std::upper_bound(ends_.begin(), ends_.end(), flat) - ends_.begin());
    const std::size_t step = flat - (e == 0 ? 0 : ends_[e - 1]);
    const auto& episode = episodes_[e];
    if (batch.relabelled[k]) {
      std::uniform_int_distribution<std::size_t> future(step, episode.size() - 1);
      batch.transitions.push_back(
          relabel_from_episode(episode, step, future(rng_), gseq, mode));
    } else {
      batch.transitions.push_back(episode.transitions[step]);
    }
  }
  batch.relabelled_count = n_relabel;
  return batch;
}

void write_transition_csv_header(std::ostream& out) {
  out << "episode,step,x,y,theta,index,gx,gy,action,next_x,next_y,next_theta,"
         "next_index,next_gx,next_gy,reward,done,success,timeout,env_done\n";
}

void write_transition_csv(std::ostream& out, std::size_t episode, std::size_t step,
                          const Transition& t) {
  const auto& o = t.obs;
  const auto& n = t.next_obs;
  fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", episode,
             step, o.state.x, o.state.y, o.state.theta, o.index, o.goal.x, o.goal.y,
             t.action.dtheta, n.state.x, n.state.y, n.state.theta, n.index, n.goal.x,
             n.goal.y, t.reward, int(t.done), int(t.success), int(t.timeout),
             int(t.env_done));
}

void ReplayBuffer::dump_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_transition_csv_header(out);
  for (std::size_t e = 0; e < episodes_.size(); ++e) {
    for (std::size_t s = 0; s < episodes_[e].size(); ++s) {
      write_transition_csv(out, e, s, episodes_[e].transitions[s]);
    }
  }
}

}  // namespace dcil
