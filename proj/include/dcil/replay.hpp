#pragma once

// Episode-aware replay buffer with the four-way sequential relabelling and the
// ablation variants.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "dcil/seq_mdp.hpp"

namespace dcil {

enum class RelabelMode {
  dcil2,        // sequential relabelling: index and next goal follow the sequence
  dcil1_bonus,  // vanilla HER, terminal successes, value bonus on real successes
  no_index,     // vanilla HER, terminal successes, no index in the observation
  no_goal,      // index only, no explicit goal and no relabelling
};

std::string_view to_string(RelabelMode mode);
std::optional<RelabelMode> parse_relabel_mode(std::string_view name);

/// Whether the learner treats every success as terminal in this mode.
bool terminal_successes(RelabelMode mode);

struct EpisodeRecord {
  std::vector<Transition> transitions;
  /// achieved_goals[t] = project_goal(transitions[t].next_obs.state).
  std::vector<Goal> achieved_goals;

  static EpisodeRecord from_transitions(std::vector<Transition> transitions);
  std::size_t size() const noexcept { return transitions.size(); }
};

/// Relabels `t` with the achieved goal. Original successes pass through.
Transition relabel_transition(const Transition& t, const Goal& achieved,
                              const GoalSequence& gseq, RelabelMode mode);

/// Relabels step `step` of `episode` with the goal achieved at step
/// `future_step`; throws NotSameEpisode unless step <= future_step < size.
Transition relabel_from_episode(const EpisodeRecord& episode, std::size_t step,
                                std::size_t future_step, const GoalSequence& gseq,
                                RelabelMode mode);

struct SampledBatch {
  std::vector<Transition> transitions;
  /// relabelled[k] marks slots that went through relabel_transition.
  std::vector<bool> relabelled;
  std::size_t relabelled_count = 0;
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  /// Appends a whole episode and evicts the oldest ones while over capacity.
  /// The newest episode is always kept, so a single oversized episode may
  /// exceed the capacity on its own.
  void push(EpisodeRecord episode);

  /// Uniform draw over stored transitions; floor(n * relabel_fraction) slots
  /// are relabelled with a goal achieved at the same or a later step.
  SampledBatch sample_batch(std::size_t n, double relabel_fraction,
                            const GoalSequence& gseq, RelabelMode mode);

  std::size_t size() const noexcept { return total_; }
  std::size_t episode_count() const noexcept { return episodes_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const std::deque<EpisodeRecord>& episodes() const noexcept { return episodes_; }

  void dump_csv(const std::filesystem::path& path) const;

 private:
  void rebuild_offsets();

  std::size_t capacity_;
  std::mt19937_64 rng_;
  std::deque<EpisodeRecord> episodes_;
  std::vector<std::size_t> ends_;  // cumulative transition counts
  std::size_t total_ = 0;
};

void write_transition_csv_header(std::ostream& out);
void write_transition_csv(std::ostream& out, std::size_t episode, std::size_t step,
                          const Transition& t);

}  // namespace dcil
