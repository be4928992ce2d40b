#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "dcil/error.hpp"
#include "dcil/replay.hpp"
#include "dcil/sac.hpp"
#include "support/fixtures.hpp"

using namespace dcil;

namespace {

const GoalSequence kSeq = fixtures::line_goals(3);

Transition make(CarState s, int index, Goal goal, CarState next, const GoalSequence& g = kSeq) {
  Transition t;
  t.obs = {s, index, goal};
  t.action = {0.0};
  t.success = is_success(next, goal, g.eps_success);
  t.reward = t.success ? 1.0 : 0.0;
  if (t.success) {
    t.next_obs = {next, index + 1, index < g.size() ? g.goal(index + 1) : goal};
  } else {
    t.next_obs = {next, index, goal};
  }
  t.done = t.success && index == g.size();
  return t;
}

// Three steps at index 2: a miss, a miss, then a hit of g2 = (2, 1).
EpisodeRecord three_step_episode() {
  std::vector<Transition> ts;
  ts.push_back(make({1.0, 1.2, 0.0}, 2, kSeq.goal(2), {1.3, 1.4, 0.0}));
  ts.push_back(make({1.3, 1.4, 0.0}, 2, kSeq.goal(2), {1.7, 1.2, 0.0}));
  ts.push_back(make({1.7, 1.2, 0.0}, 2, kSeq.goal(2), {2.0, 1.05, 0.0}));
  return EpisodeRecord::from_transitions(std::move(ts));
}

EpisodeRecord numbered_episode(int id, int length) {
  std::vector<Transition> ts;
  for (int k = 0; k < length; ++k) {
    Transition t;
    t.obs = {{100.0 * id + k, 0.5, 0.0}, 1, kSeq.goal(1)};
    t.next_obs = {{100.0 * id + k + 0.5, 0.5, 0.0}, 1, kSeq.goal(1)};
    ts.push_back(t);
  }
  return EpisodeRecord::from_transitions(std::move(ts));
}

}  // namespace

TEST(Relabel, FailureOntoOwnAchievedGoalBecomesSuccess) {
  const auto ep = three_step_episode();
  const auto r = relabel_from_episode(ep, 0, 0, kSeq, RelabelMode::dcil2);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.obs.goal, ep.achieved_goals[0]);
  EXPECT_EQ(r.next_obs.index, 3);
  EXPECT_EQ(r.next_obs.goal, kSeq.goal(3));
  EXPECT_FALSE(r.done);
  EXPECT_EQ(r.next_obs.state, ep.transitions[0].next_obs.state);
}

TEST(Relabel, FailureOntoDistantGoalStaysFailure) {
  const auto ep = three_step_episode();
  const auto r = relabel_from_episode(ep, 0, 2, kSeq, RelabelMode::dcil2);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.obs.goal, ep.achieved_goals[2]);
  EXPECT_EQ(r.next_obs.goal, ep.achieved_goals[2]);
  EXPECT_EQ(r.next_obs.index, 2);
  EXPECT_FALSE(r.done);
}

TEST(Relabel, OriginalSuccessPassesThrough) {
  const auto ep = three_step_episode();
  for (auto mode : {RelabelMode::dcil2, RelabelMode::no_index, RelabelMode::dcil1_bonus}) {
    for (std::size_t f : {2u}) {
      const auto r = relabel_from_episode(ep, 2, f, kSeq, mode);
      EXPECT_EQ(r.obs, ep.transitions[2].obs);
      EXPECT_EQ(r.next_obs, ep.transitions[2].next_obs);
      EXPECT_EQ(r.reward, 1.0);
    }
  }
}

TEST(Relabel, FinalIndexRelabelledSuccessIsTerminal) {
  const auto t = make({2.5, 1.3, 0.0}, 3, kSeq.goal(3), {2.9, 1.5, 0.0});
  ASSERT_FALSE(t.success);
  const auto r = relabel_transition(t, {2.9, 1.5}, kSeq, RelabelMode::dcil2);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.next_obs.index, 4);
}

TEST(Relabel, FailureKeepsEnvDone) {
  auto t = make({2.5, 1.3, 0.0}, 1, kSeq.goal(1), {2.9, 1.5, 0.0});
  t.env_done = t.done = true;
  const auto r = relabel_transition(t, {5.0, 1.0}, kSeq, RelabelMode::dcil2);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.success);
}

TEST(Relabel, VanillaHerModes) {
  const auto ep = three_step_episode();
  for (auto mode : {RelabelMode::no_index, RelabelMode::dcil1_bonus}) {
    const auto hit = relabel_from_episode(ep, 1, 1, kSeq, mode);
    EXPECT_TRUE(hit.success);
    EXPECT_TRUE(hit.done);
    EXPECT_EQ(hit.next_obs.goal, ep.achieved_goals[1]);
    EXPECT_EQ(hit.next_obs.index, 3);
    const auto miss = relabel_from_episode(ep, 0, 2, kSeq, mode);
    EXPECT_FALSE(miss.success);
    EXPECT_FALSE(miss.done);
    EXPECT_EQ(miss.next_obs.goal, ep.achieved_goals[2]);
  }
}

TEST(Relabel, NoGoalModeIsIdentity) {
  const auto ep = three_step_episode();
  const auto r = relabel_from_episode(ep, 0, 0, kSeq, RelabelMode::no_goal);
  EXPECT_EQ(r.obs, ep.transitions[0].obs);
  EXPECT_EQ(r.reward, 0.0);
}

TEST(Relabel, EarlierStepIsRejected) {
  const auto ep = three_step_episode();
  EXPECT_THROW(relabel_from_episode(ep, 2, 1, kSeq, RelabelMode::dcil2), NotSameEpisode);
  EXPECT_THROW(relabel_from_episode(ep, 0, 3, kSeq, RelabelMode::dcil2), NotSameEpisode);
}

TEST(Relabel, NoIndexAliasesWhereIndexDisambiguates) {
  // Same (s, s') reached while pursuing different goals of the sequence.
  const CarState s{1.6, 1.4, 0.3}, s2{2.08, 1.55, 0.3};
  const auto a = make(s, 1, kSeq.goal(1), s2);
  const auto b = make(s, 2, kSeq.goal(2), s2);
  const Goal bar{2.08, 1.55};
  const FeatureLayout plain(3, RelabelMode::no_index);
  const FeatureLayout indexed(3, RelabelMode::dcil2);
  const Normalizer none;
  const auto ra = relabel_transition(a, bar, kSeq, RelabelMode::no_index);
  const auto rb = relabel_transition(b, bar, kSeq, RelabelMode::no_index);
  EXPECT_EQ(encode_obs(ra.obs, plain, none), encode_obs(rb.obs, plain, none));
  EXPECT_EQ(encode_obs(ra.next_obs, plain, none), encode_obs(rb.next_obs, plain, none));
  EXPECT_EQ(ra.reward, rb.reward);
  EXPECT_EQ(ra.done, rb.done);

  const auto da = relabel_transition(a, bar, kSeq, RelabelMode::dcil2);
  const auto db = relabel_transition(b, bar, kSeq, RelabelMode::dcil2);
  EXPECT_NE(encode_obs(da.obs, indexed, none), encode_obs(db.obs, indexed, none));
  EXPECT_NE(da.next_obs.goal, db.next_obs.goal);
}

TEST(Relabel, RewardMatchesIndexShiftOnSyntheticEpisodes) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int ep = 0; ep < 200; ++ep) {
    std::vector<Transition> ts;
    CarState s{0.5, 1.0, 0.0};
    int index = 1;
    for (int k = 0; k < 6 && index <= 3; ++k) {
      const CarState n = step_dynamics(s, {u(rng)}, 0.5, 1.0);
      ts.push_back(make(s, index, kSeq.goal(index), n));
      index = ts.back().next_obs.index;
      s = n;
    }
    const auto rec = EpisodeRecord::from_transitions(ts);
    for (std::size_t t = 0; t < rec.size(); ++t) {
      for (std::size_t f = t; f < rec.size(); ++f) {
        const auto r = relabel_from_episode(rec, t, f, kSeq, RelabelMode::dcil2);
        EXPECT_EQ(r.reward == 1.0, r.next_obs.index == r.obs.index + 1);
      }
    }
  }
}

TEST(ReplayBuffer, OversizedEpisodeIsKept) {
  ReplayBuffer buf(8, 0);
  buf.push(numbered_episode(0, 10));
  EXPECT_EQ(buf.episode_count(), 1u);
  EXPECT_EQ(buf.size(), 10u);
}

TEST(ReplayBuffer, FifoEvictionOfWholeEpisodes) {
  ReplayBuffer buf(8, 0);
  for (int e = 0; e < 3; ++e) buf.push(numbered_episode(e, 4));
  EXPECT_EQ(buf.size(), 8u);
  EXPECT_EQ(buf.episode_count(), 2u);
  EXPECT_EQ(buf.episodes().front().transitions[0].obs.state.x, 100.0);
}

TEST(ReplayBuffer, RejectsEmptyAndSamplingEmpty) {
  ReplayBuffer buf(8, 0);
  EXPECT_THROW(buf.push(EpisodeRecord{}), EmptyEpisode);
  EXPECT_THROW(buf.sample_batch(4, 0.5, kSeq, RelabelMode::dcil2), BufferEmpty);
}

TEST(ReplayBuffer, RelabelCountIsFloor) {
  ReplayBuffer buf(100, 1);
  buf.push(numbered_episode(0, 10));
  EXPECT_EQ(buf.sample_batch(4, 0.5, kSeq, RelabelMode::dcil2).relabelled_count, 2u);
  EXPECT_EQ(buf.sample_batch(5, 0.5, kSeq, RelabelMode::dcil2).relabelled_count, 2u);
  EXPECT_EQ(buf.sample_batch(7, 0.3, kSeq, RelabelMode::dcil2).relabelled_count, 2u);
  EXPECT_EQ(buf.sample_batch(9, 0.0, kSeq, RelabelMode::dcil2).relabelled_count, 0u);
  const auto b = buf.sample_batch(64, 1.0, kSeq, RelabelMode::no_goal);
  EXPECT_EQ(b.relabelled_count, 0u);
  for (std::size_t k = 0; k < b.transitions.size(); ++k) {
    EXPECT_FALSE(b.relabelled[k]);
    EXPECT_EQ(b.transitions[k].obs.goal, kSeq.goal(1));
  }
  // membership of the relabelled slots varies between batches
  std::set<std::vector<bool>> patterns;
  for (int k = 0; k < 20; ++k) patterns.insert(buf.sample_batch(8, 0.5, kSeq, RelabelMode::dcil2).relabelled);
  EXPECT_GT(patterns.size(), 1u);
}

TEST(ReplayBuffer, UniformOverStoredTransitions) {
  ReplayBuffer buf(1000, 3);
  buf.push(numbered_episode(0, 2));
  buf.push(numbered_episode(1, 8));
  std::map<double, int> counts;
  const int draws = 20000;
  for (int k = 0; k < draws / 100; ++k) {
    for (const auto& t : buf.sample_batch(100, 0.0, kSeq, RelabelMode::dcil2).transitions) {
      ++counts[t.obs.state.x];
    }
  }
  ASSERT_EQ(counts.size(), 10u);
  for (const auto& [x, c] : counts) EXPECT_NEAR(c / double(draws), 0.1, 0.015) << x;
}

TEST(ReplayBuffer, FutureGoalsNeverEarlier) {
  ReplayBuffer buf(1000, 4);
  for (int e = 0; e < 4; ++e) buf.push(numbered_episode(e, 6));
  for (int k = 0; k < 50; ++k) {
    const auto b = buf.sample_batch(32, 1.0, kSeq, RelabelMode::dcil2);
    for (const auto& t : b.transitions) {
      const double x = t.obs.state.x;
      const int id = static_cast<int>(x / 100.0);
      const int step = static_cast<int>(x - 100.0 * id);
      const int future = static_cast<int>(t.obs.goal.x - 0.5 - 100.0 * id);
      EXPECT_GE(future, step);
      EXPECT_LT(future, 6);
      EXPECT_DOUBLE_EQ(t.obs.goal.y, 0.5);
    }
  }
}

TEST(ReplayBuffer, DumpCsvRowPerTransition) {
  ReplayBuffer buf(100, 0);
  buf.push(three_step_episode());
  buf.push(numbered_episode(1, 4));
  const auto dir = fixtures::temp_dir("dump");
  buf.dump_csv(dir / "b.csv");
  std::ifstream in(dir / "b.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1 + 3 + 4);
}
