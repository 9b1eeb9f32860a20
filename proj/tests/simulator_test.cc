#include "convmix/simulator.h"

#include <gtest/gtest.h>

#include <cmath>

#include "convmix/metrics.h"
#include "sim_oracle.h"
#include "test_pools.h"

namespace convmix {
namespace {

using testing::lognormal_pool;

SimState state_with(double onset, double end, double free_start, const std::string& speaker) {
  SimState s;
  s.timeline_end = end;
  s.u_prev_onset = onset;
  s.u_prev_end = end;
  s.free_start = free_start;
  s.last_speaker = speaker;
  s.placed = 3;
  s.u_prev = 2;
  return s;
}

UtteranceRecord utt(const std::string& id, const std::string& speaker, double d) {
  return {id, speaker, d, ""};
}

TEST(PlaceTransition, InterruptionArithmetic) {
  auto s = state_with(10.0, 14.0, 10.0, "A");
  auto step = place_transition(s, TransitionType::kInterruption, utt("b", "B", 2.0), "B", {0.5, 0.0});
  EXPECT_DOUBLE_EQ(step.delta, 1.0);
  EXPECT_DOUBLE_EQ(step.placed.onset, 13.0);
  EXPECT_EQ(step.state.last_speaker, "B");
  EXPECT_DOUBLE_EQ(step.state.u_prev_end, 15.0);
  EXPECT_DOUBLE_EQ(step.state.free_start, 14.0);
  EXPECT_DOUBLE_EQ(step.state.timeline_end, 15.0);
  EXPECT_EQ(step.state.u_prev, 3u);
}

TEST(PlaceTransition, InterruptionUsesFreeTail) {
  // Only [12, 14] of u_prev is free, so the overlap scales with 2 s.
  auto s = state_with(10.0, 14.0, 12.0, "A");
  auto step = place_transition(s, TransitionType::kInterruption, utt("b", "B", 5.0), "B", {0.5, 0.0});
  EXPECT_DOUBLE_EQ(step.delta, 1.0);
  EXPECT_DOUBLE_EQ(step.placed.onset, 13.0);
}

TEST(PlaceTransition, TurnHold) {
  auto s = state_with(8.0, 10.0, 8.0, "A");
  auto step = place_transition(s, TransitionType::kTurnHold, utt("a2", "A", 1.0), "A", {0.3, 0.0});
  EXPECT_DOUBLE_EQ(step.placed.onset, 10.3);
  EXPECT_EQ(step.placed.speaker, "A");
  EXPECT_EQ(step.state.u_prev, 3u);
  EXPECT_DOUBLE_EQ(step.state.free_start, 10.3);
  EXPECT_DOUBLE_EQ(step.state.timeline_end, 11.3);
}

TEST(PlaceTransition, TurnHoldRejectsOtherSpeaker) {
  auto s = state_with(8.0, 10.0, 8.0, "A");
  EXPECT_THROW(place_transition(s, TransitionType::kTurnHold, utt("b", "B", 1.0), "B", {0.3, 0.0}),
               DataError);
  EXPECT_THROW(place_transition(s, TransitionType::kTurnSwitch, utt("a", "A", 1.0), "A", {0.3, 0.0}),
               DataError);
}

TEST(PlaceTransition, BackchannelPositionIsUniformOverFeasibleStarts) {
  auto s = state_with(9.0, 14.0, 10.0, "A");
  const auto u = utt("b", "B", 1.5);
  for (double pos : {0.0, 0.25, 0.5, 0.999}) {
    auto step = place_transition(s, TransitionType::kBackchannel, u, "B", {0.2, pos});
    EXPECT_NEAR(step.placed.onset, 10.0 + pos * 2.5, 1e-12);
    EXPECT_EQ(step.state.u_prev, s.u_prev);
    EXPECT_EQ(step.state.last_speaker, "A");
    EXPECT_DOUBLE_EQ(step.state.u_prev_end, 14.0);
    EXPECT_DOUBLE_EQ(step.state.timeline_end, 14.0);
    EXPECT_NEAR(step.state.free_start, step.placed.end(), 1e-12);
  }
}

TEST(PlaceTransition, BackchannelLongerThanFreeSpan) {
  auto s = state_with(9.0, 14.0, 13.0, "A");
  try {
    place_transition(s, TransitionType::kBackchannel, utt("b", "B", 1.5), "B", {0.2, 0.5});
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "backchannel longer than free span");
  }
}

SimParams two_speaker(TypeVector p_ind, int n_utt) {
  SimParams p = callhome_params();
  p.mode = SelectionMode::kRandom;
  p.p_ind = p_ind;
  p.n_spk = 2;
  p.n_utt = n_utt;
  return p;
}

TEST(SimulatePlan, AllTurnHold) {
  auto plan = simulate_plan(lognormal_pool(4, 20), two_speaker({1, 0, 0, 0}, 5), 3);
  ASSERT_EQ(plan.placements.size(), 5u);
  EXPECT_EQ(plan.placements[0].onset, 0.0);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_EQ(plan.placements[i].speaker, plan.placements[0].speaker);
    EXPECT_GE(plan.placements[i].onset, plan.placements[i - 1].end());
  }
  EXPECT_EQ(overlap_ratio(annotation_from_plan(plan)), 0.0);
}

TEST(SimulatePlan, AllInterruption) {
  auto plan = simulate_plan(lognormal_pool(4, 20), two_speaker({0, 0, 1, 0}, 10), 4);
  ASSERT_EQ(plan.placements.size(), 10u);
  for (std::size_t i = 1; i < plan.placements.size(); ++i) {
    EXPECT_LT(plan.placements[i].onset, plan.placements[i - 1].end());
    EXPECT_NE(plan.placements[i].speaker, plan.placements[i - 1].speaker);
  }
  EXPECT_GT(overlap_ratio(annotation_from_plan(plan)), 0.0);
}

TEST(SimulatePlan, DeterministicPerSeed) {
  const auto pool = lognormal_pool(10, 40);
  const auto params = callhome_params();
  auto a = simulate_plan(pool, params, 77);
  auto b = simulate_plan(pool, params, 77);
  auto c = simulate_plan(pool, params, 78);
  EXPECT_EQ(a.placements, b.placements);
  EXPECT_NE(a.placements, c.placements);
}

TEST(SimulatePlan, NoUtteranceRepeatsWithinMixture) {
  const auto pool = lognormal_pool(3, 40);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto plan = simulate_plan(pool, callhome_params(), seed);
    std::set<std::string> ids;
    for (const auto& p : plan.placements) EXPECT_TRUE(ids.insert(p.id).second) << p.id;
  }
}

TEST(SimulatePlan, PoolExhaustionNamesSpeaker) {
  auto params = two_speaker({1, 0, 0, 0}, 6);
  const auto pool = lognormal_pool(2, 3);
  try {
    simulate_plan(pool, params, 1);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("spk00"), std::string::npos) << e.what();
  }
}

TEST(SimulatePlan, TooFewSpeakers) {
  EXPECT_THROW(simulate_plan(lognormal_pool(1, 40), callhome_params(), 1), DataError);
}

TEST(SimulatePlan, SingleSpeakerOnlyTurnHolds) {
  auto params = callhome_params();
  params.n_spk = 1;
  params.n_utt = 10;
  auto plan = simulate_plan(lognormal_pool(3, 20), params, 5);
  for (std::size_t i = 1; i < plan.placements.size(); ++i) {
    EXPECT_EQ(plan.placements[i].transition, TransitionType::kTurnHold);
  }
}

TEST(SimulatePlan, StructuralInvariants) {
  const auto pool = lognormal_pool(20, 60);
  testing::PlanViolations v;
  for (auto mode : {SelectionMode::kRandom, SelectionMode::kMarkov}) {
    auto params = callhome_params();
    params.mode = mode;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto plan = simulate_plan(pool, params, derive_seed(seed, 1), "m" + std::to_string(seed));
      ASSERT_EQ(plan.placements.size(), 30u);
      testing::check_plan(plan, params.epsilon, v);
      int peak = 0;
      for (const auto& iv : speaker_count_intervals(annotation_from_plan(plan))) peak = std::max(peak, iv.count);
      EXPECT_LE(peak, 2);
    }
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(v.messages.size(), 10); ++i) ADD_FAILURE() << v.messages[i];
  EXPECT_TRUE(v.messages.empty());
}

std::array<double, 4> type_frequencies(const UtterancePool& pool, const SimParams& params, int mixtures) {
  std::array<double, 4> counts{};
  double total = 0.0;
  for (int m = 0; m < mixtures; ++m) {
    auto plan = simulate_plan(pool, params, derive_seed(99, m));
    for (const auto& p : plan.placements) {
      if (p.transition) {
        counts[index_of(*p.transition)] += 1.0;
        total += 1.0;
      }
    }
  }
  for (auto& c : counts) c /= total;
  return counts;
}

TEST(SimulatePlan, RandomModeTypeFrequencies) {
  auto params = callhome_params();
  params.mode = SelectionMode::kRandom;
  // 400 mixtures x 29 transitions = 11600 transitions.
  const auto f = type_frequencies(lognormal_pool(20, 60), params, 400);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(f[i], params.p_ind[i], 0.02) << to_string(kTransitionOrder[i]);
}

TEST(SimulatePlan, MarkovModeStationaryFrequencies) {
  auto params = callhome_params();
  // Stationary distribution by power iteration.
  TypeVector pi = params.p_ind;
  for (int k = 0; k < 500; ++k) {
    TypeVector next{};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) next[r] += params.p_markov[r][c] * pi[c];
    }
    pi = next;
  }
  const auto f = type_frequencies(lognormal_pool(20, 60), params, 400);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(f[i], pi[i], 0.02) << to_string(kTransitionOrder[i]);
}

TEST(ConcatAndSum, ExtentIsLongestChannel) {
  SpeakerScripts scripts = {{"A", {utt("a1", "A", 4.0), utt("a2", "A", 3.0)}},
                            {"B", {utt("b1", "B", 8.0)}}};
  auto plan = concat_and_sum_plan(scripts, 2.0, 1);
  ASSERT_EQ(plan.placements.size(), 3u);
  const double a_total = plan.placements[1].end();
  EXPECT_DOUBLE_EQ(plan.placements[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(plan.placements[2].onset, 0.0);
  EXPECT_DOUBLE_EQ(plan.extent(), std::max(a_total, 8.0));
}

TEST(ConcatAndSum, SingleUtterance) {
  auto plan = concat_and_sum_plan({{"A", {utt("a1", "A", 3.0)}}}, 2.0, 1);
  ASSERT_EQ(plan.placements.size(), 1u);
  EXPECT_EQ(plan.placements[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(plan.extent(), 3.0);
}

TEST(ConcatAndSum, MeanGap) {
  std::vector<UtteranceRecord> list;
  for (int i = 0; i <= 10000; ++i) list.push_back(utt("a" + std::to_string(i), "A", 1.0));
  auto plan = concat_and_sum_plan({{"A", list}}, 2.0, 12);
  double gaps = 0.0;
  for (std::size_t i = 1; i < plan.placements.size(); ++i) {
    gaps += plan.placements[i].onset - plan.placements[i - 1].end();
  }
  const double mean = gaps / 10000.0;
  EXPECT_GE(mean, 1.96);
  EXPECT_LE(mean, 2.04);
}

TEST(ConcatAndSum, RejectsBadInput) {
  EXPECT_THROW(concat_and_sum_plan({{"A", {utt("a1", "A", 3.0)}}}, 0.0, 1), DataError);
  EXPECT_THROW(concat_and_sum_plan({{"A", {}}}, 2.0, 1), DataError);
}

TEST(DrawConcatScripts, RoundRobinSplit) {
  Rng rng(3);
  auto scripts = draw_concat_scripts(lognormal_pool(5, 20), 2, 7, rng);
  ASSERT_EQ(scripts.size(), 2u);
  EXPECT_EQ(scripts[0].second.size(), 4u);
  EXPECT_EQ(scripts[1].second.size(), 3u);
  EXPECT_NE(scripts[0].first, scripts[1].first);
  for (const auto& [spk, utts] : scripts) {
    for (const auto& u : utts) EXPECT_EQ(u.speaker, spk);
  }
}

}  // namespace
}  // namespace convmix
