#include "convmix/stats_extract.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "convmix/sampling.h"
#include "convmix/simulator.h"
#include "oracles.h"
#include "test_pools.h"

namespace convmix {
namespace {

Annotation ann(std::vector<TimedSegment> segs) { return make_annotation("r", std::move(segs)); }

TEST(Classify, TurnHold) {
  auto c = classify_transitions(ann({{"A", 0, 3}, {"A", 3.5, 1.5}}));
  ASSERT_EQ(c.observations.size(), 1u);
  EXPECT_EQ(c.observations[0].type, TransitionType::kTurnHold);
  EXPECT_DOUBLE_EQ(c.observations[0].measurement, 0.5);
}

TEST(Classify, Interruption) {
  auto c = classify_transitions(ann({{"A", 0, 4}, {"B", 3, 3}}));
  ASSERT_EQ(c.observations.size(), 1u);
  EXPECT_EQ(c.observations[0].type, TransitionType::kInterruption);
  // overlap 1 s over min(|u'_prev| = 4, |u_next| = 3)
  EXPECT_DOUBLE_EQ(c.observations[0].measurement, 1.0 / 3.0);
}

TEST(Classify, BackchannelKeepsPrevious) {
  // B backchannels inside A; C then starts after A, so it is measured
  // against A's end, not B's.
  auto c = classify_transitions(ann({{"A", 0, 6}, {"B", 2, 1}, {"C", 6.5, 1}}));
  ASSERT_EQ(c.observations.size(), 2u);
  EXPECT_EQ(c.observations[0].type, TransitionType::kBackchannel);
  EXPECT_DOUBLE_EQ(c.observations[0].measurement, 1.0 / 6.0);
  EXPECT_EQ(c.observations[1].type, TransitionType::kTurnSwitch);
  EXPECT_DOUBLE_EQ(c.observations[1].measurement, 0.5);
}

TEST(Classify, TurnHoldAfterBackchannelIsSameSpeakerAsPrevious) {
  auto c = classify_transitions(ann({{"A", 0, 6}, {"B", 2, 1}, {"A", 7, 1}}));
  ASSERT_EQ(c.observations.size(), 2u);
  EXPECT_EQ(c.observations[1].type, TransitionType::kTurnHold);
  EXPECT_DOUBLE_EQ(c.observations[1].measurement, 1.0);
}

TEST(Classify, SameSpeakerOverlapIsMerged) {
  auto c = classify_transitions(ann({{"A", 0, 3}, {"A", 2, 3}, {"B", 6, 1}}));
  EXPECT_EQ(c.merged_segments, 1u);
  ASSERT_EQ(c.observations.size(), 1u);
  EXPECT_EQ(c.observations[0].type, TransitionType::kTurnSwitch);
  EXPECT_DOUBLE_EQ(c.observations[0].measurement, 1.0);
}

TEST(Classify, OneObservationPerSegmentAfterFirst) {
  const auto pool = testing::lognormal_pool(10, 60);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = annotation_from_plan(simulate_plan(pool, callhome_params(), seed));
    EXPECT_EQ(classify_transitions(a).observations.size(), a.segments.size() - 1);
  }
}

TEST(Classify, RecoversSimulatorLabels) {
  // The replay must label each placement with the transition that produced it.
  const auto pool = testing::lognormal_pool(10, 60);
  std::size_t mismatches = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto plan = simulate_plan(pool, callhome_params(), seed);
    std::vector<PlacedUtterance> by_onset(plan.placements.begin(), plan.placements.end());
    std::stable_sort(by_onset.begin(), by_onset.end(),
                     [](const auto& x, const auto& y) { return x.onset < y.onset; });
    auto c = classify_transitions(annotation_from_plan(plan));
    for (std::size_t i = 1; i < by_onset.size(); ++i, ++total) {
      if (c.observations[i - 1].type != *by_onset[i].transition) ++mismatches;
    }
  }
  // A TH/TS gap of exactly zero or ties in onset can flip a label; these are
  // measure-zero events.
  EXPECT_LE(mismatches, total / 1000) << mismatches << " of " << total;
}

TEST(Classify, InvariantToInputOrder) {
  std::vector<TimedSegment> segs = {{"A", 0, 4}, {"B", 3, 3}, {"A", 6.5, 2}, {"B", 7, 0.5}};
  auto base = classify_transitions(ann(segs));
  std::mt19937_64 gen(3);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(segs.begin(), segs.end(), gen);
    auto c = classify_transitions(ann(segs));
    ASSERT_EQ(c.observations.size(), base.observations.size());
    for (std::size_t k = 0; k < c.observations.size(); ++k) {
      EXPECT_EQ(c.observations[k].type, base.observations[k].type);
      EXPECT_EQ(c.observations[k].measurement, base.observations[k].measurement);
    }
  }
}

TEST(InvertTruncatedMean, InvertsQuadratureMeans) {
  for (double beta : {0.02, 0.1, 0.44, 2.0, 50.0}) {
    const double mean = oracle::truncated_mean_quadrature(beta, 0.03);
    EXPECT_NEAR(invert_truncated_mean(mean, 0.03), beta, 1e-4 * beta) << beta;
  }
}

TEST(InvertTruncatedMean, Saturates) {
  EXPECT_EQ(invert_truncated_mean(0.5, 0.03), kMaxRate);
  EXPECT_EQ(invert_truncated_mean(0.9, 0.03), kMaxRate);
  EXPECT_EQ(invert_truncated_mean(0.03, 0.03), kMinRate);
}

TEST(Estimate, OnlyTurnHolds) {
  std::vector<Annotation> set = {make_annotation("r", {{"A", 0, 1}, {"A", 1.5, 1}, {"A", 3, 1}})};
  auto e = estimate_params(set, {SelectionMode::kRandom});
  EXPECT_EQ(e.p_ind, (TypeVector{1, 0, 0, 0}));
  ASSERT_TRUE(e.beta[0]);
  EXPECT_DOUBLE_EQ(*e.beta[0], 0.5);
  EXPECT_FALSE(e.beta[1]);
  EXPECT_FALSE(e.beta[2]);
  EXPECT_FALSE(e.beta[3]);
  EXPECT_FALSE(e.complete());
}

TEST(Estimate, MarkovUnsupportedColumn) {
  std::vector<Annotation> set = {make_annotation("r", {{"A", 0, 1}, {"A", 1.5, 1}, {"A", 3, 1}})};
  try {
    estimate_params(set, {SelectionMode::kMarkov});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("column TS has no observations"), std::string::npos) << e.what();
  }
  EstimateOptions opts;
  opts.uniform_fallback = true;
  auto e = estimate_params(set, opts);
  EXPECT_TRUE(e.column_fallback[1]);
  EXPECT_FALSE(e.column_fallback[0]);
  EXPECT_DOUBLE_EQ(e.p_markov[2][1], 0.25);
}

TEST(Estimate, NoAnnotations) {
  EXPECT_THROW(estimate_params(std::vector<Annotation>{}), DataError);
  std::vector<Annotation> single = {make_annotation("r", {{"A", 0, 1}})};
  EXPECT_THROW(estimate_params(single), DataError);
}

TEST(Estimate, SequencesDoNotBridgeRecordings) {
  // Each recording has one TH; bridging would add a TH->TH bigram.
  std::vector<Annotation> set = {make_annotation("r1", {{"A", 0, 1}, {"A", 2, 1}}),
                                 make_annotation("r2", {{"A", 0, 1}, {"A", 2, 1}})};
  EstimateOptions opts;
  opts.uniform_fallback = true;
  auto e = estimate_params(set, opts);
  EXPECT_EQ(e.counts[0], 2);
  EXPECT_EQ(e.bigrams[0][0], 0);
}

TEST(Estimate, ProbabilitiesAreStochastic) {
  const auto pool = testing::lognormal_pool(20, 60);
  std::vector<Annotation> set;
  for (int i = 0; i < 50; ++i) set.push_back(annotation_from_plan(simulate_plan(pool, callhome_params(), derive_seed(5, i))));
  auto e = estimate_params(set);
  double s = 0.0;
  for (double p : e.p_ind) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (int c = 0; c < 4; ++c) {
    double col = 0.0;
    for (int r = 0; r < 4; ++r) col += e.p_markov[r][c];
    EXPECT_NEAR(col, 1.0, 1e-12);
  }
  EXPECT_EQ(e.n_spk, 2);
  EXPECT_EQ(e.n_utt, 30);
  EXPECT_TRUE(validate_params(e.to_params({5, 10})).empty());
}

TEST(Estimate, RoundTripRandomMode) {
  auto params = callhome_params();
  params.mode = SelectionMode::kRandom;
  const auto pool = testing::lognormal_pool(20, 60);
  std::vector<Annotation> set;
  for (int i = 0; i < 500; ++i) set.push_back(annotation_from_plan(simulate_plan(pool, params, derive_seed(6, i))));
  auto e = estimate_params(set, {SelectionMode::kRandom});
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(e.p_ind[i], params.p_ind[i], 0.03);
  EXPECT_NEAR(*e.beta[0], params.beta[0], 0.1 * params.beta[0]);
  EXPECT_NEAR(*e.beta[1], params.beta[1], 0.1 * params.beta[1]);
}

}  // namespace
}  // namespace convmix
