#include "convmix/metrics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "convmix/simulator.h"
#include "oracles.h"
#include "test_pools.h"

namespace convmix {
namespace {

Annotation ann(std::vector<TimedSegment> segs, double extent = -1.0) {
  return make_annotation("r", std::move(segs), extent);
}

TEST(SilenceRatio, Examples) {
  EXPECT_DOUBLE_EQ(silence_ratio(ann({{"A", 0, 2}, {"B", 3, 2}}, 5)), 0.2);
  EXPECT_EQ(silence_ratio(ann({{"A", 0, 3}, {"B", 2, 3}})), 0.0);
  EXPECT_THROW(silence_ratio(ann({}, 0.0)), DataError);
}

TEST(OverlapRatio, Examples) {
  EXPECT_DOUBLE_EQ(overlap_ratio(ann({{"A", 0, 4}, {"B", 2, 4}})), 1.0 / 3.0);
  EXPECT_EQ(overlap_ratio(ann({{"A", 0, 2}, {"B", 3, 2}})), 0.0);
  EXPECT_THROW(overlap_ratio(ann({}, 5.0)), DataError);
}

TEST(DurationSamples, Examples) {
  auto d = duration_samples(ann({{"A", 0, 2}, {"B", 3, 2}}));
  EXPECT_EQ(d.silence, std::vector<double>{1.0});
  EXPECT_TRUE(d.overlap.empty());
  d = duration_samples(ann({{"A", 0, 4}, {"B", 2, 4}}));
  EXPECT_TRUE(d.silence.empty());
  EXPECT_EQ(d.overlap, std::vector<double>{2.0});
  // Leading and trailing silence are not pauses.
  d = duration_samples(ann({{"A", 1, 1}, {"B", 2.5, 1}}, 6));
  EXPECT_EQ(d.silence, std::vector<double>{0.5});
}

TEST(DurationSamples, ThreeWayOverlapIsOneRun) {
  auto d = duration_samples(ann({{"A", 0, 5}, {"B", 1, 2}, {"C", 2, 2}}));
  EXPECT_EQ(d.overlap, std::vector<double>{3.0});
}

TEST(Emd, Examples) {
  const std::vector<double> x = {1, 2, 3};
  EXPECT_EQ(emd_1d(x, x), 0.0);
  EXPECT_DOUBLE_EQ(emd_1d(std::vector<double>{0}, std::vector<double>{1}), 1.0);
  try {
    emd_1d(std::vector<double>{}, x);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "no samples");
  }
}

TEST(Emd, MatchesTransportOracle) {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<int> size(1, 30);
  std::exponential_distribution<double> value(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(size(gen)), v(size(gen));
    for (auto& x : u) x = value(gen);
    for (auto& x : v) x = value(gen);
    if (trial % 5 == 0) v[0] = u[0];  // exercise ties
    EXPECT_NEAR(emd_1d(u, v), oracle::transport_cost(u, v), 1e-9) << "trial " << trial;
  }
}

TEST(Emd, MetricProperties) {
  std::mt19937_64 gen(22);
  std::normal_distribution<double> value(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(7 + trial % 11), b(3 + trial % 17), c(1 + trial % 5);
    for (auto* s : {&a, &b, &c}) {
      for (auto& x : *s) x = value(gen);
    }
    EXPECT_NEAR(emd_1d(a, b), emd_1d(b, a), 1e-12);
    EXPECT_LE(emd_1d(a, c), emd_1d(a, b) + emd_1d(b, c) + 1e-12);
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    EXPECT_EQ(emd_1d(a, shuffled), 0.0);
  }
}

TEST(Similarity, Examples) {
  EXPECT_EQ(similarity_from_emd(0.0), 1.0);
  EXPECT_NEAR(similarity_from_emd(1000.0, 0.001), std::exp(-1.0), 1e-15);
  const std::vector<double> u = {1, 5, 9}, v = {2, 2};
  EXPECT_EQ(similarity_score(u, v), similarity_score(v, u));
  EXPECT_GT(similarity_score(u, v), 0.0);
  EXPECT_LT(similarity_score(u, v), 1.0);
  EXPECT_THROW(similarity_from_emd(1.0, 0.0), DataError);
}

TEST(RatioOracle, SweepMatchesRasterization) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> onset(0.0, 40.0), dur(0.05, 5.0);
  std::uniform_int_distribution<int> spk(0, 2), count(1, 30);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TimedSegment> segs;
    std::vector<oracle::Segment> raw;
    const int n = count(gen);
    for (int i = 0; i < n; ++i) {
      TimedSegment s{"S" + std::to_string(spk(gen)), onset(gen), dur(gen)};
      segs.push_back(s);
      raw.push_back({s.speaker, s.onset, s.end()});
    }
    auto a = make_annotation("r", segs, trial % 3 ? -1.0 : 50.0);
    const auto grid = oracle::rasterize(raw, a.extent);
    const auto t = speech_totals(a);
    const double tol = 2e-3 * n;
    EXPECT_NEAR(t.silence, grid.silence, tol);
    EXPECT_NEAR(t.speech, grid.speech, tol);
    EXPECT_NEAR(t.overlap, grid.overlap, tol);
    EXPECT_NEAR(t.silence + t.speech, a.extent, 1e-9);
    EXPECT_NEAR(silence_ratio(a), grid.silence / a.extent, tol / a.extent);
  }
}

TEST(DatasetStats, PoolsDurations) {
  std::vector<Annotation> set = {make_annotation("r1", {{"A", 0, 2}, {"B", 3, 2}}),
                                 make_annotation("r2", {{"A", 0, 4}, {"B", 2, 4}})};
  auto s = dataset_stats(set);
  EXPECT_EQ(s.recordings, 2u);
  EXPECT_DOUBLE_EQ(s.silence_ratio, 1.0 / 11.0);
  EXPECT_DOUBLE_EQ(s.overlap_ratio, 2.0 / 10.0);
  EXPECT_EQ(s.silence_durations, std::vector<double>{1.0});
  EXPECT_EQ(s.overlap_durations, std::vector<double>{2.0});
  EXPECT_NEAR(s.total_hours, 11.0 / 3600.0, 1e-15);
}

std::vector<Annotation> simulated(std::uint64_t seed, int n) {
  const auto pool = testing::lognormal_pool(20, 60);
  std::vector<Annotation> out;
  for (int i = 0; i < n; ++i) out.push_back(annotation_from_plan(simulate_plan(pool, callhome_params(), derive_seed(seed, i))));
  return out;
}

TEST(CompareDatasets, SelfComparisonIsExactlyOne) {
  auto s = dataset_stats(simulated(1, 20));
  auto r = compare_datasets(s, s);
  EXPECT_EQ(r.silence_similarity, 1.0);
  EXPECT_EQ(r.overlap_similarity, 1.0);
  EXPECT_EQ(r.silence_ratio_delta(), 0.0);
}

// Around 100 mixtures per side the sampling noise alone puts EMD near 60 ms.
TEST(CompareDatasets, DifferentSeedsAreSimilar) {
  auto r = compare_datasets(dataset_stats(simulated(1, 400)), dataset_stats(simulated(2, 400)));
  ASSERT_TRUE(r.silence_similarity && r.overlap_similarity);
  EXPECT_GE(*r.silence_similarity, 0.95);
  EXPECT_GE(*r.overlap_similarity, 0.95);
}

TEST(CompareDatasets, UsesMilliseconds) {
  DatasetStats a, b;
  a.silence_durations = {1.0};
  b.silence_durations = {2.0};
  auto r = compare_datasets(a, b);
  ASSERT_TRUE(r.emd_silence_ms);
  EXPECT_DOUBLE_EQ(*r.emd_silence_ms, 1000.0);
  EXPECT_NEAR(*r.silence_similarity, std::exp(-1.0), 1e-15);
  EXPECT_FALSE(r.overlap_similarity);
  EXPECT_FALSE(r.emd_overlap_ms);
}

TEST(FormatReport, ShowsUndefinedSimilarity) {
  DatasetStats a, b;
  a.silence_durations = {1.0};
  b.silence_durations = {1.0};
  auto text = format_report(compare_datasets(a, b), "real", "sim");
  EXPECT_NE(text.find("real"), std::string::npos);
  EXPECT_NE(text.find("1.000"), std::string::npos);
  EXPECT_NE(text.find("n/a"), std::string::npos) << text;
}

}  // namespace
}  // namespace convmix
