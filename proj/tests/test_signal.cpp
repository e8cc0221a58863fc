#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "dafd/error.hpp"
#include "dafd/ingest.hpp"
#include "dafd/signal.hpp"

using namespace dafd;

namespace {

TrialRecord trial_from(std::vector<Vec3> samples, double rate) {
  TrialRecord t;
  t.trial_id = "t";
  t.subject_id = "S01";
  t.dataset_id = "d";
  t.position = "WA";
  t.activity_code = "A1";
  t.sample_rate_hz = rate;
  t.samples = std::move(samples);
  return t;
}

std::vector<double> axis(const Segment& s, int a) {
  return {s.values.begin() + a * s.length, s.values.begin() + (a + 1) * s.length};
}

// Index of the largest-magnitude non-DC bin of a naive DFT.
std::size_t dominant_bin(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n));
    }
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST(RationalFactor, DatasetRates) {
  EXPECT_EQ(rational_factor(20.0, 18.4), ResampleFactor(23, 25));
  EXPECT_EQ(rational_factor(200.0, 18.4), ResampleFactor(23, 250));
  EXPECT_TRUE(rational_factor(18.4, 18.4).is_identity());
}

TEST(Resample, OutputRateAndLength) {
  const TrialRecord t = trial_from(std::vector<Vec3>(2001, Vec3{0, 0, 1}), 200.0);
  const TrialRecord r = resample(t, ResampleFactor(23, 250));
  EXPECT_NEAR(r.sample_rate_hz, 18.4, 1e-12);
  EXPECT_EQ(r.samples.size(), 2000u * 23u / 250u + 1u);
}

TEST(Resample, IdentityFactor) {
  std::vector<Vec3> xs;
  for (int i = 0; i < 50; ++i) xs.push_back({std::sin(i), std::cos(i), 0.5 * i});
  const TrialRecord t = trial_from(xs, 20.0);
  EXPECT_EQ(resample(t, ResampleFactor(1, 1)).samples, xs);
}

TEST(Resample, ExactOnAffineSignals) {
  const double a = 0.37, b = -1.25;
  std::vector<Vec3> xs;
  for (int i = 0; i < 201; ++i) xs.push_back({a * i + b, -a * i, 2.0 * a * i + 3.0});
  const ResampleFactor f(23, 25);
  const TrialRecord r = resample(trial_from(xs, 20.0), f);
  for (std::size_t k = 0; k < r.samples.size(); ++k) {
    const double pos = static_cast<double>(k) * 25.0 / 23.0;
    const double want = a * pos + b;
    EXPECT_LE(std::abs(r.samples[k].x - want), 1e-12 * std::max(1.0, std::abs(want)));
    EXPECT_LE(std::abs(r.samples[k].z - (2.0 * a * pos + 3.0)), 1e-12 * std::max(1.0, std::abs(2 * a * pos + 3)));
  }
}

TEST(Resample, SineKeepsDominantFrequency) {
  const double rate = 20.0, f0 = 2.0;
  std::vector<Vec3> xs;
  for (int i = 0; i < 400; ++i) xs.push_back({std::sin(2 * std::numbers::pi * f0 * i / rate), 0, 0});
  const TrialRecord r = resample(trial_from(xs, rate), ResampleFactor(23, 25));
  std::vector<double> x;
  for (const auto& s : r.samples) x.push_back(s.x);
  const double bin_hz = r.sample_rate_hz / static_cast<double>(x.size());
  const double got = static_cast<double>(dominant_bin(x)) * bin_hz;
  EXPECT_LE(std::abs(got - f0), bin_hz);
}

TEST(Resample, NeedsTwoSamples) {
  EXPECT_THROW(resample(trial_from({Vec3{0, 0, 1}}, 20.0), ResampleFactor(23, 25)), DataError);
}

TEST(Norm, Examples) {
  EXPECT_EQ(norm_xyz({0, 0, 0}), 0.0);
  EXPECT_EQ(norm_xyz({3, 4, 0}), 5.0);
  EXPECT_NEAR(norm_xyz({1, 1, 1}), 1.7320508, 1e-7);
}

TEST(ImpactWindow, CentredOnUniqueMaximum) {
  std::vector<Vec3> xs;
  for (int i = 0; i < 200; ++i) xs.push_back({static_cast<double>(i), 0, i == 100 ? 1e6 : 0.0});
  const Segment s = impact_window(trial_from(xs, 18.4), WindowConfig{});
  ASSERT_EQ(s.length, 66);
  EXPECT_EQ(s.at(0, 0), 63.0);
  EXPECT_EQ(s.at(0, 65), 128.0);
  EXPECT_EQ(s.at(0, 37), 100.0);
  EXPECT_EQ(s.impact_index, 37);
}

TEST(ImpactWindow, EdgeReplicationAtStart) {
  std::vector<Vec3> xs;
  for (int i = 0; i < 80; ++i) xs.push_back({0.01 * i, 0, i == 0 ? 9.0 : 1.0});
  const Segment s = impact_window(trial_from(xs, 18.4), WindowConfig{});
  ASSERT_EQ(s.length, 66);
  for (int t = 0; t < 38; ++t) EXPECT_EQ(s.at(0, t), 0.0);
  EXPECT_EQ(s.at(0, 38), 0.01);
}

TEST(ImpactWindow, ConstantTrialTiesToFirst) {
  const std::vector<Vec3> xs(30, Vec3{0.1, 0.2, 0.9});
  EXPECT_EQ(impact_index(xs), 0u);
}

TEST(ImpactWindow, AlwaysFullLength) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(1, 150);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Vec3> xs(static_cast<std::size_t>(len(rng)));
    for (auto& v : xs) v = {g(rng), g(rng), g(rng)};
    const Segment s = impact_window(trial_from(xs, 18.4), WindowConfig{});
    EXPECT_EQ(s.length, 66);
    EXPECT_EQ(s.values.size(), 198u);
  }
  EXPECT_THROW(impact_window(trial_from({}, 18.4), WindowConfig{}), DataError);
}

TEST(MinMax, Examples) {
  Segment s;
  s.length = 3;
  s.values = {2, 4, 6, 5, 5, 5, -1, 0, 1};
  const Segment n = minmax_normalize(s);
  EXPECT_EQ(axis(n, 0), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(axis(n, 1), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(axis(n, 2), (std::vector<double>{0, 0.5, 1}));
}

TEST(MinMax, RandomSegmentsSpanUnitIntervalAndAreIdempotent) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    Segment s;
    s.length = 66;
    s.values.resize(198);
    for (double& v : s.values) v = g(rng);
    const Segment n = minmax_normalize(s);
    for (int a = 0; a < 3; ++a) {
      const auto xs = axis(n, a);
      EXPECT_EQ(*std::min_element(xs.begin(), xs.end()), 0.0);
      EXPECT_EQ(*std::max_element(xs.begin(), xs.end()), 1.0);
    }
    const Segment twice = minmax_normalize(n);
    for (std::size_t i = 0; i < n.values.size(); ++i) EXPECT_NEAR(twice.values[i], n.values[i], 1e-15);
  }
}

TEST(Preprocess, IdentityAtTargetRate) {
  std::vector<Vec3> xs;
  for (int i = 0; i < 120; ++i) xs.push_back({std::sin(0.3 * i), std::cos(0.2 * i), i == 60 ? 4.0 : 1.0});
  const TrialRecord t = trial_from(xs, 18.4);
  const Segment a = preprocess(t, 18.4, WindowConfig{});
  const Segment b = minmax_normalize(impact_window(t, WindowConfig{}));
  EXPECT_EQ(a.values, b.values);
}

TEST(Preprocess, CarriesTags) {
  std::vector<Vec3> xs(200, Vec3{0, 0, 1});
  xs[50].z = 3.0;
  TrialRecord t = trial_from(xs, 20.0);
  t.label = Label::kFall;
  t.activity_code = "F2";
  const Segment s = preprocess(t, 18.4, WindowConfig{}, Domain::kTarget);
  EXPECT_EQ(s.label, Label::kFall);
  EXPECT_EQ(s.domain, Domain::kTarget);
  EXPECT_EQ(s.subject_id, "S01");
  EXPECT_EQ(s.trial_id, "t");
  EXPECT_EQ(s.impact_index, 37);
}

TEST(Preprocess, SyntheticCorpusShapeAndRange) {
  SynthSpec spec;
  spec.domain_shift.rotation_rad = 0.5;
  spec.domain_shift.rate_override_hz = 200.0;
  std::vector<Exclusion> excluded;
  const auto segments = preprocess_all(synth_corpus(spec), WindowConfig{}, {}, &excluded);
  EXPECT_TRUE(excluded.empty());
  EXPECT_EQ(segments.size(), 2u * 20u * 12u);
  for (const Segment& s : segments) {
    ASSERT_EQ(s.length, 66);
    ASSERT_EQ(s.values.size(), 198u);
    for (double v : s.values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Preprocess, OrderIndependent) {
  SynthSpec spec;
  spec.n_subjects = 3;
  auto trials = synth_trials(spec);
  const auto a = preprocess_all(trials, WindowConfig{}, {}, nullptr);
  std::reverse(trials.begin(), trials.end());
  auto b = preprocess_all(trials, WindowConfig{}, {}, nullptr);
  std::reverse(b.begin(), b.end());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

TEST(Preprocess, ShortTrialsAreExcluded) {
  std::vector<TrialRecord> trials{trial_from(std::vector<Vec3>(10, Vec3{0, 0, 1}), 18.4),
                                  trial_from(std::vector<Vec3>(100, Vec3{0, 0, 1}), 18.4)};
  trials[0].trial_id = "short";
  std::vector<Exclusion> excluded;
  const auto segments = preprocess_all(trials, WindowConfig{}, {}, &excluded);
  EXPECT_EQ(segments.size(), 1u);
  ASSERT_EQ(excluded.size(), 1u);
  EXPECT_EQ(excluded[0].trial_id, "short");
}

TEST(SegmentDump, RoundTrip) {
  SynthSpec spec;
  spec.n_subjects = 1;
  const auto segments = preprocess_all(synth_trials(spec), WindowConfig{}, {}, nullptr);
  const auto parsed = parse_segment_dump(segment_dump_csv(segments));
  ASSERT_EQ(parsed.size(), segments.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].values, segments[i].values);
    EXPECT_EQ(parsed[i].label, segments[i].label);
  }
}
