#include <gtest/gtest.h>

#include <random>

#include "wuiq/pipeline.hpp"
#include "wuiq/quality.hpp"

using namespace wuiq;
using namespace wuiq::quality;

namespace {
const WeightVector reference_weights({0.36, 0.27, 0.37});
}

TEST(Wuiq, ReferenceIteration) {
  const double v = compute_wuiq({0.25, 0.97, 0.6184}, reference_weights);
  EXPECT_NEAR(v, 0.580708, 1e-9);
  EXPECT_EQ(percent_label(v), "58%");
  EXPECT_EQ(grade(v), "requires improvement");
}

TEST(Wuiq, EqualScoresReturnThatScore) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const double x = u(rng);
    std::vector<double> w{u(rng), u(rng), u(rng)};
    const double s = w[0] + w[1] + w[2];
    for (auto& v : w) v /= s;
    EXPECT_NEAR(compute_wuiq({x, x, x}, WeightVector(w)), x, 1e-12);
  }
}

TEST(Wuiq, DegenerateWeights) {
  EXPECT_DOUBLE_EQ(compute_wuiq({0.3, 0.9, 0.1}, WeightVector({1.0, 0.0, 0.0})), 0.3);
}

TEST(Wuiq, ContributionsSumToTotal) {
  const auto c = contributions({0.25, 0.97, 0.6184}, reference_weights);
  EXPECT_NEAR(c.performance, 0.09, 1e-12);
  EXPECT_NEAR(c.accessibility, 0.2619, 1e-12);
  EXPECT_NEAR(c.usability, 0.228808, 1e-12);
  EXPECT_NEAR(c.total(), 0.580708, 1e-12);
}

TEST(Wuiq, RejectsBadInputs) {
  EXPECT_THROW(compute_wuiq({1.5, 0.5, 0.5}, reference_weights), Error);
  EXPECT_THROW(compute_wuiq({0.5, 0.5, 0.5}, WeightVector({0.5, 0.5})), Error);
}

TEST(Wuiq, BoundedLinearAndRankPreserving) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> w{u(rng) + 1e-3, u(rng) + 1e-3, u(rng) + 1e-3};
    const double s = w[0] + w[1] + w[2];
    for (auto& v : w) v /= s;
    const WeightVector wv(w);
    const MetricScores a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    const double va = compute_wuiq(a, wv), vb = compute_wuiq(b, wv);
    EXPECT_GE(va, std::min({a.performance, a.accessibility, a.usability}) - 1e-12);
    EXPECT_LE(va, std::max({a.performance, a.accessibility, a.usability}) + 1e-12);
    const double c = u(rng) * 0.999 + 0.001;
    const double ca = compute_wuiq({a.performance * c, a.accessibility * c, a.usability * c}, wv);
    const double cb = compute_wuiq({b.performance * c, b.accessibility * c, b.usability * c}, wv);
    EXPECT_NEAR(ca, c * va, 1e-12);
    if (std::abs(va - vb) > 1e-9) {
      EXPECT_EQ(va < vb, ca < cb);
    }
  }
}

TEST(History, AppendUsesFrozenWeights) {
  ProjectHistory h{"p", reference_weights, {}};
  h = append_iteration(h, {0.25, 0.97, 0.6184}, "t1");
  ASSERT_EQ(h.iterations.size(), 1u);
  EXPECT_EQ(h.iterations[0].t, 1);
  const auto first = h.iterations[0];
  h = append_iteration(h, {0.5, 0.9, 0.7}, "t2", 2.2);
  ASSERT_EQ(h.iterations.size(), 2u);
  EXPECT_EQ(h.iterations[1].t, 2);
  EXPECT_EQ(h.iterations[1].weights, reference_weights);
  EXPECT_EQ(h.iterations[0], first);
  EXPECT_EQ(*h.iterations[1].load_time_seconds, 2.2);
}

TEST(History, NoBaselineIsAnError) {
  try {
    (void)append_iteration(ProjectHistory{"p", std::nullopt, {}}, {0.5, 0.5, 0.5}, "t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_baseline);
  }
}

TEST(History, JsonRoundTripIsExact) {
  ProjectHistory h{"proj", reference_weights, {}};
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t)
    h = append_iteration(h, {u(rng), u(rng), u(rng)}, "2024-01-0" + std::to_string(t % 9 + 1),
                         t % 2 ? std::optional<double>(u(rng)) : std::nullopt);
  const auto text = pipeline::history_to_json(h).dump();
  EXPECT_EQ(pipeline::history_from_json(nlohmann::json::parse(text)), h);
  const ProjectHistory empty{"e", std::nullopt, {}};
  EXPECT_EQ(pipeline::history_from_json(pipeline::history_to_json(empty)), empty);
}

TEST(Grade, Bands) {
  EXPECT_EQ(grade(0.58), "requires improvement");
  EXPECT_EQ(grade(0.0), "requires improvement");
  EXPECT_EQ(grade(0.60), "fair");
  EXPECT_EQ(grade(0.749999), "fair");
  EXPECT_EQ(grade(0.75), "good");
  EXPECT_EQ(grade(0.90), "excellent");
  EXPECT_EQ(grade(1.0), "excellent");
  EXPECT_THROW(grade(1.01), Error);
  EXPECT_THROW(grade(-0.01), Error);
  EXPECT_EQ(grade(0.58, GradeBands{0.5, 0.7, 0.8}), "fair");
}

TEST(Percent, Labels) {
  EXPECT_EQ(percent_label(0.0), "0%");
  EXPECT_EQ(percent_label(1.0), "100%");
  EXPECT_EQ(percent_label(0.6184), "62%");
}
