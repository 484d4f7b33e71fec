#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "wuiq/explain.hpp"
#include "wuiq/export.hpp"

using namespace wuiq;
using namespace wuiq::explainability;
using segmentation::FeatureMatrix;

namespace {

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

struct RandomGame {
  std::vector<std::vector<double>> background;
  std::vector<double> x;
  std::vector<std::size_t> group_of;
  std::size_t groups = 0;
  std::vector<double> a, b;

  double operator()(std::span<const double> z) const {
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) s += a[c] * z[c];
    for (std::size_t c = 0; c + 1 < z.size(); ++c) s += b[c] * z[c] * z[c + 1];
    return std::tanh(s) + (z[0] > 0.3 ? 1.0 : 0.0);
  }
};

RandomGame random_game(std::mt19937_64& rng, std::size_t groups) {
  std::normal_distribution<double> g(0.0, 1.0);
  RandomGame game;
  game.groups = groups;
  const std::size_t d = groups + groups / 2;
  for (std::size_t c = 0; c < d; ++c) game.group_of.push_back(c < groups ? c : c % groups);
  for (std::size_t c = 0; c < d; ++c) {
    game.x.push_back(g(rng));
    game.a.push_back(g(rng));
    game.b.push_back(g(rng));
  }
  for (int r = 0; r < 5; ++r) {
    std::vector<double> row(d);
    for (auto& v : row) v = g(rng);
    game.background.push_back(row);
  }
  return game;
}

FeatureGrouping grouping_for(const RandomGame& game) {
  std::vector<std::string> names;
  for (std::size_t g = 0; g < game.groups; ++g) names.push_back("g" + std::to_string(g));
  return FeatureGrouping(names, game.group_of);
}

segmentation::KMeansModel two_centroid_model() {
  segmentation::KMeansModel m;
  m.k = 2;
  m.dims = 2;
  m.centroids = {0.0, 0.0, 10.0, 0.0};
  return m;
}

}  // namespace

TEST(Shapley, LinearGame) {
  const auto f = [](std::span<const double> z) { return 2.0 * z[0] + z[1]; };
  const std::vector<double> x{1.0, 2.0};
  const BackgroundSet bg(2, {0.0, 0.0});
  const auto e = shapley_exact(f, x, bg, FeatureGrouping::singletons({"g1", "g2"}));
  EXPECT_NEAR(e.phi[0], 2.0, 1e-12);
  EXPECT_NEAR(e.phi[1], 2.0, 1e-12);
  EXPECT_EQ(e.base_value, 0.0);
  EXPECT_EQ(e.prediction, 4.0);
  EXPECT_LE(e.efficiency_residual, 1e-12);
}

TEST(Shapley, DummyPlayerGetsExactlyZero) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    auto game = random_game(rng, 4);
    const auto f = [&](std::span<const double> z) {
      std::vector<double> without(z.begin(), z.end());
      for (std::size_t c = 0; c < without.size(); ++c)
        if (game.group_of[c] == 2) without[c] = 0.0;
      return game(without);
    };
    const auto e = shapley_exact(f, game.x, BackgroundSet(game.x.size(), flatten(game.background)), grouping_for(game));
    EXPECT_EQ(e.phi[2], 0.0);
  }
}

TEST(Shapley, SymmetricPlayersGetEqualShares) {
  const auto f = [](std::span<const double> z) { return z[0] * z[1] + std::sin(z[2]); };
  const std::vector<double> x{3.0, 3.0, 0.5};
  const BackgroundSet bg(3, {1.0, 1.0, 0.0, -2.0, -2.0, 1.0});
  const auto e = shapley_exact(f, x, bg, FeatureGrouping::singletons({"a", "b", "c"}));
  EXPECT_NEAR(e.phi[0], e.phi[1], 1e-12);
}

TEST(Shapley, MatchesPermutationOracle) {
  std::mt19937_64 rng(32);
  for (std::size_t m = 1; m <= 6; ++m)
    for (int t = 0; t < 5; ++t) {
      auto game = random_game(rng, m);
      const auto e = shapley_exact(game, game.x, BackgroundSet(game.x.size(), flatten(game.background)),
                                   grouping_for(game));
      const auto ref = oracle::permutation_shapley(
          [&](const std::vector<double>& z) { return game(z); }, game.x, game.background, game.group_of, m);
      for (std::size_t g = 0; g < m; ++g) EXPECT_NEAR(e.phi[g], ref[g], 1e-12) << "m=" << m << " g=" << g;
      EXPECT_LE(e.efficiency_residual, 1e-9);
    }
}

TEST(Shapley, EfficiencyWithSoftMembership) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g(0.0, 3.0);
  const auto model = two_centroid_model();
  const MembershipFunction f(model, segmentation::Standardization::identity(2), identity_map(), 1,
                             MembershipMode::soft);
  std::vector<double> bg;
  for (int i = 0; i < 30; ++i) bg.push_back(5.0 + g(rng)), bg.push_back(g(rng));
  const BackgroundSet background(2, bg);
  for (int t = 0; t < 50; ++t) {
    const std::vector<double> x{5.0 + g(rng), g(rng)};
    const auto e = shapley_exact(f, x, background, FeatureGrouping::singletons({"d", "u"}));
    EXPECT_LE(e.efficiency_residual, 1e-9);
  }
}

TEST(CoalitionWeight, SumsToOneForEveryPlayerCount) {
  for (std::size_t m = 1; m <= max_groups; ++m) {
    double total = 0.0, binom = 1.0;
    for (std::size_t s = 0; s < m; ++s) {
      total += binom * coalition_weight(m, s);
      binom = binom * static_cast<double>(m - 1 - s) / static_cast<double>(s + 1);
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << "m=" << m;
  }
  EXPECT_DOUBLE_EQ(coalition_weight(2, 0), 0.5);
  EXPECT_DOUBLE_EQ(coalition_weight(3, 1), 1.0 / 6.0);
}

TEST(Grouping, CapAndValidation) {
  std::vector<std::string> names;
  for (int i = 0; i < 16; ++i) names.push_back("g" + std::to_string(i));
  try {
    (void)FeatureGrouping::singletons(names);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::enumeration_cap);
  }
  names.pop_back();
  EXPECT_EQ(FeatureGrouping::singletons(names).size(), 15u);
  EXPECT_THROW(FeatureGrouping({"a", "b"}, {0, 0}), Error);
  EXPECT_THROW(FeatureGrouping({"a"}, {1}), Error);
  EXPECT_THROW(FeatureGrouping({}, {}), Error);
}

TEST(Shapley, FifteenGroupsRunsExactly) {
  std::vector<std::string> names;
  for (int i = 0; i < 15; ++i) names.push_back("g" + std::to_string(i));
  const auto f = [](std::span<const double> z) {
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) s += static_cast<double>(c + 1) * z[c];
    return s;
  };
  const std::vector<double> x(15, 1.0);
  const auto e = shapley_exact(f, x, BackgroundSet(15, std::vector<double>(15, 0.0)), FeatureGrouping::singletons(names));
  for (std::size_t c = 0; c < 15; ++c) EXPECT_NEAR(e.phi[c], static_cast<double>(c + 1), 1e-9);
}

TEST(Membership, IndicatorAndSoft) {
  const auto model = two_centroid_model();
  const auto id = segmentation::Standardization::identity(2);
  const MembershipFunction hard(model, id, identity_map(), 1, MembershipMode::indicator);
  const std::vector<double> near1{9.0, 0.0}, near0{1.0, 0.0}, mid{5.0, 0.0};
  EXPECT_EQ(hard(near1), 1.0);
  EXPECT_EQ(hard(near0), 0.0);
  EXPECT_EQ(hard(mid), 0.0);  // equidistant goes to the lower index
  const MembershipFunction soft(model, id, identity_map(), 1, MembershipMode::soft);
  EXPECT_DOUBLE_EQ(soft(mid), 0.5);
  EXPECT_GT(soft(near1), 0.99);
  EXPECT_THROW(MembershipFunction(model, id, identity_map(), 2, MembershipMode::soft), Error);
  EXPECT_EQ(parse_mode("soft"), MembershipMode::soft);
  EXPECT_THROW(parse_mode("hard"), Error);
}

TEST(ExplainCluster, BaseValueIsClusterShare) {
  const auto model = two_centroid_model();
  const auto data = FeatureMatrix::from_rows({{0, 0}, {1, 0}, {9, 0}, {10, 0}}, {"duration", "u_check"});
  std::vector<std::string> ids{"a", "b", "c", "d"};
  const auto groups = FeatureGrouping::singletons({"duration", "u_check"});
  const auto half = explain_cluster(model, segmentation::Standardization::identity(2), identity_map(), data, ids,
                                    groups, 1);
  EXPECT_DOUBLE_EQ(half.base_value, 0.5);
  for (const auto& e : half.explanations) {
    EXPECT_LE(e.efficiency_residual, 1e-12);
    EXPECT_EQ(e.phi[1], 0.0);
  }
  EXPECT_DOUBLE_EQ(half.explanations[3].phi[0], 0.5);
  EXPECT_DOUBLE_EQ(half.explanations[0].phi[0], -0.5);

  const auto all = FeatureMatrix::from_rows({{9, 0}, {10, 0}}, {"duration", "u_check"});
  std::vector<std::string> two_ids{"c", "d"};
  const auto full = explain_cluster(model, segmentation::Standardization::identity(2), identity_map(), all, two_ids,
                                    groups, 1);
  EXPECT_DOUBLE_EQ(full.base_value, 1.0);
  for (const auto& e : full.explanations) EXPECT_EQ(e.phi, (std::vector<double>{0.0, 0.0}));

  std::vector<std::string> wrong{"a"};
  EXPECT_THROW(explain_cluster(model, segmentation::Standardization::identity(2), identity_map(), data, wrong, groups, 1),
               Error);
}

TEST(Importance, MeanAbsoluteAndOrdered) {
  std::vector<ShapExplanation> ex(2);
  ex[0].phi = {0.1, -0.4, 0.0};
  ex[1].phi = {-0.3, 0.2, 0.0};
  const auto imp = global_importance(ex, {"a", "b", "c"});
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0].group, "b");
  EXPECT_DOUBLE_EQ(imp[0].mean_abs_phi, 0.3);
  EXPECT_EQ(imp[1].group, "a");
  EXPECT_DOUBLE_EQ(imp[1].mean_abs_phi, 0.2);
  EXPECT_EQ(imp[2].group, "c");
  EXPECT_THROW(global_importance(std::span<const ShapExplanation>{}, {"a"}), Error);
  EXPECT_THROW(global_importance(ex, {"a"}), Error);

  std::vector<ShapExplanation> tie(1);
  tie[0].phi = {0.2, -0.2};
  const auto t = global_importance(tie, {"first", "second"});
  EXPECT_EQ(t[0].group, "first");
}

TEST(Attribution, RowsAndEffects) {
  EXPECT_EQ(effect_label(0.1), "increases membership");
  EXPECT_EQ(effect_label(-0.1), "decreases membership");
  EXPECT_EQ(effect_label(0.0), "no effect");

  std::vector<ShapExplanation> ex(1);
  ex[0].instance_id = "r,1";
  ex[0].target_cluster = 1;
  ex[0].base_value = 0.5;
  ex[0].phi = {0.25, -0.25};
  ex[0].group_values = {12.0, 40.5};
  const auto rows = attribution_rows(ex, {"duration", "sus_positive"});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].group, "sus_positive");
  EXPECT_EQ(rows[1].value, 40.5);
  EXPECT_EQ(rows[1].effect, "decreases membership");

  EXPECT_EQ(exports::attribution_csv(rows),
            "instance_id,cluster,group,phi,value,base_value,effect\n"
            "\"r,1\",1,duration,0.25,12.0,0.5,increases membership\n"
            "\"r,1\",1,sus_positive,-0.25,40.5,0.5,decreases membership\n");
  const auto imp = global_importance(ex, {"duration", "sus_positive"});
  EXPECT_EQ(exports::importance_csv(imp), "group,mean_abs_phi\nduration,0.25\nsus_positive,0.25\n");
  const auto svg = exports::attribution_svg(ex, {"duration", "sus_positive"}, 1);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("cluster 1"), std::string::npos);
  EXPECT_NE(svg.find("#d62728"), std::string::npos);
  EXPECT_NE(svg.find("#1f77b4"), std::string::npos);
}
