#include <gtest/gtest.h>

#include <cmath>

#include "acpo/error.hpp"
#include "acpo/objective.hpp"
#include "acpo/rng.hpp"
#include "gradient_check.hpp"

using namespace acpo;

TEST(ProbRatio, Examples) {
  EXPECT_EQ(prob_ratio(-0.7, -0.7), 1.0);
  EXPECT_NEAR(prob_ratio(std::log(0.6), std::log(0.3)), 2.0, 1e-12);
  EXPECT_NEAR(prob_ratio(std::log(0.1), std::log(0.2)), 0.5, 1e-12);
}

TEST(ClippedSurrogate, Examples) {
  EXPECT_DOUBLE_EQ(clipped_surrogate_term(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate_term(0.5, -1.0, 0.2), -0.8);
  EXPECT_EQ(clipped_surrogate_term(1.0, 0.37, 0.2), 0.37);
  EXPECT_EQ(clipped_surrogate_term(1.0, -2.5, 0.2), -2.5);
}

TEST(ClippedSurrogate, NeverAboveUnclipped) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double r = 3.0 * rng.uniform();
    const double a = 4.0 * rng.uniform() - 2.0;
    EXPECT_LE(clipped_surrogate_term(r, a, 0.2), r * a + 1e-15);
  }
}

TEST(K3, Examples) {
  EXPECT_EQ(k3_kl_estimator(-1.3, -1.3), 0.0);
  EXPECT_NEAR(k3_kl_estimator(std::log(0.25), std::log(0.5)), 2.0 - std::log(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(k3_kl_estimator(std::log(0.5), std::log(0.25)), 0.193147, 1e-6);
}

TEST(K3, NonNegative) {
  Rng rng(17);
  for (int i = 0; i < 100000; ++i) {
    const double a = -20.0 * rng.uniform();
    const double b = -20.0 * rng.uniform();
    EXPECT_GE(k3_kl_estimator(a, b), 0.0);
  }
}

namespace {

TrajectoryTerms flat_terms(std::vector<double> adv, std::vector<double> lnew, std::vector<double> lold) {
  TrajectoryTerms t;
  t.advantages = std::move(adv);
  t.logp_new = std::move(lnew);
  t.logp_old = std::move(lold);
  return t;
}

}  // namespace

TEST(StageOneObjective, IdentityRatios) {
  std::vector<TrajectoryTerms> g{flat_terms({1, 2, 3}, {-1, -1, -1}, {-1, -1, -1}),
                                 flat_terms({-1}, {-2}, {-2})};
  EXPECT_DOUBLE_EQ(stage1_objective(g, {}).value, (2.0 + -1.0) / 2.0);
}

TEST(StageOneObjective, ZeroAdvantages) {
  std::vector<TrajectoryTerms> g{flat_terms({0, 0}, {-1, -2}, {-1.5, -0.5})};
  EXPECT_EQ(stage1_objective(g, {}).value, 0.0);
}

TEST(StageOneObjective, HandBuiltGroup) {
  // member 0: ratios 1.5 (A=+1 -> 1.2) and 0.5 (A=-1 -> -0.8)
  // member 1: ratio 1.1 (A=+2 -> 2.2)
  std::vector<TrajectoryTerms> g{
      flat_terms({1.0, -1.0}, {std::log(0.6), std::log(0.1)}, {std::log(0.4), std::log(0.2)}),
      flat_terms({2.0}, {std::log(0.55)}, {std::log(0.5)})};
  const auto rep = stage1_objective(g, {});
  EXPECT_NEAR(rep.value, 0.5 * ((1.2 - 0.8) / 2.0) + 0.5 * 2.2, 1e-12);
  EXPECT_TRUE(rep.tokens[0][0].clipped);
  EXPECT_TRUE(rep.tokens[0][1].clipped);
  EXPECT_FALSE(rep.tokens[1][0].clipped);
}

TEST(StageTwoObjective, ZeroKlAtReference) {
  auto t = flat_terms({1.0, 0.5}, {-1, -2}, {-1, -2});
  t.logp_theta_kl = {-0.3, -0.9};
  t.logp_ref = t.logp_theta_kl;
  std::vector<TrajectoryTerms> g{t};
  const auto rep = stage2_objective(g, {});
  EXPECT_EQ(rep.kl_value, 0.0);
  EXPECT_DOUBLE_EQ(rep.value, stage1_objective(g, {}).value);
}

TEST(StageTwoObjective, PurePenalty) {
  auto t = flat_terms({0.0, 0.0}, {-1, -2}, {-1, -2});
  t.logp_theta_kl = {std::log(0.25), std::log(0.5)};
  t.logp_ref = {std::log(0.5), std::log(0.25)};
  std::vector<TrajectoryTerms> g{t};
  ObjectiveConfig cfg;
  cfg.kl_coeff = 0.7;
  const double mean_k3 = ((2.0 - std::log(2.0) - 1.0) + (0.5 - std::log(0.5) - 1.0)) / 2.0;
  const auto rep = stage2_objective(g, cfg);
  EXPECT_NEAR(rep.value, -0.7 * mean_k3, 1e-12);
  EXPECT_LT(rep.value, 0.0);
}

TEST(StageTwoObjective, HandBuiltGroup) {
  auto a = flat_terms({1.0}, {std::log(0.3)}, {std::log(0.2)});  // r=1.5 -> 1.2
  a.logp_theta_kl = {std::log(0.25)};
  a.logp_ref = {std::log(0.5)};  // K3 at r=2
  auto b = flat_terms({-1.0, 1.0}, {std::log(0.2), std::log(0.2)}, {std::log(0.2), std::log(0.2)});
  b.logp_theta_kl = {-1.0, -1.0};
  b.logp_ref = {-1.0, -1.0};
  std::vector<TrajectoryTerms> g{a, b};
  const auto rep = stage2_objective(g, {});
  const double expect = 0.5 * (1.2 - (1.0 - std::log(2.0))) + 0.5 * 0.0;
  EXPECT_NEAR(rep.value, expect, 1e-12);
  EXPECT_NEAR(rep.kl_value, 0.5 * (1.0 - std::log(2.0)), 1e-12);
}

TEST(Objective, MisalignedInputs) {
  std::vector<TrajectoryTerms> g{flat_terms({1, 2}, {-1}, {-1, -1})};
  EXPECT_THROW(stage1_objective(g, {}), ValidationError);
  ObjectiveConfig bad;
  bad.epsilon = 0.0;
  std::vector<TrajectoryTerms> ok{flat_terms({1}, {-1}, {-1})};
  EXPECT_THROW(stage1_objective(ok, bad), ConfigError);
}

TEST(ObjectiveGradient, ZeroAdvantagesStageOne) {
  auto inst = acpo::testing::random_gradient_instance(3, Stage::stage1);
  for (auto& a : inst.advantages) std::fill(a.begin(), a.end(), 0.0);
  const auto g = objective_gradient(inst.terms(inst.policy), inst.sources(), inst.cfg, inst.policy);
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(ObjectiveGradient, FullyClippedBatchHasNoRatioPath) {
  auto inst = acpo::testing::random_gradient_instance(8, Stage::stage1);
  for (std::size_t j = 0; j < inst.trajectories.size(); ++j) {
    const auto lp = score_logprobs(inst.policy, inst.trajectories[j], inst.temperature, inst.top_p);
    for (std::size_t t = 0; t < lp.size(); ++t) {
      inst.advantages[j][t] = 1.0;
      inst.logp_old[j][t] = lp[t] - 1.0;  // ratio e > 1.2, min picks the clip
    }
  }
  const auto w = surrogate_gradient_weights(inst.terms(inst.policy), inst.cfg);
  for (const auto& row : w.ratio_path) for (double x : row) EXPECT_EQ(x, 0.0);
  const auto g = objective_gradient(inst.terms(inst.policy), inst.sources(), inst.cfg, inst.policy);
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(ObjectiveGradient, MatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    for (Stage stage : {Stage::stage1, Stage::stage2}) {
      const auto inst = acpo::testing::random_gradient_instance(100 + s, stage);
      EXPECT_LT(acpo::testing::gradient_relative_error(inst, 1e-5), 1e-5) << "seed " << s;
    }
  }
}
