#include <gtest/gtest.h>

#include <cmath>

#include "acpo/advantage.hpp"
#include "acpo/error.hpp"
#include "fixtures.hpp"

using namespace acpo;

TEST(GroupBaseAdvantage, Examples) {
  EXPECT_EQ(group_base_advantage(std::vector<double>{1, 0, 0, 1}),
            (std::vector<double>{1, -1, -1, 1}));
  EXPECT_EQ(group_base_advantage(std::vector<double>{1, 1, 1, 1}),
            (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(group_base_advantage(std::vector<double>{1, 0}), (std::vector<double>{1, -1}));
}

TEST(GroupBaseAdvantage, ZeroMeanUnitVariance) {
  const std::vector<double> r{1, 0, 0, 0, 1, 0, 0, 0};
  const auto a = group_base_advantage(r);
  double mean = 0.0, sq = 0.0;
  for (double x : a) mean += x / 8.0;
  for (double x : a) sq += (x - mean) * (x - mean) / 8.0;
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(sq, 1.0, 1e-12);
}

TEST(ModulationWeight, Examples) {
  ModulationParams p;
  p.beta = 0.3;
  p.gamma = 0.2;
  EXPECT_EQ(modulation_weight(0.5, 1.0, 1.0, 0.5, 2.0, p), 1.0);
  EXPECT_DOUBLE_EQ(modulation_weight(2.0, 1.0, 1.0, 0.5, 2.0, p), 1.3);
  EXPECT_DOUBLE_EQ(modulation_weight(2.0, 1.0, -1.0, 0.5, 2.0, p), 0.8);
  EXPECT_DOUBLE_EQ(modulation_weight(2.0, -1.0, 1.0, 0.5, 2.0, p), 0.8);
  EXPECT_EQ(modulation_weight(2.0, 1.0, 0.0, 0.5, 2.0, p), 1.0);
  EXPECT_EQ(modulation_weight(2.0, 1.0, 1.0, 2.0, 2.0, p), 1.0);
}

TEST(ModulationWeight, ThresholdIsInclusive) {
  ModulationParams p;
  p.theta = 0.25;
  EXPECT_DOUBLE_EQ(modulation_weight(1.0, 0.25, 1.0, 0.0, 1.0, p), 1.0 + p.beta);
  EXPECT_DOUBLE_EQ(modulation_weight(1.0, 0.2499, 1.0, 0.0, 1.0, p), 1.0 - p.gamma);
}

TEST(ModulationWeight, StaysInRange) {
  ModulationParams p;
  p.beta = 0.7;
  p.gamma = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double h = i / 100.0;
    for (double a : {-1.0, 1.0}) {
      for (double c : {-1.0, 1.0}) {
        const double w = modulation_weight(h, c, a, 0.0, 1.0, p);
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, 1.0 + p.beta);
      }
    }
  }
}

TEST(Composition, Examples) {
  EXPECT_DOUBLE_EQ(attr_diversity_advantage(1.0, 0.8, 1.3), 1.04);
  EXPECT_EQ(attr_diversity_advantage(0.0, 0.8, 1.3), 0.0);
  EXPECT_DOUBLE_EQ(attr_diversity_advantage(-1.0, 0.5, 0.8), -0.4);
  EXPECT_EQ(final_step_advantage(0.7, 5.0, 0.0), 0.7);
  EXPECT_DOUBLE_EQ(final_step_advantage(1.0, 1.04, 0.5), 1.52);
  EXPECT_DOUBLE_EQ(final_step_advantage(-1.0, -0.4, 1.0), -1.4);
}

TEST(ModulationParams, Validation) {
  ModulationParams p;
  p.gamma = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.beta = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.alpha = -1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Broadcast, StageOneUniform) {
  auto seg = acpo::testing::with_steps(acpo::testing::plain_trajectory(3, 1), {{0, 2}, {2, 3}});
  const std::vector<double> adv{1.5, -0.5};
  const std::vector<double> lp{-0.1, -0.2, -0.3};
  EXPECT_EQ(broadcast_token_advantages(seg, adv, lp, Stage::stage1),
            (std::vector<double>{1.5, 1.5, -0.5}));
}

TEST(Broadcast, StageTwoConfidence) {
  auto seg = acpo::testing::with_steps(acpo::testing::plain_trajectory(2, 1), {{0, 1}, {1, 2}});
  const std::vector<double> adv{1.0, 1.0};
  const std::vector<double> lp{0.0, std::log(0.5)};
  const auto out = broadcast_token_advantages(seg, adv, lp, Stage::stage2);
  EXPECT_EQ(out[0], 2.0);
  EXPECT_DOUBLE_EQ(out[1], 1.5);
}

TEST(Broadcast, SizeMismatch) {
  auto seg = acpo::testing::with_steps(acpo::testing::plain_trajectory(2, 1), {{0, 2}});
  EXPECT_THROW(broadcast_token_advantages(seg, std::vector<double>{1, 2}, std::vector<double>{0, 0},
                                          Stage::stage1),
               ValidationError);
}

TEST(GroupAdvantages, AlphaZeroIsUniformBase) {
  const auto t0 = acpo::testing::plain_trajectory(3, 1);
  const auto t1 = acpo::testing::plain_trajectory(3, 1);
  auto s0 = acpo::testing::with_steps(t0, {{0, 1}, {1, 3}});
  auto s1 = acpo::testing::with_steps(t1, {{0, 3}});
  AttributionProfile p0{{2.0, -1.0}, {0.3, 1.7}, 0, 0};
  AttributionProfile p1{{0.5}, {1.0}, 0, 0};
  std::vector<MemberAdvantageInput> in{{&t0, &s0, &p0, 1.0}, {&t1, &s1, &p1, 0.0}};
  ModulationParams params;
  params.alpha = 0.0;
  const auto rep = build_group_advantages(in, params, Stage::stage1);
  EXPECT_EQ(rep.members[0].token_adv, std::vector<double>(4, 1.0));
  EXPECT_EQ(rep.members[1].token_adv, std::vector<double>(4, -1.0));
}

TEST(GroupAdvantages, HandComputedGroup) {
  const auto t0 = acpo::testing::plain_trajectory(3, 1);
  const auto t1 = acpo::testing::plain_trajectory(2, 1);
  auto s0 = acpo::testing::with_steps(t0, {{0, 1}, {1, 3}});
  auto s1 = acpo::testing::with_steps(t1, {{0, 2}});
  AttributionProfile p0{{2.0, -1.0}, {0.5, 1.5}, 0, 0};
  AttributionProfile p1{{0.5}, {1.0}, 0, 0};
  std::vector<MemberAdvantageInput> in{{&t0, &s0, &p0, 1.0}, {&t1, &s1, &p1, 0.0}};
  ModulationParams params{0.4, 0.2, 0.0, 0.5};
  const auto rep = build_group_advantages(in, params, Stage::stage1);
  // Hmin 0.5, Hmax 1.5; A = [+1, -1]
  // member 0 step 0: h=0, w=1, attr=2,   final=1+0.5*2=2
  //          step 1: h=1, C<0, w=0.8, attr=-0.8, final=1-0.4=0.6
  // member 1 step 0: h=0.5, A<0, w=0.9, attr=-0.45, final=-1-0.225=-1.225
  ASSERT_EQ(rep.members[0].step_adv.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.members[0].step_adv[0], 2.0);
  EXPECT_DOUBLE_EQ(rep.members[0].step_adv[1], 0.6);
  EXPECT_DOUBLE_EQ(rep.members[1].step_adv[0], -1.225);
  EXPECT_EQ(rep.members[0].token_adv.size(), 4u);
  EXPECT_DOUBLE_EQ(rep.members[0].token_adv[2], 0.6);
  EXPECT_EQ(rep.members[0].token_adv[3], 1.0);  // answer token keeps the base advantage
  EXPECT_EQ(rep.sign_flip_steps, 0u);
}

TEST(GroupAdvantages, CountsSignFlips) {
  const auto t0 = acpo::testing::plain_trajectory(1, 1);
  const auto t1 = acpo::testing::plain_trajectory(1, 1);
  auto s0 = acpo::testing::with_steps(t0, {{0, 1}});
  auto s1 = acpo::testing::with_steps(t1, {{0, 1}});
  AttributionProfile p0{{1.0}, {1.0}, 0, 0};
  AttributionProfile p1{{-2.0}, {1.0}, 0, 0};
  std::vector<MemberAdvantageInput> in{{&t0, &s0, &p0, 1.0}, {&t1, &s1, &p1, 0.0}};
  const auto rep = build_group_advantages(in, ModulationParams{}, Stage::stage1);
  EXPECT_EQ(rep.sign_flip_steps, 1u);
  EXPECT_GT(rep.members[1].step_adv[0], -1.0);
}

TEST(GroupAdvantages, StageTwoScalesEveryToken) {
  const auto t0 = acpo::testing::plain_trajectory(2, 1, std::log(0.5));
  const auto t1 = acpo::testing::plain_trajectory(2, 1, std::log(0.5));
  std::vector<MemberAdvantageInput> in{{&t0, nullptr, nullptr, 1.0}, {&t1, nullptr, nullptr, 0.0}};
  const auto rep = build_group_advantages(in, ModulationParams{}, Stage::stage2);
  for (double a : rep.members[0].token_adv) EXPECT_DOUBLE_EQ(a, 1.5);
  for (double a : rep.members[1].token_adv) EXPECT_DOUBLE_EQ(a, -1.5);
}
