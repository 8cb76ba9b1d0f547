#include <gtest/gtest.h>

#include <cmath>

#include "acpo/error.hpp"
#include "acpo/infotheory.hpp"

using namespace acpo;
using namespace acpo::info;

TEST(Entropy, Examples) {
  EXPECT_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5}), 0.693147, 1e-6);
  EXPECT_NEAR(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 1.386294, 1e-6);
}

TEST(MutualInformation, IndependentCoins) {
  JointDistribution j(2, 2, {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(mutual_information(j), 0.0, 1e-15);
  EXPECT_TRUE(check_theorem_a(j));
}

TEST(MutualInformation, CorrelatedCoins) {
  JointDistribution j(2, 2, {0.5, 0.0, 0.0, 0.5});
  EXPECT_NEAR(mutual_information(j), std::log(2.0), 1e-12);
  EXPECT_TRUE(check_theorem_a(j));
}

TEST(MutualInformation, BruteForceAndSymmetry) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto j = random_joint(seed);
    const auto px = j.marginal_rows();
    const auto py = j.marginal_cols();
    double brute = 0.0;
    for (std::size_t a = 0; a < j.rows(); ++a) {
      for (std::size_t b = 0; b < j.cols(); ++b) {
        if (j(a, b) > 0.0) brute += j(a, b) * std::log(j(a, b) / (px[a] * py[b]));
      }
    }
    EXPECT_NEAR(mutual_information(j), brute, 1e-12);
    EXPECT_NEAR(mutual_information(j), mutual_information(j.transposed()), 1e-12);
    EXPECT_NEAR(mutual_information(j), entropy(px) + entropy(py) - joint_entropy(j), 1e-12);
  }
}

TEST(TheoremA, Random3x3Joints) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::vector<double> p(9);
    double total = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
      p[i] = std::fmod(static_cast<double>((seed * 2654435761u + i * 40503u) % 10007), 97.0) + 0.5;
      total += p[i];
    }
    for (auto& x : p) x /= total;
    EXPECT_TRUE(check_theorem_a(JointDistribution(3, 3, p))) << seed;
  }
}

TEST(JointDistribution, RejectsBadInput) {
  EXPECT_THROW(JointDistribution(2, 2, {0.5, 0.5, 0.5, 0.5}), ValidationError);
  EXPECT_THROW(JointDistribution(1, 2, {1.5, -0.5}), ValidationError);
  EXPECT_THROW(JointDistribution(2, 2, {1.0}), ValidationError);
}

TEST(EntropyChain, DeterministicChainHolds) {
  std::vector<std::vector<double>> tables{{1.0, 0.0}, {1.0, 0.0, 1.0, 0.0}};
  AutoregressiveChain c(2, tables);
  EXPECT_EQ(check_entropy_chain(c), ChainCheck::holds);
  EXPECT_EQ(c.conditional_entropy(1, std::vector<std::size_t>{0}), 0.0);
}

TEST(EntropyChain, UniformChainHolds) {
  std::vector<std::vector<double>> tables;
  for (std::size_t k = 0; k < 4; ++k) {
    tables.emplace_back(static_cast<std::size_t>(std::pow(3, k)) * 3, 1.0 / 3.0);
  }
  AutoregressiveChain c(3, tables);
  EXPECT_EQ(check_entropy_chain(c), ChainCheck::holds);
  const std::vector<std::size_t> given{0, 1, 2};
  EXPECT_NEAR(c.conditional_entropy(3, given), std::log(3.0), 1e-12);
}

TEST(EntropyChain, ConditionalEntropyByEnumeration) {
  const auto c = random_chain(5, 2, 3);
  const auto probs = c.sequence_probabilities();
  // H(T3 | T1, T2) = H(T1,T2,T3) - H(T1,T2)
  std::vector<double> pair(4, 0.0);
  for (std::size_t s = 0; s < 8; ++s) pair[s / 2] += probs[s];
  const std::vector<std::size_t> given{0, 1};
  EXPECT_NEAR(c.conditional_entropy(2, given), entropy(probs) - entropy(pair), 1e-12);
}

TEST(EntropyChain, PremiseFailureIsReported) {
  // T1 deterministic, T2 uniform: H(T1) < H(T2)
  std::vector<std::vector<double>> tables{{1.0, 0.0}, {0.5, 0.5, 0.5, 0.5}};
  EXPECT_EQ(check_entropy_chain(AutoregressiveChain(2, tables)), ChainCheck::premise_not_met);
}

TEST(TheoremSweep, Passes) {
  const auto s = run_theorem_sweep(3, 200, 100);
  EXPECT_TRUE(s.passed());
  EXPECT_EQ(s.joints_checked, 200u);
  EXPECT_EQ(s.chains_checked, 100u);
}
