#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace acpo::info {

/// Shannon entropy in nats; 0 log 0 counts as 0.
double entropy(std::span<const double> dist);

/// p(x_a, y_b) over a finite rows x cols alphabet.
class JointDistribution {
 public:
  /// Throws ValidationError if entries are negative or do not sum to 1 (1e-12).
  JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> probs);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t a, std::size_t b) const { return probs_[a * cols_ + b]; }
  std::span<const double> data() const noexcept { return probs_; }

  std::vector<double> marginal_rows() const;
  std::vector<double> marginal_cols() const;
  JointDistribution transposed() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> probs_;
};

double joint_entropy(const JointDistribution& j);

/// Exact I(X;Y) = sum p log(p / (p_x p_y)).
double mutual_information(const JointDistribution& j);

/// 0 <= I <= min(H(X), H(Y)) within 1e-12.
bool check_theorem_a(const JointDistribution& j);

/// Finite-alphabet autoregressive source T_1..T_m with full-history conditionals.
/// Table k (0-based) has alphabet^k rows, each a distribution over the alphabet;
/// the row index encodes the history t_1..t_k in base `alphabet`, t_1 most significant.
class AutoregressiveChain {
 public:
  AutoregressiveChain(std::size_t alphabet, std::vector<std::vector<double>> tables);

  std::size_t alphabet() const noexcept { return alphabet_; }
  std::size_t length() const noexcept { return tables_.size(); }
  double conditional(std::size_t k, std::size_t history, std::size_t symbol) const {
    return tables_[k][history * alphabet_ + symbol];
  }

  /// Probability of every full sequence, indexed like the history code.
  std::vector<double> sequence_probabilities() const;

  /// H(T_target | T_given...) by exact marginalization; positions are 0-based.
  double conditional_entropy(std::size_t target, std::span<const std::size_t> given) const;

 private:
  std::size_t alphabet_;
  std::vector<std::vector<double>> tables_;
};

enum class ChainCheck { holds, violated, premise_not_met };

std::string to_string(ChainCheck c);

/// Premise: H(T1) >= H(T2) and H(T_k|T_1..T_{k-1}) >= H(T_{k+1}|T_2..T_k).
/// Conclusion: H(T1) >= H(T2|T1) >= H(T3|T1,T2) >= ...
ChainCheck check_entropy_chain(const AutoregressiveChain& chain);

/// Sweep helpers used by verify-math and the test suite.
JointDistribution random_joint(std::uint64_t seed, std::size_t max_alphabet = 8);
AutoregressiveChain random_chain(std::uint64_t seed, std::size_t alphabet, std::size_t length);

struct SweepSummary {
  std::size_t joints_checked = 0;
  std::size_t joints_failed = 0;
  double max_identity_error = 0.0;   ///< |I - (H(X)+H(Y)-H(X,Y))|
  double max_symmetry_error = 0.0;   ///< |I(X;Y) - I(Y;X)|
  std::size_t chains_checked = 0;    ///< premise-satisfying chains evaluated
  std::size_t chains_failed = 0;
  std::size_t chains_rejected = 0;   ///< draws discarded for failing the premise

  bool passed() const noexcept {
    return joints_failed == 0 && chains_failed == 0 && max_identity_error <= 1e-12 &&
           max_symmetry_error <= 1e-12;
  }
};

/// `joints` random joints for the MI bounds and `chains` premise-satisfying
/// random chains (binary alphabet, length 4) for the entropy chain.
SweepSummary run_theorem_sweep(std::uint64_t seed, std::size_t joints, std::size_t chains);

}  // namespace acpo::info
