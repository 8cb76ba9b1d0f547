#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace acpo {

/// Fixed token inventory for the arithmetic-chain environment: digits
/// 0..modulus-1, the three operators, transition markers, the sentence
/// terminator ".", the answer delimiter "answer" and "<eos>".
class Vocabulary {
 public:
  static constexpr int kMarkerCount = 8;
  static constexpr int kNonDigitCount = 3 + kMarkerCount + 3;

  explicit Vocabulary(int modulus = 10);

  int modulus() const noexcept { return modulus_; }
  int size() const noexcept { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  std::optional<int> id_of(std::string_view text) const;

  int digit(int value) const noexcept { return value; }
  bool is_digit(int id) const noexcept { return id >= 0 && id < modulus_; }
  int op_base() const noexcept { return modulus_; }
  bool is_op(int id) const noexcept { return id >= modulus_ && id < modulus_ + 3; }
  int marker_base() const noexcept { return modulus_ + 3; }
  bool is_marker(int id) const noexcept {
    return id >= marker_base() && id < marker_base() + kMarkerCount;
  }
  int terminator() const noexcept { return modulus_ + 3 + kMarkerCount; }
  int answer() const noexcept { return terminator() + 1; }
  int eos() const noexcept { return terminator() + 2; }

  bool operator==(const Vocabulary& o) const noexcept { return modulus_ == o.modulus_; }

 private:
  int modulus_;
  std::vector<std::string> symbols_;
};

enum class Op { add = 0, sub = 1, mul = 2 };

struct ArithStep {
  Op op = Op::add;
  int operand = 0;
  bool operator==(const ArithStep&) const = default;
};

int apply_op(Op op, int lhs, int rhs, int modulus);

/// A chain of modular operations applied to a seed value. Fused tasks carry
/// a reasoning prefix appended to the question; the truth is unchanged.
struct ArithChainTask {
  std::string id;
  int modulus = 10;
  int seed_value = 0;
  std::vector<ArithStep> ops;
  std::vector<int> prefix;

  int difficulty() const noexcept { return static_cast<int>(ops.size()); }
  int ground_truth() const;
  std::vector<int> truth_tokens(const Vocabulary& vocab) const;
  std::vector<int> question_tokens(const Vocabulary& vocab) const;
  std::string question_text(const Vocabulary& vocab) const;

  bool operator==(const ArithChainTask&) const = default;
};

/// Deterministic in (difficulty, seed, modulus). Throws ConfigError for difficulty < 1.
ArithChainTask generate_task(int difficulty, std::uint64_t seed, int modulus = 10,
                             std::string id = {});

/// `count` tasks with ids "<prefix>-<i>", each seeded from (seed, i).
std::vector<ArithChainTask> generate_task_pool(std::size_t count, int difficulty,
                                               std::uint64_t seed, int modulus = 10,
                                               std::string_view id_prefix = "task");

}  // namespace acpo
