#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "acpo/judge.hpp"
#include "acpo/trace.hpp"

namespace acpo::testing {

/// Judge driven by two lambdas of (prefix length, token).
class ScriptedJudge final : public Judge {
 public:
  using LogProb = std::function<double(std::size_t prefix_len, int token)>;
  using Entropy = std::function<double(std::size_t prefix_len)>;

  ScriptedJudge(LogProb lp, Entropy h, std::size_t max_context = 1 << 20)
      : lp_(std::move(lp)), h_(std::move(h)), max_context_(max_context) {}

  double token_logprob(std::span<const int>, std::span<const int> prefix, int token) const override {
    return lp_(prefix.size(), token);
  }
  double next_entropy(std::span<const int>, std::span<const int> prefix) const override {
    return h_(prefix.size());
  }
  std::size_t max_context() const override { return max_context_; }

 private:
  LogProb lp_;
  Entropy h_;
  std::size_t max_context_;
};

/// Trajectory with `reasoning` reasoning tokens followed by `answer` answer tokens.
inline Trajectory plain_trajectory(std::size_t reasoning, std::size_t answer, double logprob = -0.5) {
  Trajectory t;
  t.id = "plain";
  t.question = {1, 2};
  for (std::size_t k = 0; k < reasoning + answer; ++k) {
    t.output.push_back({static_cast<int>(k % 7), "w", logprob, 1.0});
  }
  t.answer_span = {reasoning, reasoning + answer};
  return t;
}

inline SegmentedTrajectory with_steps(Trajectory t, std::vector<StepSpan> steps) {
  SegmentedTrajectory s;
  s.trajectory = std::move(t);
  s.steps = std::move(steps);
  return s;
}

}  // namespace acpo::testing
