#pragma once

#include <span>
#include <vector>

#include "acpo/judge.hpp"
#include "acpo/trace.hpp"

namespace acpo {

enum class EntropyConvention {
  mean_per_token,  ///< chain-rule sum divided by step length
  sum,             ///< exact chain-rule H(S_i | S_<i)
};

struct AttributionConfig {
  EntropyConvention entropy_convention = EntropyConvention::mean_per_token;
};

struct AttributionProfile {
  std::vector<double> scores;         ///< C_attr per step, nats
  std::vector<double> step_entropies; ///< H(S_i | S_<i) per step
  double baseline_loglik = 0.0;       ///< L with no reasoning steps
  double full_loglik = 0.0;           ///< L with every step
};

/// Summed answer log-likelihood, sum_t log p(answer_t | question, prefix, answer_<t).
/// Throws ContextOverflowError past the judge's context limit.
double answer_log_likelihood(const Judge& judge, std::span<const int> question,
                             std::span<const int> steps_prefix, std::span<const int> answer);

/// L(S_1..S_i, Y) - L(S_1..S_{i-1}, Y); the i = 0 subtrahend is L(no steps, Y).
double attribution_score(const Judge& judge, const SegmentedTrajectory& seg, std::size_t i);

/// Mean (or summed) next-token entropy over the tokens of step i.
double step_conditional_entropy(const Judge& judge, const SegmentedTrajectory& seg,
                                std::size_t i,
                                EntropyConvention convention = EntropyConvention::mean_per_token);

/// All step scores from one left-to-right sweep of n+1 likelihood evaluations.
AttributionProfile attribution_profile(const Judge& judge, const SegmentedTrajectory& seg,
                                       const AttributionConfig& cfg = {});

}  // namespace acpo
