#pragma once

#include <cstdint>
#include <vector>

#include "acpo/policy.hpp"
#include "acpo/task.hpp"
#include "acpo/trace.hpp"

namespace acpo {

struct SamplerConfig {
  double temperature = 1.0;
  double top_p = 0.95;
  std::size_t max_len = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// [d+1, e) where d is the first answer delimiter and e the first <eos>
/// after it (or the end of output). Without a delimiter: empty span at the end.
Span locate_answer_span(const Vocabulary& vocab, std::span<const int> output);

/// Autoregressive sampling with nucleus truncation. Each token records its
/// log-probability under the truncated distribution it was drawn from and the
/// entropy of the untruncated tempered distribution. A pure function of its
/// arguments; cfg.seed drives the draw.
Trajectory sample_trajectory(const PolicySnapshot& policy, const ArithChainTask& task,
                             const SamplerConfig& cfg);

/// 1 iff the answer span holds exactly the ground-truth tokens.
double verify_answer(const ArithChainTask& task, const Trajectory& t);

/// G members with seeds cfg.seed + j, rewards filled in.
RolloutGroup rollout_group(const PolicySnapshot& policy, const ArithChainTask& task,
                           std::size_t group_size, const SamplerConfig& cfg);

/// Re-evaluates every output token's log-probability under `policy`.
std::vector<double> score_logprobs(const PolicySnapshot& policy, const Trajectory& t,
                                   double temperature = 1.0, double top_p = 1.0);

std::vector<int> token_ids(const Trajectory& t);

/// Max normwise relative error, max|analytic - numeric| / max|numeric|, between the
/// analytic gradient of sum_t log pi(o_t | q, o_<t) and central differences with step h.
double finite_difference_check(const PolicySnapshot& policy, const Trajectory& t, double h);

}  // namespace acpo
