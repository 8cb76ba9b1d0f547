#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "acpo/advantage.hpp"
#include "acpo/policy.hpp"
#include "acpo/trace.hpp"

namespace acpo {

struct ObjectiveConfig {
  double epsilon = 0.2;   ///< clip width
  double kl_coeff = 1.0;  ///< weight of the K3 penalty (stage 2 only)
  Stage stage = Stage::stage1;

  void validate() const;
};

/// Per-token inputs for one trajectory, all of length |o_j|.
/// logp_new/logp_old are under the sampling distribution (temperature and
/// nucleus); logp_theta_kl/logp_ref are the untruncated temperature-1 model
/// log-probs used by the KL penalty and may be empty in stage 1.
struct TrajectoryTerms {
  std::vector<double> advantages;
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  std::vector<double> logp_theta_kl;
  std::vector<double> logp_ref;
};

struct TokenDiagnostics {
  double ratio = 1.0;
  bool clipped = false;  ///< the min picked the clipped branch and it differs from the raw one
};

struct ObjectiveReport {
  double value = 0.0;
  double kl_value = 0.0;
  std::vector<std::vector<TokenDiagnostics>> tokens;
};

inline double prob_ratio(double logp_new, double logp_old) { return std::exp(logp_new - logp_old); }

double clipped_surrogate_term(double ratio, double adv, double epsilon);

/// r - log r - 1 with r = pi_ref / pi_theta.
double k3_kl_estimator(double logp_theta, double logp_ref);

/// (1/G) sum_j (1/|o_j|) sum_t clipped term. kl_value is 0.
ObjectiveReport stage1_objective(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg);

/// Same clipped sum minus kl_coeff times the per-token K3 term, with the
/// K3 term averaged the same way.
ObjectiveReport stage2_objective(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg);

ObjectiveReport evaluate_objective(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg);

/// Where each trajectory's tokens come from and the distribution they were
/// sampled under; the trajectory must outlive the call.
struct TokenSource {
  const Trajectory* trajectory = nullptr;
  double temperature = 1.0;
  double top_p = 1.0;
};

/// dJ/dlogp per token on the ratio path and on the KL path.
struct TokenGradientWeights {
  std::vector<std::vector<double>> ratio_path;
  std::vector<std::vector<double>> kl_path;
};

TokenGradientWeights surrogate_gradient_weights(std::span<const TrajectoryTerms> group,
                                                const ObjectiveConfig& cfg);

/// Exact gradient of the stage objective w.r.t. the policy parameters.
/// Advantages (including the stage-2 confidence factor), logp_old and
/// logp_ref are constants; tokens whose min selects the clipped branch
/// contribute nothing through the ratio.
std::vector<double> objective_gradient(std::span<const TrajectoryTerms> group,
                                       std::span<const TokenSource> sources,
                                       const ObjectiveConfig& cfg, const PolicySnapshot& policy);

/// Adds `scale` times the gradient into `grad` (used to average over a batch of groups).
void accumulate_objective_gradient(std::span<const TrajectoryTerms> group,
                                   std::span<const TokenSource> sources,
                                   const ObjectiveConfig& cfg, const PolicySnapshot& policy,
                                   double scale, std::span<double> grad);

}  // namespace acpo
