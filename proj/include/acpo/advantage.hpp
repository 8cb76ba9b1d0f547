#pragma once

#include <span>
#include <vector>

#include "acpo/attribution.hpp"
#include "acpo/trace.hpp"

namespace acpo {

enum class Stage { stage1 = 1, stage2 = 2 };

struct ModulationParams {
  double beta = 0.5;   ///< entropy boost for helpful, important steps
  double gamma = 0.3;  ///< entropy suppression otherwise
  double theta = 0.0;  ///< attribution threshold for "important"
  double alpha = 1.0;  ///< mixing weight of the attribution advantage

  /// Throws ConfigError when beta < 0, gamma outside [0,1] or alpha < 0.
  void validate() const;
};

/// Per-trajectory advantages. token_adv covers the whole output: reasoning
/// tokens take their step's advantage, the answer span and anything after it
/// take the trajectory-level base advantage.
struct AdvantageTensor {
  double base = 0.0;
  std::vector<double> step_adv;
  std::vector<double> token_adv;
  Stage stage = Stage::stage1;
};

/// (R_j - mean R) / std R with the population std; all zeros when std == 0.
std::vector<double> group_base_advantage(std::span<const double> rewards);

/// Piecewise weight on a step from its normalized entropy, attribution and
/// the trajectory's base advantage. Returns 1 when a_base == 0 or hmax == hmin.
double modulation_weight(double h, double c, double a_base, double hmin, double hmax,
                         const ModulationParams& p);

inline double attr_diversity_advantage(double a_base, double c, double w) { return a_base * c * w; }

inline double final_step_advantage(double a_base, double a_attr_div, double alpha) {
  return a_base + alpha * a_attr_div;
}

/// Spreads step advantages over the reasoning tokens. Stage 1 is uniform
/// inside a step; stage 2 scales each token by (1 + exp(logprob)).
std::vector<double> broadcast_token_advantages(const SegmentedTrajectory& seg,
                                               std::span<const double> step_advs,
                                               std::span<const double> token_logprobs,
                                               Stage stage);

/// One rollout-group member. Trajectories that could not be segmented or
/// attributed (no reasoning region, no answer) leave seg/profile null and
/// receive the plain base advantage on every token.
struct MemberAdvantageInput {
  const Trajectory* trajectory = nullptr;
  const SegmentedTrajectory* seg = nullptr;
  const AttributionProfile* profile = nullptr;
  double reward = 0.0;
};

struct GroupAdvantageReport {
  std::vector<AdvantageTensor> members;
  /// Steps with a negative base advantage and a negative attribution, whose
  /// attribution term therefore comes out positive.
  std::size_t sign_flip_steps = 0;
};

/// Full group pipeline: base advantages, group-scoped entropy normalization,
/// modulation, composition and stage-dependent broadcasting.
GroupAdvantageReport build_group_advantages(std::span<const MemberAdvantageInput> members,
                                            const ModulationParams& params, Stage stage);

}  // namespace acpo
