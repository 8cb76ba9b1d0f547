#include "acpo/objective.hpp"

#include <algorithm>
#include <cmath>

#include "acpo/error.hpp"
#include "acpo/sampler.hpp"

namespace acpo {

void ObjectiveConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("objective epsilon must lie in (0,1)");
  if (!(kl_coeff >= 0.0)) throw ConfigError("objective kl_coeff must be >= 0");
}

double clipped_surrogate_term(double ratio, double adv, double epsilon) {
  const double clamped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * adv, clamped * adv);
}

double k3_kl_estimator(double logp_theta, double logp_ref) {
  const double log_r = logp_ref - logp_theta;
  // r - log r - 1 loses everything to cancellation near r = 1; expm1 keeps it.
  return std::expm1(log_r) - log_r;
}

namespace {

void check_terms(std::span<const TrajectoryTerms> group, bool need_kl) {
  for (std::size_t j = 0; j < group.size(); ++j) {
    const auto& g = group[j];
    const auto n = g.advantages.size();
    bool ok = n > 0 && g.logp_new.size() == n && g.logp_old.size() == n;
    if (need_kl) ok = ok && g.logp_theta_kl.size() == n && g.logp_ref.size() == n;
    if (!ok) {
      throw ValidationError("objective inputs for trajectory " + std::to_string(j) +
                            " are misaligned or empty");
    }
  }
}

bool takes_clipped_branch(double ratio, double adv, double epsilon) {
  const double clamped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return clamped != ratio && clamped * adv < ratio * adv;
}

ObjectiveReport fold(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg,
                     bool with_kl) {
  check_terms(group, with_kl);
  ObjectiveReport report;
  if (group.empty()) return report;
  const double inv_g = 1.0 / static_cast<double>(group.size());
  for (const auto& g : group) {
    const auto n = g.advantages.size();
    double surrogate = 0.0;
    double kl = 0.0;
    std::vector<TokenDiagnostics> diags(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double r = prob_ratio(g.logp_new[t], g.logp_old[t]);
      surrogate += clipped_surrogate_term(r, g.advantages[t], cfg.epsilon);
      diags[t] = {r, takes_clipped_branch(r, g.advantages[t], cfg.epsilon)};
      if (with_kl) kl += k3_kl_estimator(g.logp_theta_kl[t], g.logp_ref[t]);
    }
    const double inv_len = 1.0 / static_cast<double>(n);
    report.value += inv_g * inv_len * (surrogate - (with_kl ? cfg.kl_coeff * kl : 0.0));
    report.kl_value += inv_g * inv_len * kl;
    report.tokens.push_back(std::move(diags));
  }
  return report;
}

}  // namespace

ObjectiveReport stage1_objective(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg) {
  cfg.validate();
  return fold(group, cfg, false);
}

ObjectiveReport stage2_objective(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg) {
  cfg.validate();
  return fold(group, cfg, true);
}

ObjectiveReport evaluate_objective(std::span<const TrajectoryTerms> group, const ObjectiveConfig& cfg) {
  return cfg.stage == Stage::stage1 ? stage1_objective(group, cfg) : stage2_objective(group, cfg);
}

TokenGradientWeights surrogate_gradient_weights(std::span<const TrajectoryTerms> group,
                                                const ObjectiveConfig& cfg) {
  cfg.validate();
  const bool with_kl = cfg.stage == Stage::stage2;
  check_terms(group, with_kl);
  TokenGradientWeights w;
  if (group.empty()) return w;
  const double inv_g = 1.0 / static_cast<double>(group.size());
  for (const auto& g : group) {
    const auto n = g.advantages.size();
    const double scale = inv_g / static_cast<double>(n);
    std::vector<double> ratio_path(n, 0.0);
    std::vector<double> kl_path(with_kl ? n : 0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double r = prob_ratio(g.logp_new[t], g.logp_old[t]);
      // d(r * A)/dlogp_new = r * A on the unclipped branch
      if (!takes_clipped_branch(r, g.advantages[t], cfg.epsilon)) {
        ratio_path[t] = scale * r * g.advantages[t];
      }
      if (with_kl) {
        // d/dlogp_theta (r - log r - 1) = 1 - r, r = pi_ref / pi_theta
        const double rk = std::exp(g.logp_ref[t] - g.logp_theta_kl[t]);
        kl_path[t] = -scale * cfg.kl_coeff * (1.0 - rk);
      }
    }
    w.ratio_path.push_back(std::move(ratio_path));
    w.kl_path.push_back(std::move(kl_path));
  }
  return w;
}

void accumulate_objective_gradient(std::span<const TrajectoryTerms> group,
                                   std::span<const TokenSource> sources,
                                   const ObjectiveConfig& cfg, const PolicySnapshot& policy,
                                   double scale, std::span<double> grad) {
  if (sources.size() != group.size()) {
    throw ValidationError("objective gradient needs one token source per trajectory");
  }
  const auto weights = surrogate_gradient_weights(group, cfg);
  for (std::size_t j = 0; j < group.size(); ++j) {
    const auto& src = sources[j];
    const auto ids = token_ids(*src.trajectory);
    if (ids.size() != group[j].advantages.size()) {
      throw ValidationError("token source " + std::to_string(j) + " length does not match its terms");
    }
    const auto& q = src.trajectory->question;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const auto prefix = std::span(ids).first(t);
      const double wr = weights.ratio_path[j][t];
      if (wr != 0.0) {
        accumulate_log_gradient(policy, q, prefix, ids[t], scale * wr, grad, src.temperature,
                                src.top_p);
      }
      if (!weights.kl_path[j].empty() && weights.kl_path[j][t] != 0.0) {
        accumulate_log_gradient(policy, q, prefix, ids[t], scale * weights.kl_path[j][t], grad);
      }
    }
  }
}

std::vector<double> objective_gradient(std::span<const TrajectoryTerms> group,
                                       std::span<const TokenSource> sources,
                                       const ObjectiveConfig& cfg, const PolicySnapshot& policy) {
  std::vector<double> grad(policy.parameter_count(), 0.0);
  accumulate_objective_gradient(group, sources, cfg, policy, 1.0, grad);
  return grad;
}

}  // namespace acpo
