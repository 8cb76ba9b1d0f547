#include "acpo/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acpo/error.hpp"

namespace acpo {

void ModulationParams::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("modulation beta must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("modulation gamma must lie in [0,1]");
  if (!(alpha >= 0.0)) throw ConfigError("modulation alpha must be >= 0");
  if (!std::isfinite(theta)) throw ConfigError("modulation theta must be finite");
}

std::vector<double> group_base_advantage(std::span<const double> rewards) {
  const auto g = static_cast<double>(rewards.size());
  std::vector<double> out(rewards.size(), 0.0);
  if (rewards.empty()) return out;
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= g;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / g);
  if (sd == 0.0) return out;
  for (std::size_t j = 0; j < rewards.size(); ++j) out[j] = (rewards[j] - mean) / sd;
  return out;
}

double modulation_weight(double h, double c, double a_base, double hmin, double hmax,
                         const ModulationParams& p) {
  if (a_base == 0.0) return 1.0;
  const double norm = hmax > hmin ? (h - hmin) / (hmax - hmin) : 0.0;
  if (a_base > 0.0 && c >= p.theta) return 1.0 + p.beta * norm;
  return 1.0 - p.gamma * norm;
}

std::vector<double> broadcast_token_advantages(const SegmentedTrajectory& seg,
                                               std::span<const double> step_advs,
                                               std::span<const double> token_logprobs,
                                               Stage stage) {
  if (step_advs.size() != seg.steps.size()) {
    throw ValidationError("step advantage count " + std::to_string(step_advs.size()) +
                          " does not match " + std::to_string(seg.steps.size()) + " steps");
  }
  const std::size_t region = seg.steps.empty() ? 0 : seg.steps.back().end;
  if (token_logprobs.size() != region) {
    throw ValidationError("token log-prob count " + std::to_string(token_logprobs.size()) +
                          " does not match reasoning length " + std::to_string(region));
  }
  std::vector<double> out(region);
  for (std::size_t i = 0; i < seg.steps.size(); ++i) {
    for (std::size_t t = seg.steps[i].start; t < seg.steps[i].end; ++t) {
      out[t] = stage == Stage::stage1 ? step_advs[i]
                                      : step_advs[i] * (1.0 + std::exp(token_logprobs[t]));
    }
  }
  return out;
}

GroupAdvantageReport build_group_advantages(std::span<const MemberAdvantageInput> members,
                                            const ModulationParams& params, Stage stage) {
  std::vector<double> rewards;
  rewards.reserve(members.size());
  for (const auto& m : members) rewards.push_back(m.reward);
  const auto base = group_base_advantage(rewards);

  double hmin = std::numeric_limits<double>::infinity();
  double hmax = -std::numeric_limits<double>::infinity();
  for (const auto& m : members) {
    if (m.profile == nullptr) continue;
    for (double h : m.profile->step_entropies) {
      hmin = std::min(hmin, h);
      hmax = std::max(hmax, h);
    }
  }

  GroupAdvantageReport report;
  report.members.reserve(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    const auto& m = members[j];
    const Trajectory& t = *m.trajectory;
    AdvantageTensor adv;
    adv.base = base[j];
    adv.stage = stage;

    auto confidence = [&](std::size_t k) {
      return stage == Stage::stage1 ? 1.0 : 1.0 + std::exp(t.output[k].logprob);
    };

    std::size_t covered = 0;
    if (m.seg != nullptr && m.profile != nullptr) {
      const auto& seg = *m.seg;
      const auto& prof = *m.profile;
      for (std::size_t i = 0; i < seg.steps.size(); ++i) {
        const double c = prof.scores[i];
        const double w =
            modulation_weight(prof.step_entropies[i], c, adv.base, hmin, hmax, params);
        const double attr = attr_diversity_advantage(adv.base, c, w);
        if (adv.base < 0.0 && c < 0.0) ++report.sign_flip_steps;
        adv.step_adv.push_back(final_step_advantage(adv.base, attr, params.alpha));
      }
      covered = seg.steps.empty() ? 0 : seg.steps.back().end;
      std::vector<double> lps;
      lps.reserve(covered);
      for (std::size_t k = 0; k < covered; ++k) lps.push_back(t.output[k].logprob);
      adv.token_adv = broadcast_token_advantages(seg, adv.step_adv, lps, stage);
    }
    adv.token_adv.reserve(t.output.size());
    for (std::size_t k = covered; k < t.output.size(); ++k) {
      adv.token_adv.push_back(adv.base * confidence(k));
    }
    report.members.push_back(std::move(adv));
  }
  return report;
}

}  // namespace acpo
