#include "acpo/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "acpo/error.hpp"
#include "acpo/rng.hpp"

namespace acpo {

void SamplerConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("sampler temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("sampler top_p must lie in (0,1]");
  if (max_len == 0) throw ConfigError("sampler max_len must be >= 1");
}

Span locate_answer_span(const Vocabulary& vocab, std::span<const int> output) {
  const auto n = output.size();
  auto delim = std::find(output.begin(), output.end(), vocab.answer());
  if (delim == output.end()) return {n, n};
  const auto start = static_cast<std::size_t>(delim - output.begin()) + 1;
  auto stop = std::find(output.begin() + static_cast<long>(start), output.end(), vocab.eos());
  return {start, static_cast<std::size_t>(stop - output.begin())};
}

std::vector<int> token_ids(const Trajectory& t) {
  std::vector<int> ids;
  ids.reserve(t.output.size());
  for (const auto& r : t.output) ids.push_back(r.token_id);
  return ids;
}

Trajectory sample_trajectory(const PolicySnapshot& policy, const ArithChainTask& task,
                             const SamplerConfig& cfg) {
  cfg.validate();
  const Vocabulary& vocab = policy.vocab();
  if (task.modulus != vocab.modulus()) throw ValidationError("task modulus does not match the policy");
  Rng rng(mix_seed(cfg.seed));

  Trajectory t;
  t.question = task.question_tokens(vocab);
  t.question_text = task.question_text(vocab);
  std::vector<int> generated;
  while (generated.size() < cfg.max_len) {
    const auto dist = next_token_distribution(policy, t.question, generated, cfg.temperature);
    const auto probs = nucleus(dist.probs, cfg.top_p);
    const double u = rng.uniform();
    double cum = 0.0;
    int chosen = -1;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (probs[j] <= 0.0) continue;
      chosen = static_cast<int>(j);
      cum += probs[j];
      if (u < cum) break;
    }
    TokenRecord rec;
    rec.token_id = chosen;
    rec.text = vocab.symbol(chosen);
    rec.logprob = token_logprob(policy, t.question, generated, chosen, cfg.temperature, cfg.top_p);
    rec.entropy = dist.entropy;
    t.output.push_back(std::move(rec));
    generated.push_back(chosen);
    if (chosen == vocab.eos()) break;
  }
  t.answer_span = locate_answer_span(vocab, generated);
  return t;
}

double verify_answer(const ArithChainTask& task, const Trajectory& t) {
  if (t.answer_span.empty() || t.answer_span.end > t.output.size()) return 0.0;
  const Vocabulary vocab(task.modulus);
  const auto truth = task.truth_tokens(vocab);
  if (t.answer_span.size() != truth.size()) return 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (t.output[t.answer_span.start + k].token_id != truth[k]) return 0.0;
  }
  return 1.0;
}

RolloutGroup rollout_group(const PolicySnapshot& policy, const ArithChainTask& task,
                           std::size_t group_size, const SamplerConfig& cfg) {
  if (group_size < 2) throw ConfigError("rollout group size must be >= 2");
  RolloutGroup group;
  group.question_id = task.id;
  group.members.reserve(group_size);
  for (std::size_t j = 0; j < group_size; ++j) {
    SamplerConfig member = cfg;
    member.seed = cfg.seed + j;
    Trajectory t = sample_trajectory(policy, task, member);
    t.id = task.id + "#" + std::to_string(j);
    t.reward = verify_answer(task, t);
    group.members.push_back(std::move(t));
  }
  return group;
}

std::vector<double> score_logprobs(const PolicySnapshot& policy, const Trajectory& t,
                                   double temperature, double top_p) {
  const auto ids = token_ids(t);
  std::vector<double> out;
  out.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out.push_back(token_logprob(policy, t.question, std::span(ids).first(k), ids[k], temperature,
                                top_p));
  }
  return out;
}

double finite_difference_check(const PolicySnapshot& policy, const Trajectory& t, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be > 0");
  const auto ids = token_ids(t);
  std::vector<double> analytic(policy.parameter_count(), 0.0);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    accumulate_log_gradient(policy, t.question, std::span(ids).first(k), ids[k], 1.0, analytic);
  }
  auto total = [&](const PolicySnapshot& p) {
    double s = 0.0;
    for (double lp : score_logprobs(p, t)) s += lp;
    return s;
  };
  PolicySnapshot probe = policy;
  double max_diff = 0.0;
  double max_numeric = 0.0;
  auto params = probe.mutable_params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = total(probe);
    params[i] = saved - h;
    const double down = total(probe);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    max_diff = std::max(max_diff, std::abs(numeric - analytic[i]));
    max_numeric = std::max(max_numeric, std::abs(numeric));
  }
  return max_diff / std::max(max_numeric, 1e-12);
}

}  // namespace acpo
