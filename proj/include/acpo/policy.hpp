#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "acpo/judge.hpp"
#include "acpo/task.hpp"

namespace acpo {

/// Sparse binary context features for the linear-softmax policy.
///
/// The question is parsed as `seed (op operand)*` followed by an optional
/// reasoning prefix; everything after the header, together with the generated
/// tokens, forms the reasoning stream. Active features:
///   - bias
///   - last reasoning token (or "start") while no answer delimiter has been seen
///   - last token once the delimiter has been seen
///   - (running value, pending op, operand) while operations remain
///   - running value once every operation has been consumed
///   - answer value, for the first token after the delimiter
///   - output position bucket
class FeatureMap {
 public:
  static constexpr int kPositionBuckets = 16;

  explicit FeatureMap(const Vocabulary& vocab);

  int size() const noexcept { return size_; }

  /// Clears `out` and fills it with the indices of the active features.
  void active(std::span<const int> question, std::span<const int> prefix,
              std::vector<int>& out) const;

 private:
  int modulus_;
  int vocab_size_;
  int op_base_;
  int answer_id_;
  int last_reason_;
  int last_answer_;
  int arith_;
  int done_;
  int answer_value_;
  int position_;
  int size_;
};

struct Distribution {
  std::vector<double> probs;
  double entropy = 0.0;
};

/// Parameters of a linear-softmax next-token model, laid out feature-major:
/// logit[v] = sum over active f of params[f * |V| + v].
class PolicySnapshot {
 public:
  explicit PolicySnapshot(int modulus = 10, std::string version = "init");
  PolicySnapshot(int modulus, std::vector<double> params, std::string version);

  const Vocabulary& vocab() const noexcept { return *vocab_; }
  const FeatureMap& features() const noexcept { return features_; }
  int vocab_size() const noexcept { return vocab_->size(); }
  int feature_dim() const noexcept { return features_.size(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<const double> params() const noexcept { return params_; }
  std::span<double> mutable_params() noexcept { return params_; }
  double& weight(int feature, int token) {
    return params_[static_cast<std::size_t>(feature) * static_cast<std::size_t>(vocab_size()) +
                   static_cast<std::size_t>(token)];
  }

  const std::string& version() const noexcept { return version_; }
  void set_version(std::string v) { version_ = std::move(v); }

  std::size_t max_context() const noexcept { return max_context_; }

  std::vector<double> logits(std::span<const int> question, std::span<const int> prefix) const;

  bool operator==(const PolicySnapshot& o) const {
    return vocab_->modulus() == o.vocab_->modulus() && params_ == o.params_;
  }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  FeatureMap features_;
  std::vector<double> params_;
  std::string version_;
  std::size_t max_context_ = 512;
};

/// Logit offsets that give a fresh policy the output grammar
/// `marker digit . ... answer digit <eos>` with weak arithmetic knowledge.
struct BasePrior {
  double format = 8.0;       ///< grammar transitions
  double marker = 4.0;       ///< step openers, uniform over the markers
  double finish = 6.0;       ///< answer delimiter once every operation is done
  double arithmetic = 2.0;   ///< extra logit on the correct intermediate value
  double copy = 6.0;         ///< answer copies the running value
};

PolicySnapshot make_base_policy(int modulus, const BasePrior& prior = {});

/// softmax(logits / temperature) and its exact Shannon entropy.
Distribution next_token_distribution(const PolicySnapshot& policy, std::span<const int> question,
                                     std::span<const int> prefix, double temperature = 1.0);

/// Nucleus truncation: keeps the most probable tokens (ties to the lower id)
/// until their mass reaches top_p, then renormalizes. top_p >= 1 is a no-op.
std::vector<double> nucleus(std::span<const double> probs, double top_p);

/// log-probability of `token` under the tempered, nucleus-truncated distribution.
double token_logprob(const PolicySnapshot& policy, std::span<const int> question,
                     std::span<const int> prefix, int token, double temperature = 1.0,
                     double top_p = 1.0);

/// grad += scale * d/dtheta log p(token | context) under the same distribution
/// as token_logprob (nucleus membership held fixed).
void accumulate_log_gradient(const PolicySnapshot& policy, std::span<const int> question,
                             std::span<const int> prefix, int token, double scale,
                             std::span<double> grad, double temperature = 1.0,
                             double top_p = 1.0);

/// Dense d log pi(chosen | context) / d theta at temperature 1, no truncation.
std::vector<double> policy_log_gradient(const PolicySnapshot& policy,
                                        std::span<const int> question,
                                        std::span<const int> prefix, int chosen);

/// Judge backed by a policy snapshot; the snapshot must outlive the judge.
class PolicyJudge final : public Judge {
 public:
  explicit PolicyJudge(const PolicySnapshot& policy, double temperature = 1.0)
      : policy_(&policy), temperature_(temperature) {}

  double token_logprob(std::span<const int> question, std::span<const int> prefix,
                       int token) const override;
  double next_entropy(std::span<const int> question, std::span<const int> prefix) const override;
  std::size_t max_context() const override { return policy_->max_context(); }

 private:
  const PolicySnapshot* policy_;
  double temperature_;
};

/// Text checkpoint: header `acpo-checkpoint <version> <|V|> <feature dim> <tag>`,
/// then one parameter per line in layout order, shortest round-trip decimal.
void save_checkpoint(std::ostream& out, const PolicySnapshot& policy);
PolicySnapshot load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const PolicySnapshot& policy);
PolicySnapshot load_checkpoint_file(const std::string& path);

}  // namespace acpo
