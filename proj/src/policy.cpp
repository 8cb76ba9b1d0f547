#include "acpo/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "acpo/error.hpp"

namespace acpo {

FeatureMap::FeatureMap(const Vocabulary& vocab)
    : modulus_(vocab.modulus()),
      vocab_size_(vocab.size()),
      op_base_(vocab.op_base()),
      answer_id_(vocab.answer()) {
  int next = 1;  // bias
  last_reason_ = next;
  next += vocab_size_ + 1;
  last_answer_ = next;
  next += vocab_size_;
  arith_ = next;
  next += modulus_ * 3 * modulus_;
  done_ = next;
  next += modulus_;
  answer_value_ = next;
  next += modulus_;
  position_ = next;
  next += kPositionBuckets;
  size_ = next;
}

void FeatureMap::active(std::span<const int> question, std::span<const int> prefix,
                        std::vector<int>& out) const {
  out.clear();
  auto is_digit = [&](int t) { return t >= 0 && t < modulus_; };
  auto is_op = [&](int t) { return t >= op_base_ && t < op_base_ + 3; };

  std::size_t i = 0;
  int value = 0;
  if (!question.empty() && is_digit(question[0])) {
    value = question[0];
    i = 1;
  }
  const std::size_t ops_begin = i;
  while (i + 1 < question.size() && is_op(question[i]) && is_digit(question[i + 1])) i += 2;
  const std::size_t op_count = (i - ops_begin) / 2;

  bool answering = false;
  int last = -1;
  std::size_t computed = 0;
  int answer_value = 0;
  std::size_t answered = 0;
  std::size_t stream_len = 0;
  auto consume = [&](int tok) {
    ++stream_len;
    if (!answering) {
      if (tok == answer_id_) {
        answering = true;
        answer_value = value;
      } else if (is_digit(tok)) {
        ++computed;
        value = tok;
      }
    } else if (is_digit(tok)) {
      ++answered;
    }
    last = tok;
  };
  for (std::size_t k = i; k < question.size(); ++k) consume(question[k]);
  for (int tok : prefix) consume(tok);

  out.push_back(0);
  if (!answering) {
    const int slot = (last >= 0 && last < vocab_size_) ? last : vocab_size_;
    out.push_back(last_reason_ + slot);
    if (computed < op_count) {
      const std::size_t pos = ops_begin + 2 * computed;
      const int op = question[pos] - op_base_;
      const int operand = question[pos + 1];
      out.push_back(arith_ + (value * 3 + op) * modulus_ + operand);
    } else {
      out.push_back(done_ + value);
    }
  } else {
    const int slot = (last >= 0 && last < vocab_size_) ? last : answer_id_;
    out.push_back(last_answer_ + slot);
    if (answered == 0) out.push_back(answer_value_ + answer_value);
  }
  out.push_back(position_ +
                static_cast<int>(std::min<std::size_t>(stream_len, kPositionBuckets - 1)));
}

PolicySnapshot::PolicySnapshot(int modulus, std::string version)
    : vocab_(std::make_shared<const Vocabulary>(modulus)),
      features_(*vocab_),
      params_(static_cast<std::size_t>(features_.size()) * static_cast<std::size_t>(vocab_->size()),
              0.0),
      version_(std::move(version)) {}

PolicySnapshot::PolicySnapshot(int modulus, std::vector<double> params, std::string version)
    : PolicySnapshot(modulus, std::move(version)) {
  if (params.size() != params_.size()) {
    throw ValidationError("parameter vector has " + std::to_string(params.size()) +
                          " entries, expected " + std::to_string(params_.size()));
  }
  params_ = std::move(params);
}

namespace {
thread_local std::vector<int> t_active;

void check_tokens(const PolicySnapshot& p, std::span<const int> toks) {
  for (int t : toks) {
    if (t < 0 || t >= p.vocab_size()) {
      throw ValidationError("token id " + std::to_string(t) + " is outside the policy vocabulary");
    }
  }
}
}  // namespace

std::vector<double> PolicySnapshot::logits(std::span<const int> question,
                                           std::span<const int> prefix) const {
  check_tokens(*this, question);
  check_tokens(*this, prefix);
  features_.active(question, prefix, t_active);
  const auto v = static_cast<std::size_t>(vocab_size());
  std::vector<double> z(v, 0.0);
  for (int f : t_active) {
    const double* row = params_.data() + static_cast<std::size_t>(f) * v;
    for (std::size_t j = 0; j < v; ++j) z[j] += row[j];
  }
  return z;
}

PolicySnapshot make_base_policy(int modulus, const BasePrior& prior) {
  PolicySnapshot policy(modulus, "base");
  const Vocabulary& vocab = policy.vocab();
  const int m = vocab.modulus();
  const int vsize = vocab.size();

  // Feature indices mirror FeatureMap's layout.
  const int last_reason = 1;
  const int last_answer = last_reason + vsize + 1;
  const int arith = last_answer + vsize;
  const int done = arith + m * 3 * m;
  const int answer_value = done + m;

  auto markers = [&](auto&& fn) {
    for (int k = 0; k < Vocabulary::kMarkerCount; ++k) fn(vocab.marker_base() + k);
  };

  markers([&](int mk) { policy.weight(last_reason + vsize, mk) += prior.marker; });
  markers([&](int mk) { policy.weight(last_reason + vocab.terminator(), mk) += prior.marker; });
  markers([&](int mk) {
    for (int d = 0; d < m; ++d) policy.weight(last_reason + mk, vocab.digit(d)) += prior.format;
  });
  for (int d = 0; d < m; ++d) {
    policy.weight(last_reason + vocab.digit(d), vocab.terminator()) += prior.format;
    policy.weight(last_reason + vocab.digit(d), vocab.answer()) -= prior.format;
  }
  for (int v = 0; v < m; ++v) {
    policy.weight(done + v, vocab.answer()) += prior.finish;
    markers([&](int mk) { policy.weight(done + v, mk) -= prior.marker; });
    for (int op = 0; op < 3; ++op) {
      for (int a = 0; a < m; ++a) {
        const int truth = apply_op(static_cast<Op>(op), v, a, m);
        policy.weight(arith + (v * 3 + op) * m + a, vocab.digit(truth)) += prior.arithmetic;
      }
    }
    policy.weight(answer_value + v, vocab.digit(v)) += prior.copy;
  }
  for (int d = 0; d < m; ++d) policy.weight(last_answer + vocab.answer(), vocab.digit(d)) += prior.format;
  for (int t = 0; t < vsize; ++t) {
    if (t != vocab.answer()) policy.weight(last_answer + t, vocab.eos()) += prior.format;
  }
  return policy;
}

namespace {

double log_sum_exp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double x : z) s += std::exp(x - mx);
  return mx + std::log(s);
}

std::vector<double> scaled(std::vector<double> z, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (temperature != 1.0)
    for (auto& x : z) x /= temperature;
  return z;
}

}  // namespace

Distribution next_token_distribution(const PolicySnapshot& policy, std::span<const int> question,
                                     std::span<const int> prefix, double temperature) {
  const auto z = scaled(policy.logits(question, prefix), temperature);
  const double lse = log_sum_exp(z);
  Distribution d;
  d.probs.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double lp = z[i] - lse;
    const double p = std::exp(lp);
    d.probs[i] = p;
    if (p > 0.0) d.entropy -= p * lp;
  }
  return d;
}

std::vector<double> nucleus(std::span<const double> probs, double top_p) {
  std::vector<double> out(probs.begin(), probs.end());
  if (top_p >= 1.0) return out;
  if (!(top_p > 0.0)) throw ConfigError("top_p must lie in (0,1]");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  double mass = 0.0;
  std::size_t kept = 0;
  while (kept < order.size() && mass < top_p) mass += probs[order[kept++]];
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < kept; ++k) out[order[k]] = probs[order[k]] / mass;
  return out;
}

double token_logprob(const PolicySnapshot& policy, std::span<const int> question,
                     std::span<const int> prefix, int token, double temperature, double top_p) {
  const auto z = scaled(policy.logits(question, prefix), temperature);
  if (token < 0 || token >= static_cast<int>(z.size())) {
    throw ValidationError("token id " + std::to_string(token) + " is outside the policy vocabulary");
  }
  if (top_p >= 1.0) return z[static_cast<std::size_t>(token)] - log_sum_exp(z);

  const double lse = log_sum_exp(z);
  std::vector<double> probs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) probs[i] = std::exp(z[i] - lse);
  const auto kept = nucleus(probs, top_p);
  if (kept[static_cast<std::size_t>(token)] == 0.0) return -std::numeric_limits<double>::infinity();
  std::vector<double> zk;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (kept[i] > 0.0) zk.push_back(z[i]);
  return z[static_cast<std::size_t>(token)] - log_sum_exp(zk);
}

void accumulate_log_gradient(const PolicySnapshot& policy, std::span<const int> question,
                             std::span<const int> prefix, int token, double scale,
                             std::span<double> grad, double temperature, double top_p) {
  if (grad.size() != policy.parameter_count()) throw ValidationError("gradient buffer size mismatch");
  const auto dist = next_token_distribution(policy, question, prefix, temperature);
  const auto probs = nucleus(dist.probs, top_p);
  policy.features().active(question, prefix, t_active);
  const auto v = static_cast<std::size_t>(policy.vocab_size());
  const double s = scale / temperature;
  for (int f : t_active) {
    double* row = grad.data() + static_cast<std::size_t>(f) * v;
    for (std::size_t j = 0; j < v; ++j) row[j] -= s * probs[j];
    row[static_cast<std::size_t>(token)] += s;
  }
}

std::vector<double> policy_log_gradient(const PolicySnapshot& policy,
                                        std::span<const int> question,
                                        std::span<const int> prefix, int chosen) {
  std::vector<double> grad(policy.parameter_count(), 0.0);
  accumulate_log_gradient(policy, question, prefix, chosen, 1.0, grad);
  return grad;
}

double PolicyJudge::token_logprob(std::span<const int> question, std::span<const int> prefix,
                                  int token) const {
  return acpo::token_logprob(*policy_, question, prefix, token, temperature_, 1.0);
}

double PolicyJudge::next_entropy(std::span<const int> question,
                                 std::span<const int> prefix) const {
  return next_token_distribution(*policy_, question, prefix, temperature_).entropy;
}

namespace {
constexpr const char* kCheckpointMagic = "acpo-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(std::ostream& out, const PolicySnapshot& policy) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << ' ' << policy.vocab_size() << ' '
      << policy.feature_dim() << ' ' << (policy.version().empty() ? "-" : policy.version())
      << '\n';
  char buf[64];
  for (double w : policy.params()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, w);
    out.write(buf, end - buf);
    out.put('\n');
  }
  if (!out) throw RuntimeFailure("failed to write checkpoint");
}

PolicySnapshot load_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("checkpoint is empty");
  std::istringstream hs(header);
  std::string magic, tag;
  int version = 0, vsize = 0, fdim = 0;
  if (!(hs >> magic >> version >> vsize >> fdim >> tag) || magic != kCheckpointMagic) {
    throw ValidationError("checkpoint header is malformed");
  }
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  const int modulus = vsize - Vocabulary::kNonDigitCount;
  PolicySnapshot policy(modulus, tag == "-" ? std::string{} : tag);
  if (policy.feature_dim() != fdim) {
    throw ValidationError("checkpoint feature dimension " + std::to_string(fdim) +
                          " does not match the feature layout (" +
                          std::to_string(policy.feature_dim()) + ")");
  }
  auto params = policy.mutable_params();
  std::string line;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::getline(in, line)) {
      throw ValidationError("checkpoint truncated at parameter " + std::to_string(i));
    }
    const char* first = line.data();
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, params[i]);
    if (ec != std::errc{} || ptr != last) {
      throw ValidationError("checkpoint parameter " + std::to_string(i) + " is not a number");
    }
    if (!std::isfinite(params[i])) {
      throw ValidationError("checkpoint parameter " + std::to_string(i) + " is not finite");
    }
  }
  return policy;
}

void save_checkpoint_file(const std::string& path, const PolicySnapshot& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot open " + path + " for writing");
  save_checkpoint(out, policy);
}

PolicySnapshot load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace acpo
