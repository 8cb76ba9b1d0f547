#include "acpo/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acpo/error.hpp"
#include "acpo/rng.hpp"

namespace acpo::info {

namespace {
constexpr double kTol = 1e-12;

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}
}  // namespace

double entropy(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist) h -= xlogx(p);
  return h;
}

JointDistribution::JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> probs)
    : rows_(rows), cols_(cols), probs_(std::move(probs)) {
  if (rows_ == 0 || cols_ == 0 || probs_.size() != rows_ * cols_) {
    throw ValidationError("joint distribution shape mismatch");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw ValidationError("joint distribution has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kTol) throw ValidationError("joint distribution does not sum to 1");
}

std::vector<double> JointDistribution::marginal_rows() const {
  std::vector<double> m(rows_, 0.0);
  for (std::size_t a = 0; a < rows_; ++a)
    for (std::size_t b = 0; b < cols_; ++b) m[a] += (*this)(a, b);
  return m;
}

std::vector<double> JointDistribution::marginal_cols() const {
  std::vector<double> m(cols_, 0.0);
  for (std::size_t a = 0; a < rows_; ++a)
    for (std::size_t b = 0; b < cols_; ++b) m[b] += (*this)(a, b);
  return m;
}

JointDistribution JointDistribution::transposed() const {
  std::vector<double> t(probs_.size());
  for (std::size_t a = 0; a < rows_; ++a)
    for (std::size_t b = 0; b < cols_; ++b) t[b * rows_ + a] = (*this)(a, b);
  return JointDistribution(cols_, rows_, std::move(t));
}

double joint_entropy(const JointDistribution& j) { return entropy(j.data()); }

double mutual_information(const JointDistribution& j) {
  const auto px = j.marginal_rows();
  const auto py = j.marginal_cols();
  double mi = 0.0;
  for (std::size_t a = 0; a < j.rows(); ++a) {
    for (std::size_t b = 0; b < j.cols(); ++b) {
      const double p = j(a, b);
      if (p > 0.0) mi += p * std::log(p / (px[a] * py[b]));
    }
  }
  return mi;
}

bool check_theorem_a(const JointDistribution& j) {
  const double mi = mutual_information(j);
  const double hx = entropy(j.marginal_rows());
  const double hy = entropy(j.marginal_cols());
  return mi >= -kTol && mi <= std::min(hx, hy) + kTol;
}

AutoregressiveChain::AutoregressiveChain(std::size_t alphabet,
                                         std::vector<std::vector<double>> tables)
    : alphabet_(alphabet), tables_(std::move(tables)) {
  if (alphabet_ < 2 || alphabet_ > 8) throw ValidationError("chain alphabet must be 2..8");
  if (tables_.empty() || tables_.size() > 5) throw ValidationError("chain length must be 1..5");
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    const std::size_t rows = ipow(alphabet_, k);
    if (tables_[k].size() != rows * alphabet_) {
      throw ValidationError("chain table " + std::to_string(k) + " has the wrong size");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t s = 0; s < alphabet_; ++s) {
        const double p = tables_[k][r * alphabet_ + s];
        if (!(p >= 0.0)) throw ValidationError("chain table has a negative entry");
        total += p;
      }
      if (std::abs(total - 1.0) > kTol) throw ValidationError("chain table row does not sum to 1");
    }
  }
}

std::vector<double> AutoregressiveChain::sequence_probabilities() const {
  std::vector<double> probs{1.0};
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    std::vector<double> next(probs.size() * alphabet_);
    for (std::size_t h = 0; h < probs.size(); ++h)
      for (std::size_t s = 0; s < alphabet_; ++s)
        next[h * alphabet_ + s] = probs[h] * conditional(k, h, s);
    probs = std::move(next);
  }
  return probs;
}

double AutoregressiveChain::conditional_entropy(std::size_t target,
                                                std::span<const std::size_t> given) const {
  const std::size_t m = length();
  const auto seq = sequence_probabilities();
  // digit of position pos within a sequence code
  auto symbol_at = [&](std::size_t code, std::size_t pos) {
    return (code / ipow(alphabet_, m - 1 - pos)) % alphabet_;
  };
  auto marginal_entropy = [&](std::span<const std::size_t> positions) {
    std::vector<double> marg(ipow(alphabet_, positions.size()), 0.0);
    for (std::size_t code = 0; code < seq.size(); ++code) {
      std::size_t key = 0;
      for (auto pos : positions) key = key * alphabet_ + symbol_at(code, pos);
      marg[key] += seq[code];
    }
    return entropy(marg);
  };
  std::vector<std::size_t> with_target(given.begin(), given.end());
  with_target.push_back(target);
  return marginal_entropy(with_target) - marginal_entropy(given);
}

std::string to_string(ChainCheck c) {
  switch (c) {
    case ChainCheck::holds: return "holds";
    case ChainCheck::violated: return "violated";
    case ChainCheck::premise_not_met: return "premise not met";
  }
  return "unknown";
}

namespace {
std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> r;
  for (std::size_t i = from; i < to; ++i) r.push_back(i);
  return r;
}
}  // namespace

ChainCheck check_entropy_chain(const AutoregressiveChain& chain) {
  const std::size_t m = chain.length();
  if (m < 2) return ChainCheck::holds;

  // premise
  if (chain.conditional_entropy(0, {}) + kTol < chain.conditional_entropy(1, {})) {
    return ChainCheck::premise_not_met;
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const auto full = range(0, k);
    const auto shifted = range(1, k + 1);
    if (chain.conditional_entropy(k, full) + kTol < chain.conditional_entropy(k + 1, shifted)) {
      return ChainCheck::premise_not_met;
    }
  }

  double previous = chain.conditional_entropy(0, {});
  for (std::size_t k = 1; k < m; ++k) {
    const auto history = range(0, k);
    const double h = chain.conditional_entropy(k, history);
    if (h > previous + kTol) return ChainCheck::violated;
    previous = h;
  }
  return ChainCheck::holds;
}

namespace {
std::vector<double> random_simplex(Rng& rng, std::size_t n, double sharpness, double zero_rate) {
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) {
    x = rng.uniform() < zero_rate ? 0.0 : std::pow(rng.uniform(), sharpness);
    total += x;
  }
  if (total <= 0.0) {
    v[rng.below(n)] = 1.0;
    return v;
  }
  for (auto& x : v) x /= total;
  return v;
}
}  // namespace

JointDistribution random_joint(std::uint64_t seed, std::size_t max_alphabet) {
  Rng rng(seed);
  const std::size_t rows = 2 + rng.below(max_alphabet - 1);
  const std::size_t cols = 2 + rng.below(max_alphabet - 1);
  const double sharpness = 0.5 + 4.0 * rng.uniform();
  const double zero_rate = rng.uniform() < 0.3 ? 0.3 : 0.0;
  auto probs = random_simplex(rng, rows * cols, sharpness, zero_rate);
  // renormalize once more so the entries sum to 1 to within rounding
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (auto& p : probs) p /= total;
  return JointDistribution(rows, cols, std::move(probs));
}

AutoregressiveChain random_chain(std::uint64_t seed, std::size_t alphabet, std::size_t length) {
  Rng rng(seed);
  std::vector<std::vector<double>> tables;
  std::size_t rows = 1;
  for (std::size_t k = 0; k < length; ++k) {
    // later positions are drawn sharper on average, the way autoregressive
    // conditionals concentrate as context grows
    const double sharpness = 0.3 + (1.0 + static_cast<double>(k)) * 2.0 * rng.uniform();
    std::vector<double> table;
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = random_simplex(rng, alphabet, sharpness, 0.0);
      table.insert(table.end(), row.begin(), row.end());
    }
    tables.push_back(std::move(table));
    rows *= alphabet;
  }
  return AutoregressiveChain(alphabet, std::move(tables));
}

SweepSummary run_theorem_sweep(std::uint64_t seed, std::size_t joints, std::size_t chains) {
  SweepSummary s;
  for (std::size_t i = 0; i < joints; ++i) {
    const auto j = random_joint(derive_seed(seed, 1, i));
    const double mi = mutual_information(j);
    const double identity =
        entropy(j.marginal_rows()) + entropy(j.marginal_cols()) - joint_entropy(j);
    s.max_identity_error = std::max(s.max_identity_error, std::abs(mi - identity));
    s.max_symmetry_error =
        std::max(s.max_symmetry_error, std::abs(mi - mutual_information(j.transposed())));
    ++s.joints_checked;
    if (!check_theorem_a(j)) ++s.joints_failed;
  }
  std::uint64_t draw = 0;
  const std::uint64_t max_draws = 1000 * std::max<std::size_t>(chains, 1);
  while (s.chains_checked < chains && draw < max_draws) {
    const auto chain = random_chain(derive_seed(seed, 2, draw++), 2, 4);
    switch (check_entropy_chain(chain)) {
      case ChainCheck::premise_not_met: ++s.chains_rejected; break;
      case ChainCheck::violated: ++s.chains_failed; ++s.chains_checked; break;
      case ChainCheck::holds: ++s.chains_checked; break;
    }
  }
  if (s.chains_checked < chains) ++s.chains_failed;  // could not gather enough premise-satisfying draws
  return s;
}

}  // namespace acpo::info
