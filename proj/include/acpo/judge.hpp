#pragma once

#include <cstddef>
#include <span>

namespace acpo {

/// Anything that can score a continuation token by token. Contexts are the
/// question plus the tokens generated so far; both spans are read-only and
/// implementations must be safe to share across threads.
class Judge {
 public:
  virtual ~Judge() = default;

  virtual double token_logprob(std::span<const int> question, std::span<const int> prefix,
                               int token) const = 0;

  /// Shannon entropy (nats) of the next-token distribution after the context.
  virtual double next_entropy(std::span<const int> question, std::span<const int> prefix) const = 0;

  /// Longest question + prefix the judge accepts.
  virtual std::size_t max_context() const = 0;
};

}  // namespace acpo
