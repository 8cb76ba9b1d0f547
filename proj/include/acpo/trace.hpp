#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace acpo {

/// One generated token. Log quantities are in nats.
struct TokenRecord {
  int token_id = 0;
  std::string text;
  double logprob = 0.0;            ///< chosen-token log-probability under the sampling distribution
  std::optional<double> entropy;   ///< full next-token distribution entropy, if the producer recorded it

  bool operator==(const TokenRecord&) const = default;
};

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool empty() const noexcept { return end <= start; }
  bool contains(std::size_t i) const noexcept { return i >= start && i < end; }
  bool operator==(const Span&) const = default;
};

using StepSpan = Span;

struct Trajectory {
  std::string id;
  std::vector<int> question;
  std::string question_text;
  std::vector<TokenRecord> output;
  Span answer_span;
  std::optional<double> reward;

  /// Tokens before the answer span; this is the region that gets segmented.
  std::size_t reasoning_length() const noexcept { return answer_span.start; }

  bool operator==(const Trajectory&) const = default;
};

enum class Statistic { distribution_entropy, surprisal };

std::string_view to_string(Statistic s);

struct SegmentedTrajectory {
  Trajectory trajectory;
  std::vector<StepSpan> steps;
  Statistic statistic = Statistic::distribution_entropy;

  /// Start positions of every step but the first.
  std::vector<std::size_t> boundaries() const;
  /// Index of the step containing token t; t must lie in the reasoning region.
  std::size_t step_of(std::size_t t) const;
};

struct RolloutGroup {
  std::string question_id;
  std::vector<Trajectory> members;
};

/// Parses one JSONL trace line. Throws ParseError (with byte offset),
/// SchemaError (naming the field) or ValidationError (bounds).
Trajectory parse_trace_record(std::string_view line);

/// Serializes to a single JSON line (no trailing newline).
std::string serialize_trace_record(const Trajectory& t);

/// Newline-delimited records in file order; blank lines are skipped.
/// Any bad line aborts with a ValidationError citing its 1-based line number.
std::vector<Trajectory> load_trace(std::istream& in);

void write_trace(std::ostream& out, const std::vector<Trajectory>& trajectories);

/// Every invariant violation, empty when the trajectory is well formed.
std::vector<std::string> validate_trajectory(const Trajectory& t);

}  // namespace acpo
