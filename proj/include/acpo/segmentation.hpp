#pragma once

#include <istream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acpo/trace.hpp"

namespace acpo {

struct SegmentationConfig {
  double entropy_quantile = 0.05;       ///< fraction of reasoning tokens taken as candidates, in (0,1]
  std::set<std::string> marker_lexicon; ///< case-folded, trimmed marker words
  std::size_t min_interval = 1;         ///< minimum gap, in tokens, between consecutive boundaries
  std::set<int> boundary_token_ids;     ///< sentence terminators; empty disables sentence alignment
  bool fallback_to_surprisal = true;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// The marker words used throughout the toy vocabulary.
std::set<std::string> default_marker_lexicon();

/// One marker per line; '#' starts a comment. Entries are case-folded and trimmed.
std::set<std::string> load_marker_lexicon(std::istream& in);

/// Lower-case ASCII fold plus whitespace trim, the marker matching key.
std::string fold_marker(std::string_view text);

struct CandidateSet {
  std::vector<std::size_t> indices;  ///< strictly increasing
  Statistic statistic_used = Statistic::distribution_entropy;
};

struct StatisticSeries {
  std::vector<double> values;
  Statistic kind = Statistic::distribution_entropy;
};

/// Per-token statistic over the reasoning region. Uses recorded entropies
/// when every token has one, otherwise surprisal (-logprob) if allowed.
StatisticSeries segmentation_statistic(const Trajectory& t, const SegmentationConfig& cfg);

/// Positions of the ceil(quantile * n) largest values; ties go to the lower index.
CandidateSet select_high_entropy_candidates(std::span<const double> stats, double quantile);

/// Marker filter, then greedy min-interval, then sentence alignment.
std::vector<std::size_t> apply_marker_and_constraints(const CandidateSet& candidates,
                                                      const Trajectory& t,
                                                      const SegmentationConfig& cfg);

/// Partition of [0, answer_span.start) into steps. Throws SegmentationError
/// if there is no reasoning region.
SegmentedTrajectory segment_trajectory(const Trajectory& t, const SegmentationConfig& cfg);

/// Builds the step partition from explicit boundaries (sorted, inside (0, region_len)).
std::vector<StepSpan> steps_from_boundaries(std::span<const std::size_t> boundaries,
                                            std::size_t region_len);

}  // namespace acpo
