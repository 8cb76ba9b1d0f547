#include "acpo/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "acpo/error.hpp"

namespace acpo {

void SegmentationConfig::validate() const {
  if (!(entropy_quantile > 0.0 && entropy_quantile <= 1.0)) {
    throw ConfigError("entropy_quantile must lie in (0,1]");
  }
  if (min_interval < 1) throw ConfigError("min_interval must be >= 1");
}

std::set<std::string> default_marker_lexicon() {
  return {"first", "next", "then", "thus", "so", "hence", "however", "therefore"};
}

std::string fold_marker(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string out(text.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> load_marker_lexicon(std::istream& in) {
  std::set<std::string> lexicon;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto key = fold_marker(line);
    if (!key.empty()) lexicon.insert(std::move(key));
  }
  return lexicon;
}

StatisticSeries segmentation_statistic(const Trajectory& t, const SegmentationConfig& cfg) {
  const std::size_t n = std::min(t.reasoning_length(), t.output.size());
  const bool all_entropy = std::all_of(t.output.begin(), t.output.begin() + static_cast<long>(n),
                                       [](const TokenRecord& r) { return r.entropy.has_value(); });
  StatisticSeries series;
  series.values.reserve(n);
  if (all_entropy) {
    series.kind = Statistic::distribution_entropy;
    for (std::size_t i = 0; i < n; ++i) series.values.push_back(*t.output[i].entropy);
    return series;
  }
  if (!cfg.fallback_to_surprisal) {
    throw ConfigError("trajectory \"" + t.id +
                      "\" lacks token entropies and surprisal fallback is disabled");
  }
  series.kind = Statistic::surprisal;
  for (std::size_t i = 0; i < n; ++i) series.values.push_back(-t.output[i].logprob);
  return series;
}

CandidateSet select_high_entropy_candidates(std::span<const double> stats, double quantile) {
  CandidateSet out;
  if (stats.empty()) return out;
  const auto n = stats.size();
  auto k = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (stats[a] != stats[b]) return stats[a] > stats[b];
                      return a < b;
                    });
  out.indices.assign(order.begin(), order.begin() + static_cast<long>(k));
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

std::vector<std::size_t> apply_marker_and_constraints(const CandidateSet& candidates,
                                                      const Trajectory& t,
                                                      const SegmentationConfig& cfg) {
  const std::size_t region = std::min(t.reasoning_length(), t.output.size());

  std::vector<std::size_t> markers;
  for (auto idx : candidates.indices) {
    if (idx == 0 || idx >= region) continue;
    if (cfg.marker_lexicon.contains(fold_marker(t.output[idx].text))) markers.push_back(idx);
  }

  std::vector<std::size_t> spaced;
  for (auto idx : markers) {
    if (spaced.empty() || idx - spaced.back() >= cfg.min_interval) spaced.push_back(idx);
  }

  if (cfg.boundary_token_ids.empty()) return spaced;

  // A boundary has to open a sentence: slide right until the previous token
  // is a terminator. Positions that run off the region or crowd the previous
  // kept boundary are dropped.
  std::vector<std::size_t> aligned;
  for (auto idx : spaced) {
    std::size_t pos = idx;
    while (pos < region && !cfg.boundary_token_ids.contains(t.output[pos - 1].token_id)) ++pos;
    if (pos >= region) continue;
    if (!aligned.empty() && pos < aligned.back() + cfg.min_interval) continue;
    aligned.push_back(pos);
  }
  return aligned;
}

std::vector<StepSpan> steps_from_boundaries(std::span<const std::size_t> boundaries,
                                            std::size_t region_len) {
  std::vector<StepSpan> steps;
  std::size_t start = 0;
  for (auto b : boundaries) {
    steps.push_back({start, b});
    start = b;
  }
  steps.push_back({start, region_len});
  return steps;
}

SegmentedTrajectory segment_trajectory(const Trajectory& t, const SegmentationConfig& cfg) {
  cfg.validate();
  const std::size_t region = t.reasoning_length();
  if (region == 0) {
    throw SegmentationError("trajectory \"" + t.id + "\": no reasoning region");
  }
  if (region > t.output.size()) {
    throw SegmentationError("trajectory \"" + t.id + "\": answer span starts past the output");
  }
  const auto stats = segmentation_statistic(t, cfg);
  auto candidates = select_high_entropy_candidates(stats.values, cfg.entropy_quantile);
  candidates.statistic_used = stats.kind;
  const auto boundaries = apply_marker_and_constraints(candidates, t, cfg);

  SegmentedTrajectory seg;
  seg.trajectory = t;
  seg.statistic = stats.kind;
  seg.steps = steps_from_boundaries(boundaries, region);
  return seg;
}

}  // namespace acpo
