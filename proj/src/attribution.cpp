#include "acpo/attribution.hpp"

#include "acpo/error.hpp"

namespace acpo {

namespace {

std::vector<int> output_ids(const Trajectory& t, std::size_t end) {
  std::vector<int> ids;
  ids.reserve(end);
  for (std::size_t k = 0; k < end; ++k) ids.push_back(t.output[k].token_id);
  return ids;
}

std::vector<int> answer_ids(const Trajectory& t) {
  if (t.answer_span.empty() || t.answer_span.end > t.output.size()) {
    throw ValidationError("trajectory \"" + t.id + "\" has no answer to attribute against");
  }
  std::vector<int> ids;
  for (std::size_t k = t.answer_span.start; k < t.answer_span.end; ++k) {
    ids.push_back(t.output[k].token_id);
  }
  return ids;
}

void check_step(const SegmentedTrajectory& seg, std::size_t i) {
  if (i >= seg.steps.size()) {
    throw ValidationError("step index " + std::to_string(i) + " out of range (" +
                          std::to_string(seg.steps.size()) + " steps)");
  }
}

}  // namespace

double answer_log_likelihood(const Judge& judge, std::span<const int> question,
                             std::span<const int> steps_prefix, std::span<const int> answer) {
  if (answer.empty()) throw ValidationError("answer must be non-empty");
  if (question.size() + steps_prefix.size() + answer.size() - 1 > judge.max_context()) {
    throw ContextOverflowError("context of " +
                               std::to_string(question.size() + steps_prefix.size() + answer.size()) +
                               " tokens exceeds the judge limit of " +
                               std::to_string(judge.max_context()));
  }
  std::vector<int> context(steps_prefix.begin(), steps_prefix.end());
  double total = 0.0;
  for (int tok : answer) {
    total += judge.token_logprob(question, context, tok);
    context.push_back(tok);
  }
  return total;
}

double attribution_score(const Judge& judge, const SegmentedTrajectory& seg, std::size_t i) {
  check_step(seg, i);
  const Trajectory& t = seg.trajectory;
  const auto answer = answer_ids(t);
  const auto upto = output_ids(t, seg.steps[i].end);
  const auto before = output_ids(t, seg.steps[i].start);
  return answer_log_likelihood(judge, t.question, upto, answer) -
         answer_log_likelihood(judge, t.question, before, answer);
}

double step_conditional_entropy(const Judge& judge, const SegmentedTrajectory& seg, std::size_t i,
                                EntropyConvention convention) {
  check_step(seg, i);
  const Trajectory& t = seg.trajectory;
  const StepSpan step = seg.steps[i];
  const auto ids = output_ids(t, step.end);
  double total = 0.0;
  for (std::size_t k = step.start; k < step.end; ++k) {
    total += judge.next_entropy(t.question, std::span(ids).first(k));
  }
  if (convention == EntropyConvention::sum || step.empty()) return total;
  return total / static_cast<double>(step.size());
}

AttributionProfile attribution_profile(const Judge& judge, const SegmentedTrajectory& seg,
                                       const AttributionConfig& cfg) {
  const Trajectory& t = seg.trajectory;
  const auto answer = answer_ids(t);
  const std::size_t region = seg.steps.empty() ? 0 : seg.steps.back().end;
  const auto ids = output_ids(t, region);

  AttributionProfile p;
  p.scores.reserve(seg.steps.size());
  double previous = answer_log_likelihood(judge, t.question, {}, answer);
  p.baseline_loglik = previous;
  for (const auto& step : seg.steps) {
    const double current =
        answer_log_likelihood(judge, t.question, std::span(ids).first(step.end), answer);
    p.scores.push_back(current - previous);
    previous = current;
  }
  p.full_loglik = previous;
  for (std::size_t i = 0; i < seg.steps.size(); ++i) {
    p.step_entropies.push_back(step_conditional_entropy(judge, seg, i, cfg.entropy_convention));
  }
  return p;
}

}  // namespace acpo
