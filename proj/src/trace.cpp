#include "acpo/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <nlohmann/json.hpp>

#include "acpo/error.hpp"

namespace acpo {

using nlohmann::json;

std::string_view to_string(Statistic s) {
  return s == Statistic::distribution_entropy ? "entropy" : "surprisal";
}

std::vector<std::size_t> SegmentedTrajectory::boundaries() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k < steps.size(); ++k) out.push_back(steps[k].start);
  return out;
}

std::size_t SegmentedTrajectory::step_of(std::size_t t) const {
  auto it = std::upper_bound(steps.begin(), steps.end(), t,
                             [](std::size_t v, const StepSpan& s) { return v < s.start; });
  if (it == steps.begin() || !std::prev(it)->contains(t)) {
    throw ValidationError("token " + std::to_string(t) + " lies outside the segmented region");
  }
  return static_cast<std::size_t>(std::distance(steps.begin(), it) - 1);
}

namespace {

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(field, "is missing");
  return *it;
}

double require_number(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number()) throw SchemaError(field, "must be a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw SchemaError(field, "must be a number or null");
  return it->get<double>();
}

int require_int(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number_integer()) throw SchemaError(field, "must be an integer");
  return v.get<int>();
}

std::string require_string(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_string()) throw SchemaError(field, "must be a string");
  return v.get<std::string>();
}

}  // namespace

Trajectory parse_trace_record(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at byte " + std::to_string(e.byte), e.byte);
  }
  if (!doc.is_object()) throw ParseError("record is not a JSON object", 0);

  Trajectory t;
  t.id = require_string(doc, "id");

  const json& q = require(doc, "question");
  if (!q.is_array()) throw SchemaError("question", "must be an array of integers");
  for (const auto& tok : q) {
    if (!tok.is_number_integer()) throw SchemaError("question", "must be an array of integers");
    t.question.push_back(tok.get<int>());
  }
  if (auto it = doc.find("question_text"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("question_text", "must be a string");
    t.question_text = it->get<std::string>();
  }

  const json& out = require(doc, "output");
  if (!out.is_array()) throw SchemaError("output", "must be an array");
  t.output.reserve(out.size());
  for (const auto& rec : out) {
    if (!rec.is_object()) throw SchemaError("output", "entries must be objects");
    TokenRecord tok;
    tok.token_id = require_int(rec, "token_id");
    tok.text = require_string(rec, "text");
    tok.logprob = require_number(rec, "logprob");
    tok.entropy = optional_number(rec, "entropy");
    t.output.push_back(std::move(tok));
  }

  const json& span = require(doc, "answer_span");
  if (!span.is_array() || span.size() != 2 || !span[0].is_number_integer() ||
      !span[1].is_number_integer()) {
    throw SchemaError("answer_span", "must be a pair of integers");
  }
  const auto s0 = span[0].get<long long>();
  const auto s1 = span[1].get<long long>();
  if (s0 < 0 || s1 < 0) throw ValidationError("answer_span has negative bounds");
  t.answer_span = {static_cast<std::size_t>(s0), static_cast<std::size_t>(s1)};
  t.reward = optional_number(doc, "reward");

  if (auto violations = validate_trajectory(t); !violations.empty()) {
    std::string msg = "invalid trajectory \"" + t.id + "\":";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ValidationError(msg);
  }
  return t;
}

std::string serialize_trace_record(const Trajectory& t) {
  json doc;
  doc["id"] = t.id;
  doc["question"] = t.question;
  doc["question_text"] = t.question_text;
  json out = json::array();
  for (const auto& tok : t.output) {
    json rec;
    rec["token_id"] = tok.token_id;
    rec["text"] = tok.text;
    rec["logprob"] = tok.logprob;
    rec["entropy"] = tok.entropy ? json(*tok.entropy) : json(nullptr);
    out.push_back(std::move(rec));
  }
  doc["output"] = std::move(out);
  doc["answer_span"] = {t.answer_span.start, t.answer_span.end};
  doc["reward"] = t.reward ? json(*t.reward) : json(nullptr);
  return doc.dump();
}

std::vector<Trajectory> load_trace(std::istream& in) {
  std::vector<Trajectory> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      result.push_back(parse_trace_record(line));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return result;
}

void write_trace(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  for (const auto& t : trajectories) out << serialize_trace_record(t) << '\n';
}

std::vector<std::string> validate_trajectory(const Trajectory& t) {
  std::vector<std::string> violations;
  if (t.output.empty()) violations.emplace_back("output non-empty");
  for (std::size_t i = 0; i < t.output.size(); ++i) {
    const auto& tok = t.output[i];
    if (!std::isfinite(tok.logprob) || tok.logprob > 0.0) {
      violations.push_back("logprob ≤ 0 (token " + std::to_string(i) + ")");
    }
    if (tok.entropy && (!std::isfinite(*tok.entropy) || *tok.entropy < 0.0)) {
      violations.push_back("entropy ≥ 0 (token " + std::to_string(i) + ")");
    }
  }
  if (t.answer_span.empty()) violations.emplace_back("answer_span non-empty");
  if (t.answer_span.end > t.output.size() || t.answer_span.start > t.answer_span.end) {
    violations.emplace_back("answer_span within output bounds");
  }
  if (t.reward && *t.reward != 0.0 && *t.reward != 1.0) violations.emplace_back("reward in {0,1}");
  return violations;
}

}  // namespace acpo
