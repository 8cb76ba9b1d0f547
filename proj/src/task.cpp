#include "acpo/task.hpp"

#include <sstream>

#include "acpo/error.hpp"
#include "acpo/rng.hpp"

namespace acpo {

Vocabulary::Vocabulary(int modulus) : modulus_(modulus) {
  if (modulus < 2 || modulus > 10) throw ConfigError("modulus must lie in [2,10]");
  for (int v = 0; v < modulus; ++v) symbols_.push_back(std::to_string(v));
  for (const char* s : {"+", "-", "*"}) symbols_.emplace_back(s);
  for (const char* s : {"first", "next", "then", "thus", "so", "hence", "however", "therefore"}) {
    symbols_.emplace_back(s);
  }
  symbols_.emplace_back(".");
  symbols_.emplace_back("answer");
  symbols_.emplace_back("<eos>");
}

std::optional<int> Vocabulary::id_of(std::string_view text) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] == text) return static_cast<int>(i);
  }
  return std::nullopt;
}

int apply_op(Op op, int lhs, int rhs, int modulus) {
  switch (op) {
    case Op::add: return (lhs + rhs) % modulus;
    case Op::sub: return ((lhs - rhs) % modulus + modulus) % modulus;
    case Op::mul: return (lhs * rhs) % modulus;
  }
  return 0;
}

int ArithChainTask::ground_truth() const {
  int v = seed_value;
  for (const auto& s : ops) v = apply_op(s.op, v, s.operand, modulus);
  return v;
}

std::vector<int> ArithChainTask::truth_tokens(const Vocabulary& vocab) const {
  return {vocab.digit(ground_truth())};
}

std::vector<int> ArithChainTask::question_tokens(const Vocabulary& vocab) const {
  std::vector<int> q{vocab.digit(seed_value)};
  for (const auto& s : ops) {
    q.push_back(vocab.op_base() + static_cast<int>(s.op));
    q.push_back(vocab.digit(s.operand));
  }
  q.insert(q.end(), prefix.begin(), prefix.end());
  return q;
}

std::string ArithChainTask::question_text(const Vocabulary& vocab) const {
  std::string expr = std::to_string(seed_value);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& s = ops[i];
    if (i > 0) expr = "(" + expr + ")";
    expr += " " + vocab.symbol(vocab.op_base() + static_cast<int>(s.op)) + " " +
            std::to_string(s.operand);
  }
  std::string text = "(" + expr + ") mod " + std::to_string(modulus);
  for (int tok : prefix) text += " " + vocab.symbol(tok);
  return text;
}

ArithChainTask generate_task(int difficulty, std::uint64_t seed, int modulus, std::string id) {
  if (difficulty < 1) throw ConfigError("task difficulty must be >= 1");
  if (modulus < 2 || modulus > 10) throw ConfigError("modulus must lie in [2,10]");
  Rng rng(derive_seed(seed, 0x7a5c));
  ArithChainTask task;
  task.modulus = modulus;
  task.seed_value = static_cast<int>(rng.below(static_cast<std::uint64_t>(modulus)));
  for (int k = 0; k < difficulty; ++k) {
    ArithStep s;
    s.op = static_cast<Op>(rng.below(3));
    s.operand = static_cast<int>(rng.below(static_cast<std::uint64_t>(modulus)));
    task.ops.push_back(s);
  }
  if (id.empty()) {
    std::ostringstream os;
    os << "task-" << std::hex << seed;
    id = os.str();
  }
  task.id = std::move(id);
  return task;
}

std::vector<ArithChainTask> generate_task_pool(std::size_t count, int difficulty,
                                               std::uint64_t seed, int modulus,
                                               std::string_view id_prefix) {
  std::vector<ArithChainTask> pool;
  pool.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    pool.push_back(generate_task(difficulty, derive_seed(seed, 0x9001, i), modulus,
                                 std::string(id_prefix) + "-" + std::to_string(i)));
  }
  return pool;
}

}  // namespace acpo
