#include "acpo/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <nlohmann/json.hpp>

#include "acpo/error.hpp"
#include "acpo/log.hpp"
#include "acpo/rng.hpp"

namespace acpo {

std::string to_string(Bucket b) {
  switch (b) {
    case Bucket::easy: return "easy";
    case Bucket::medium: return "medium";
    case Bucket::hard: return "hard";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (batch_questions == 0) throw ConfigError("batch_questions must be >= 1");
  if (group_size < 2) throw ConfigError("group_size must be >= 2");
  if (train_tasks == 0) throw ConfigError("train_tasks must be >= 1");
  if (difficulty < 1) throw ConfigError("difficulty must be >= 1");
  if (eval_k == 0) throw ConfigError("eval k must be >= 1");
  if (!(hard_temperature > 0.0)) throw ConfigError("hard_temperature must be > 0");
  stage1.sampler.validate();
  stage2.sampler.validate();
  stage1.objective.validate();
  stage2.objective.validate();
  modulation.validate();
  segmentation.validate();
}

TrainConfig desk_preset() {
  TrainConfig cfg;
  cfg.stage1.sampler = {1.0, 0.95, 32, 0};
  cfg.stage1.objective = {0.2, 0.0, Stage::stage1};
  cfg.stage2.sampler = {1.0, 0.95, 32, 0};
  cfg.stage2.objective = {0.2, 1.0, Stage::stage2};
  cfg.learning_rate = 2.0;
  cfg.base_prior.arithmetic = 1.5;
  cfg.segmentation.entropy_quantile = 0.3;
  cfg.segmentation.min_interval = 2;
  cfg.segmentation.marker_lexicon = default_marker_lexicon();
  cfg.segmentation.boundary_token_ids = {Vocabulary(cfg.modulus).terminator()};
  return cfg;
}

TrainConfig full_scale_preset() {
  TrainConfig cfg = desk_preset();
  cfg.learning_rate = 1e-6;
  cfg.batch_questions = 24;
  cfg.group_size = 8;
  cfg.segmentation.entropy_quantile = 0.05;
  return cfg;
}

TrainConfig grpo_baseline(TrainConfig cfg) {
  cfg.modulation.alpha = 0.0;
  cfg.stage2.objective.stage = Stage::stage1;
  cfg.stage1.objective.kl_coeff = 0.0;
  cfg.stage2.objective.kl_coeff = 0.0;
  cfg.curriculum = false;
  return cfg;
}

Bucket bucket_for(std::size_t successes, std::size_t group_size,
                  const DifficultyThresholds& thresholds) {
  if (successes <= thresholds.hard_max_successes) return Bucket::hard;
  if (static_cast<double>(successes) < thresholds.easy_fraction * static_cast<double>(group_size)) {
    return Bucket::medium;
  }
  return Bucket::easy;
}

DifficultyRecord score_difficulty(const PolicySnapshot& policy, const ArithChainTask& task,
                                  std::size_t group_size, const SamplerConfig& sampler,
                                  const DifficultyThresholds& thresholds) {
  const auto group = rollout_group(policy, task, group_size, sampler);
  DifficultyRecord rec;
  rec.question_id = task.id;
  rec.group_size = group_size;
  for (const auto& m : group.members) rec.successes += m.reward.value_or(0.0) > 0.5 ? 1 : 0;
  rec.bucket = bucket_for(rec.successes, group_size, thresholds);
  return rec;
}

std::vector<TrainingTask> fuse_dataset_with_prefixes(
    const std::vector<TrainingTask>& tasks,
    const std::map<std::string, std::vector<Trajectory>>& correct_trajectories,
    const SegmentationConfig& segmentation, std::size_t cap) {
  std::vector<TrainingTask> out = tasks;
  for (const auto& tt : tasks) {
    if (tt.bucket != Bucket::hard) continue;
    auto it = correct_trajectories.find(tt.task.id);
    if (it == correct_trajectories.end()) continue;
    const Vocabulary vocab(tt.task.modulus);
    const auto question = tt.task.question_tokens(vocab);
    for (std::size_t n = 0; n < it->second.size(); ++n) {
      const Trajectory& traj = it->second[n];
      if (traj.question != question) {
        throw ValidationError("trajectory \"" + traj.id + "\" does not belong to task \"" +
                              tt.task.id + "\"");
      }
      if (verify_answer(tt.task, traj) != 1.0) {
        throw ValidationError("trajectory \"" + traj.id + "\" is not a correct solution of \"" +
                              tt.task.id + "\"");
      }
      const auto seg = segment_trajectory(traj, segmentation);
      const std::size_t usable = std::min(seg.steps.size() - 1, cap);
      for (std::size_t j = 1; j <= usable; ++j) {
        TrainingTask fused;
        fused.task = tt.task;
        for (std::size_t k = 0; k < seg.steps[j - 1].end; ++k) {
          fused.task.prefix.push_back(traj.output[k].token_id);
        }
        fused.task.id = tt.task.id + "+p" + std::to_string(j) + "@" + std::to_string(n);
        fused.bucket = Bucket::medium;
        out.push_back(std::move(fused));
      }
    }
  }
  return out;
}

std::vector<std::size_t> select_batch(std::uint64_t seed, Stage stage, std::size_t iteration,
                                      std::size_t pool_size, std::size_t batch) {
  Rng rng(derive_seed(seed, 0xba7c0000ULL + static_cast<std::uint64_t>(stage), iteration));
  std::vector<std::size_t> out;
  out.reserve(batch);
  if (batch <= pool_size) {
    std::vector<std::size_t> idx(pool_size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < batch; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.below(pool_size - k));
      std::swap(idx[k], idx[pick]);
      out.push_back(idx[k]);
    }
  } else {
    for (std::size_t k = 0; k < batch; ++k) out.push_back(static_cast<std::size_t>(rng.below(pool_size)));
  }
  return out;
}

std::uint64_t rollout_seed(std::uint64_t seed, Stage stage, std::size_t iteration, std::size_t slot) {
  return derive_seed(seed, (static_cast<std::uint64_t>(stage) << 32) | iteration, slot);
}

SamplerConfig sampler_for(const TrainConfig& cfg, Stage stage, const TrainingTask& task) {
  SamplerConfig s = stage == Stage::stage1 ? cfg.stage1.sampler : cfg.stage2.sampler;
  if (cfg.curriculum && stage == Stage::stage1 && task.bucket == Bucket::hard) {
    s.temperature = cfg.hard_temperature;
  }
  return s;
}

namespace {

struct GroupWork {
  RolloutGroup group;
  SamplerConfig sampler;
  std::vector<std::optional<SegmentedTrajectory>> segs;
  std::vector<std::optional<AttributionProfile>> profiles;
  GroupAdvantageReport advantages;
  std::vector<TrajectoryTerms> terms;
  std::vector<TokenSource> sources;
};

bool attributable(const Trajectory& t) {
  return t.reasoning_length() >= 1 && !t.answer_span.empty() && t.answer_span.end <= t.output.size();
}

std::string dump_group(const GroupWork& w) {
  std::ostringstream os;
  os << "group " << w.group.question_id << ":\n";
  for (const auto& m : w.group.members) os << "  " << serialize_trace_record(m) << '\n';
  return os.str();
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

StageResult run_stage(PolicySnapshot policy, const std::vector<TrainingTask>& tasks, Stage stage,
                      const TrainConfig& cfg, const PolicySnapshot* ref,
                      const IterationObserver& observer) {
  cfg.validate();
  const StageSettings& settings = stage == Stage::stage1 ? cfg.stage1 : cfg.stage2;
  if (stage == Stage::stage2 && ref == nullptr) {
    throw ConfigError("stage 2 needs a reference policy");
  }
  const bool with_kl = settings.objective.stage == Stage::stage2;
  if (with_kl && ref == nullptr) throw ConfigError("a KL-penalized objective needs a reference policy");
  if (tasks.empty() && settings.iterations > 0) throw ConfigError("no training tasks");

  StageResult result{policy, {}};
  PolicySnapshot& current = result.policy;
  const PolicySnapshot stage_start = policy;
  std::vector<double> velocity(cfg.momentum > 0.0 ? current.parameter_count() : 0, 0.0);
  const bool use_attribution = cfg.modulation.alpha != 0.0;

  for (std::size_t iter = 0; iter < settings.iterations; ++iter) {
    const auto batch = select_batch(cfg.seed, stage, iter, tasks.size(), cfg.batch_questions);
    const PolicySnapshot& judge_policy = cfg.judge == JudgeMode::current ? current : stage_start;
    const PolicyJudge judge(judge_policy);

    std::vector<double> grad(current.parameter_count(), 0.0);
    MetricsRow row;
    row.iteration = iter;
    row.stage = stage;
    double reward_sum = 0.0;
    double entropy_sum = 0.0;
    std::size_t token_count = 0;
    std::size_t trajectory_count = 0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (std::size_t slot = 0; slot < batch.size(); ++slot) {
      const TrainingTask& tt = tasks[batch[slot]];
      GroupWork w;
      w.sampler = sampler_for(cfg, stage, tt);
      w.sampler.seed = rollout_seed(cfg.seed, stage, iter, slot);
      w.group = rollout_group(current, tt.task, cfg.group_size, w.sampler);

      const auto g = w.group.members.size();
      w.segs.resize(g);
      w.profiles.resize(g);
      std::vector<MemberAdvantageInput> inputs(g);
      for (std::size_t j = 0; j < g; ++j) {
        const Trajectory& t = w.group.members[j];
        inputs[j].trajectory = &t;
        inputs[j].reward = t.reward.value_or(0.0);
        if (use_attribution && attributable(t)) {
          w.segs[j] = segment_trajectory(t, cfg.segmentation);
          w.profiles[j] = attribution_profile(judge, *w.segs[j], cfg.attribution);
          inputs[j].seg = &*w.segs[j];
          inputs[j].profile = &*w.profiles[j];
        }
      }
      w.advantages = build_group_advantages(inputs, cfg.modulation, settings.objective.stage);
      if (w.advantages.sign_flip_steps > 0) {
        log::debug("iteration " + std::to_string(iter) + " group " + w.group.question_id + ": " +
                   std::to_string(w.advantages.sign_flip_steps) +
                   " step(s) with negative base advantage and negative attribution");
      }

      for (std::size_t j = 0; j < g; ++j) {
        const Trajectory& t = w.group.members[j];
        TrajectoryTerms terms;
        terms.advantages = w.advantages.members[j].token_adv;
        terms.logp_old.reserve(t.output.size());
        for (const auto& r : t.output) terms.logp_old.push_back(r.logprob);
        // one update per batch: the policy being optimized is the one that sampled
        terms.logp_new = terms.logp_old;
        if (with_kl) {
          terms.logp_theta_kl = score_logprobs(current, t);
          terms.logp_ref = score_logprobs(*ref, t);
        }
        w.terms.push_back(std::move(terms));
        w.sources.push_back({&t, w.sampler.temperature, w.sampler.top_p});

        reward_sum += t.reward.value_or(0.0);
        ++trajectory_count;
        token_count += t.output.size();
        if (w.sampler.temperature == 1.0) {
          for (const auto& r : t.output) entropy_sum += r.entropy.value_or(0.0);
        } else {
          const auto ids = token_ids(t);
          for (std::size_t k = 0; k < ids.size(); ++k) {
            entropy_sum += next_token_distribution(current, t.question, std::span(ids).first(k)).entropy;
          }
        }
      }

      const auto report = evaluate_objective(w.terms, settings.objective);
      if (!std::isfinite(report.value) || !std::isfinite(report.kl_value)) {
        throw RuntimeFailure("non-finite objective at " + std::string(stage == Stage::stage1 ? "stage 1" : "stage 2") +
                             " iteration " + std::to_string(iter) + "\n" + dump_group(w));
      }
      row.objective += inv_batch * report.value;
      row.kl += inv_batch * report.kl_value;
      accumulate_objective_gradient(w.terms, w.sources, settings.objective, current, inv_batch, grad);
      if (!all_finite(grad)) {
        throw RuntimeFailure("non-finite gradient at iteration " + std::to_string(iter) + "\n" +
                             dump_group(w));
      }
    }

    auto params = current.mutable_params();
    if (cfg.momentum > 0.0) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + grad[i];
        params[i] += cfg.learning_rate * velocity[i];
      }
    } else {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += cfg.learning_rate * grad[i];
    }
    current.set_version(std::string(stage == Stage::stage1 ? "stage1" : "stage2") + "-iter" +
                        std::to_string(iter + 1));

    row.mean_reward = reward_sum / static_cast<double>(trajectory_count);
    row.mean_policy_entropy = entropy_sum / static_cast<double>(std::max<std::size_t>(token_count, 1));
    row.mean_output_length = static_cast<double>(token_count) / static_cast<double>(trajectory_count);
    result.metrics.push_back(row);
    if (observer) observer(iter, current, row);

    if (stage == Stage::stage1 && cfg.plateau_window > 0 &&
        result.metrics.size() >= 2 * cfg.plateau_window) {
      const auto n = result.metrics.size();
      double recent = 0.0, before = 0.0;
      for (std::size_t k = 0; k < cfg.plateau_window; ++k) {
        recent += result.metrics[n - 1 - k].mean_reward;
        before += result.metrics[n - 1 - cfg.plateau_window - k].mean_reward;
      }
      if ((recent - before) / static_cast<double>(cfg.plateau_window) < cfg.plateau_tolerance) {
        log::info("stage 1 reward plateau after " + std::to_string(n) + " iterations");
        break;
      }
    }
  }
  return result;
}

double evaluate_acc_at_k(const PolicySnapshot& policy, const std::vector<ArithChainTask>& tasks,
                         std::size_t k, double temperature, double top_p, std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be >= 1");
  if (tasks.empty()) return 0.0;
  std::size_t solved = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    SamplerConfig s;
    s.temperature = temperature;
    s.top_p = top_p;
    for (std::size_t j = 0; j < k; ++j) {
      s.seed = derive_seed(seed, 0xe7a1, i) + j;
      if (verify_answer(tasks[i], sample_trajectory(policy, tasks[i], s)) == 1.0) {
        ++solved;
        break;
      }
    }
  }
  return static_cast<double>(solved) / static_cast<double>(tasks.size());
}

std::vector<ArithChainTask> training_pool(const TrainConfig& cfg) {
  return generate_task_pool(cfg.train_tasks, cfg.difficulty, cfg.task_seed, cfg.modulus, "train");
}

std::vector<ArithChainTask> evaluation_pool(const TrainConfig& cfg) {
  return generate_task_pool(cfg.eval_tasks, cfg.difficulty, derive_seed(cfg.task_seed, 0xe7a1),
                            cfg.modulus, "eval");
}

namespace {

struct CurriculumOutcome {
  std::vector<TrainingTask> tasks;
  std::vector<DifficultyRecord> records;
};

CurriculumOutcome build_curriculum(const PolicySnapshot& policy,
                                   const std::vector<ArithChainTask>& pool, const TrainConfig& cfg,
                                   Stage phase) {
  CurriculumOutcome out;
  const SamplerConfig base = phase == Stage::stage1 ? cfg.stage1.sampler : cfg.stage2.sampler;
  std::map<std::string, std::vector<Trajectory>> correct;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    SamplerConfig probe = base;
    probe.seed = derive_seed(cfg.seed, 0xd1ff0000ULL + static_cast<std::uint64_t>(phase), i);
    auto rec = score_difficulty(policy, pool[i], cfg.group_size, probe, cfg.thresholds);
    TrainingTask tt{pool[i], rec.bucket};
    if (rec.bucket == Bucket::hard && cfg.fusion_rollouts >= 2) {
      SamplerConfig explore = probe;
      explore.temperature = cfg.hard_temperature;
      explore.seed = derive_seed(cfg.seed, 0xf0510000ULL + static_cast<std::uint64_t>(phase), i);
      const auto group = rollout_group(policy, pool[i], cfg.fusion_rollouts, explore);
      for (const auto& m : group.members) {
        if (m.reward.value_or(0.0) == 1.0) {
          correct[pool[i].id].push_back(m);
          break;
        }
      }
    }
    out.records.push_back(std::move(rec));
    out.tasks.push_back(std::move(tt));
  }
  out.tasks = fuse_dataset_with_prefixes(out.tasks, correct, cfg.segmentation, cfg.fusion_cap);
  return out;
}

std::vector<TrainingTask> plain_tasks(const std::vector<ArithChainTask>& pool) {
  std::vector<TrainingTask> out;
  out.reserve(pool.size());
  for (const auto& t : pool) out.push_back({t, Bucket::medium});
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "iter,stage,mean_reward,mean_entropy,mean_len,objective,kl\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << static_cast<int>(r.stage) << ',' << fmt_double(r.mean_reward) << ','
        << fmt_double(r.mean_policy_entropy) << ',' << fmt_double(r.mean_output_length) << ','
        << fmt_double(r.objective) << ',' << fmt_double(r.kl) << '\n';
  }
}

TwoStageResult train_two_stage(const TrainConfig& cfg,
                               const std::optional<std::filesystem::path>& out_dir,
                               const IterationObserver& observer) {
  cfg.validate();
  PolicySnapshot initial = cfg.init_checkpoint.empty() ? make_base_policy(cfg.modulus, cfg.base_prior)
                                                       : load_checkpoint_file(cfg.init_checkpoint);
  if (initial.vocab().modulus() != cfg.modulus) {
    throw ConfigError("initial checkpoint modulus does not match the task modulus");
  }
  const auto pool = training_pool(cfg);

  TwoStageResult result{initial, initial, {}, {}, {}};
  std::vector<TrainingTask> stage1_tasks = plain_tasks(pool);
  if (cfg.curriculum) {
    auto cur = build_curriculum(initial, pool, cfg, Stage::stage1);
    for (auto& r : cur.records) result.difficulty.emplace_back("stage1", std::move(r));
    stage1_tasks = std::move(cur.tasks);
    for (std::size_t k = pool.size(); k < stage1_tasks.size(); ++k) result.fused_tasks.push_back(stage1_tasks[k]);
  }
  log::info("stage 1: " + std::to_string(stage1_tasks.size()) + " tasks");
  auto s1 = run_stage(initial, stage1_tasks, Stage::stage1, cfg, nullptr, observer);
  result.stage1_policy = s1.policy;
  result.metrics = std::move(s1.metrics);

  std::vector<TrainingTask> stage2_tasks = plain_tasks(pool);
  if (cfg.curriculum && cfg.rescore_before_stage2) {
    auto cur = build_curriculum(result.stage1_policy, pool, cfg, Stage::stage2);
    for (auto& r : cur.records) result.difficulty.emplace_back("stage2", std::move(r));
    stage2_tasks = std::move(cur.tasks);
    for (std::size_t k = pool.size(); k < stage2_tasks.size(); ++k) result.fused_tasks.push_back(stage2_tasks[k]);
  } else if (cfg.curriculum) {
    stage2_tasks = stage1_tasks;
  }
  const PolicySnapshot reference = result.stage1_policy;
  log::info("stage 2: " + std::to_string(stage2_tasks.size()) + " tasks");
  auto s2 = run_stage(result.stage1_policy, stage2_tasks, Stage::stage2, cfg, &reference, observer);
  result.final_policy = s2.policy;
  const std::size_t offset = result.metrics.size();
  for (auto& row : s2.metrics) row.iteration += offset;
  result.metrics.insert(result.metrics.end(), s2.metrics.begin(), s2.metrics.end());

  if (out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(*out_dir / "checkpoints");
    auto open = [](const fs::path& p) {
      std::ofstream f(p, std::ios::binary);
      if (!f) throw RuntimeFailure("cannot write " + p.string());
      return f;
    };
    {
      auto f = open(*out_dir / "metrics.csv");
      write_metrics_csv(f, result.metrics);
    }
    {
      auto f = open(*out_dir / "difficulty.csv");
      f << "phase,question_id,successes,group_size,bucket\n";
      for (const auto& [phase, r] : result.difficulty) {
        f << phase << ',' << r.question_id << ',' << r.successes << ',' << r.group_size << ','
          << to_string(r.bucket) << '\n';
      }
    }
    {
      auto f = open(*out_dir / "fused_tasks.jsonl");
      const Vocabulary vocab(cfg.modulus);
      for (const auto& t : result.fused_tasks) f << serialize_task(t.task, vocab) << '\n';
    }
    save_checkpoint_file((*out_dir / "checkpoints" / "stage1_final.ckpt").string(), result.stage1_policy);
    save_checkpoint_file((*out_dir / "checkpoints" / "stage2_final.ckpt").string(), result.final_policy);
  }
  return result;
}

std::string serialize_task(const ArithChainTask& task, const Vocabulary& vocab) {
  nlohmann::json doc;
  doc["id"] = task.id;
  doc["modulus"] = task.modulus;
  doc["seed_value"] = task.seed_value;
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& s : task.ops) {
    ops.push_back({vocab.symbol(vocab.op_base() + static_cast<int>(s.op)), s.operand});
  }
  doc["ops"] = std::move(ops);
  doc["prefix"] = task.prefix;
  doc["question"] = task.question_tokens(vocab);
  doc["question_text"] = task.question_text(vocab);
  doc["ground_truth"] = task.ground_truth();
  return doc.dump();
}

ArithChainTask parse_task(std::string_view line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed task JSON at byte " + std::to_string(e.byte), e.byte);
  }
  try {
    ArithChainTask t;
    t.id = doc.at("id").get<std::string>();
    t.modulus = doc.at("modulus").get<int>();
    t.seed_value = doc.at("seed_value").get<int>();
    const Vocabulary vocab(t.modulus);
    for (const auto& op : doc.at("ops")) {
      const auto sym = op.at(0).get<std::string>();
      auto id = vocab.id_of(sym);
      if (!id || !vocab.is_op(*id)) throw SchemaError("ops", "has unknown operator " + sym);
      t.ops.push_back({static_cast<Op>(*id - vocab.op_base()), op.at(1).get<int>()});
    }
    if (auto it = doc.find("prefix"); it != doc.end()) t.prefix = it->get<std::vector<int>>();
    if (t.ops.empty()) throw SchemaError("ops", "must be non-empty");
    if (t.seed_value < 0 || t.seed_value >= t.modulus) throw SchemaError("seed_value", "is out of range");
    for (const auto& s : t.ops) {
      if (s.operand < 0 || s.operand >= t.modulus) throw SchemaError("ops", "operand out of range");
    }
    for (int tok : t.prefix) {
      if (tok < 0 || tok >= vocab.size()) throw SchemaError("prefix", "token out of range");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("task", e.what());
  }
}

std::vector<ArithChainTask> load_tasks(std::istream& in) {
  std::vector<ArithChainTask> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_task(line));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

namespace {

namespace pt = boost::property_tree;

template <typename T>
T parse_value(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string text = boost::algorithm::trim_copy(raw);
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw ConfigError("config [" + section + "] " + key + ": cannot parse \"" + text + "\"");
  }
  return value;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& raw) {
  const auto v = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config [" + section + "] " + key + ": expected a boolean, got \"" + raw + "\"");
}

std::vector<std::string> parse_list(const std::string& raw) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, raw, boost::algorithm::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

Stage parse_stage(const std::string& section, const std::string& key, const std::string& raw) {
  const auto v = boost::algorithm::trim_copy(raw);
  if (v == "stage1") return Stage::stage1;
  if (v == "stage2") return Stage::stage2;
  throw ConfigError("config [" + section + "] " + key + ": expected stage1 or stage2");
}

void apply_stage(StageSettings& st, const std::string& section, const std::string& key,
                 const std::string& v) {
  if (key == "iterations") st.iterations = parse_value<std::size_t>(section, key, v);
  else if (key == "temperature") st.sampler.temperature = parse_value<double>(section, key, v);
  else if (key == "top_p") st.sampler.top_p = parse_value<double>(section, key, v);
  else if (key == "max_len") st.sampler.max_len = parse_value<std::size_t>(section, key, v);
  else if (key == "epsilon") st.objective.epsilon = parse_value<double>(section, key, v);
  else if (key == "kl_coeff") st.objective.kl_coeff = parse_value<double>(section, key, v);
  else if (key == "objective") st.objective.stage = parse_stage(section, key, v);
  else throw ConfigError("config [" + section + "]: unknown key \"" + key + "\"");
}

}  // namespace

TrainConfig load_train_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  TrainConfig cfg = desk_preset();
  bool baseline = false;
  if (auto train = tree.get_child_optional("train")) {
    if (auto preset = train->get_optional<std::string>("preset")) {
      const auto name = boost::algorithm::trim_copy(*preset);
      if (name == "desk") cfg = desk_preset();
      else if (name == "full") cfg = full_scale_preset();
      else if (name == "grpo") baseline = true;
      else throw ConfigError("config [train] preset: unknown preset \"" + name + "\"");
    }
  }
  std::vector<std::string> boundary_symbols{"."};
  std::optional<bool> curriculum_override;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config key \"" + section + "\" appears outside a section");
    }
    for (const auto& [key, node] : body) {
      const std::string& v = node.data();
      if (section == "train") {
        if (key == "preset") continue;
        if (key == "learning_rate") cfg.learning_rate = parse_value<double>(section, key, v);
        else if (key == "momentum") cfg.momentum = parse_value<double>(section, key, v);
        else if (key == "batch_questions") cfg.batch_questions = parse_value<std::size_t>(section, key, v);
        else if (key == "group_size") cfg.group_size = parse_value<std::size_t>(section, key, v);
        else if (key == "seed") cfg.seed = parse_value<std::uint64_t>(section, key, v);
        else if (key == "judge") {
          const auto j = boost::algorithm::trim_copy(v);
          if (j == "current") cfg.judge = JudgeMode::current;
          else if (j == "stage_start") cfg.judge = JudgeMode::stage_start;
          else throw ConfigError("config [train] judge: expected current or stage_start");
        } else if (key == "entropy_convention") {
          const auto c = boost::algorithm::trim_copy(v);
          if (c == "mean") cfg.attribution.entropy_convention = EntropyConvention::mean_per_token;
          else if (c == "sum") cfg.attribution.entropy_convention = EntropyConvention::sum;
          else throw ConfigError("config [train] entropy_convention: expected mean or sum");
        } else throw ConfigError("config [train]: unknown key \"" + key + "\"");
      } else if (section == "task") {
        if (key == "modulus") cfg.modulus = parse_value<int>(section, key, v);
        else if (key == "difficulty") cfg.difficulty = parse_value<int>(section, key, v);
        else if (key == "train_tasks") cfg.train_tasks = parse_value<std::size_t>(section, key, v);
        else if (key == "eval_tasks") cfg.eval_tasks = parse_value<std::size_t>(section, key, v);
        else if (key == "task_seed") cfg.task_seed = parse_value<std::uint64_t>(section, key, v);
        else throw ConfigError("config [task]: unknown key \"" + key + "\"");
      } else if (section == "stage1") {
        apply_stage(cfg.stage1, section, key, v);
      } else if (section == "stage2") {
        apply_stage(cfg.stage2, section, key, v);
      } else if (section == "modulation") {
        if (key == "alpha") cfg.modulation.alpha = parse_value<double>(section, key, v);
        else if (key == "beta") cfg.modulation.beta = parse_value<double>(section, key, v);
        else if (key == "gamma") cfg.modulation.gamma = parse_value<double>(section, key, v);
        else if (key == "theta") cfg.modulation.theta = parse_value<double>(section, key, v);
        else throw ConfigError("config [modulation]: unknown key \"" + key + "\"");
      } else if (section == "segmentation") {
        if (key == "quantile") cfg.segmentation.entropy_quantile = parse_value<double>(section, key, v);
        else if (key == "min_interval") cfg.segmentation.min_interval = parse_value<std::size_t>(section, key, v);
        else if (key == "fallback") cfg.segmentation.fallback_to_surprisal = parse_bool(section, key, v);
        else if (key == "markers") {
          cfg.segmentation.marker_lexicon.clear();
          for (const auto& m : parse_list(v)) cfg.segmentation.marker_lexicon.insert(fold_marker(m));
        } else if (key == "boundary") boundary_symbols = parse_list(v);
        else throw ConfigError("config [segmentation]: unknown key \"" + key + "\"");
      } else if (section == "curriculum") {
        if (key == "enabled") curriculum_override = parse_bool(section, key, v);
        else if (key == "hard_max_successes") cfg.thresholds.hard_max_successes = parse_value<std::size_t>(section, key, v);
        else if (key == "easy_fraction") cfg.thresholds.easy_fraction = parse_value<double>(section, key, v);
        else if (key == "hard_temperature") cfg.hard_temperature = parse_value<double>(section, key, v);
        else if (key == "fusion_rollouts") cfg.fusion_rollouts = parse_value<std::size_t>(section, key, v);
        else if (key == "fusion_cap") cfg.fusion_cap = parse_value<std::size_t>(section, key, v);
        else if (key == "rescore_before_stage2") cfg.rescore_before_stage2 = parse_bool(section, key, v);
        else if (key == "plateau_window") cfg.plateau_window = parse_value<std::size_t>(section, key, v);
        else if (key == "plateau_tolerance") cfg.plateau_tolerance = parse_value<double>(section, key, v);
        else throw ConfigError("config [curriculum]: unknown key \"" + key + "\"");
      } else if (section == "eval") {
        if (key == "k") cfg.eval_k = parse_value<std::size_t>(section, key, v);
        else if (key == "temperature") cfg.eval_temperature = parse_value<double>(section, key, v);
        else if (key == "top_p") cfg.eval_top_p = parse_value<double>(section, key, v);
        else throw ConfigError("config [eval]: unknown key \"" + key + "\"");
      } else if (section == "base") {
        if (key == "format") cfg.base_prior.format = parse_value<double>(section, key, v);
        else if (key == "marker") cfg.base_prior.marker = parse_value<double>(section, key, v);
        else if (key == "finish") cfg.base_prior.finish = parse_value<double>(section, key, v);
        else if (key == "arithmetic") cfg.base_prior.arithmetic = parse_value<double>(section, key, v);
        else if (key == "copy") cfg.base_prior.copy = parse_value<double>(section, key, v);
        else if (key == "checkpoint") cfg.init_checkpoint = boost::algorithm::trim_copy(v);
        else throw ConfigError("config [base]: unknown key \"" + key + "\"");
      } else {
        throw ConfigError("config: unknown section [" + section + "]");
      }
    }
  }

  if (cfg.modulus < 2 || cfg.modulus > 10) throw ConfigError("config [task] modulus must lie in [2,10]");
  const Vocabulary vocab(cfg.modulus);
  cfg.segmentation.boundary_token_ids.clear();
  for (const auto& sym : boundary_symbols) {
    auto id = vocab.id_of(sym);
    if (!id) throw ConfigError("config [segmentation] boundary: unknown token \"" + sym + "\"");
    cfg.segmentation.boundary_token_ids.insert(*id);
  }
  if (baseline) cfg = grpo_baseline(cfg);
  if (curriculum_override) cfg.curriculum = *curriculum_override;
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return load_train_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace acpo
