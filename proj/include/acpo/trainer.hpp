#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acpo/advantage.hpp"
#include "acpo/attribution.hpp"
#include "acpo/objective.hpp"
#include "acpo/policy.hpp"
#include "acpo/sampler.hpp"
#include "acpo/segmentation.hpp"
#include "acpo/task.hpp"

namespace acpo {

enum class Bucket { easy, medium, hard };
std::string to_string(Bucket b);

struct DifficultyThresholds {
  std::size_t hard_max_successes = 0;  ///< at most this many successes is hard
  double easy_fraction = 0.5;          ///< at least this fraction of G is easy
};

struct DifficultyRecord {
  std::string question_id;
  std::size_t successes = 0;
  std::size_t group_size = 0;
  Bucket bucket = Bucket::medium;
};

struct TrainingTask {
  ArithChainTask task;
  Bucket bucket = Bucket::medium;
};

/// Which snapshot scores attributions during a stage.
enum class JudgeMode {
  current,      ///< the policy being trained, as of the start of each iteration
  stage_start,  ///< frozen at the snapshot the stage started from
};

struct StageSettings {
  std::size_t iterations = 300;
  SamplerConfig sampler;
  ObjectiveConfig objective;
};

struct TrainConfig {
  double learning_rate = 0.5;
  double momentum = 0.0;
  std::size_t batch_questions = 16;
  std::size_t group_size = 8;
  std::uint64_t seed = 1;

  StageSettings stage1;
  StageSettings stage2;
  ModulationParams modulation;
  SegmentationConfig segmentation;
  AttributionConfig attribution;
  JudgeMode judge = JudgeMode::current;

  bool curriculum = true;
  DifficultyThresholds thresholds;
  double hard_temperature = 1.3;
  std::size_t fusion_rollouts = 32;
  std::size_t fusion_cap = 2;
  bool rescore_before_stage2 = true;

  /// Stage 1 ends early once mean reward over the last `plateau_window`
  /// iterations improves by less than `plateau_tolerance` on the window
  /// before it. 0 disables the trigger.
  std::size_t plateau_window = 0;
  double plateau_tolerance = 0.0;

  int modulus = 10;
  int difficulty = 3;
  std::size_t train_tasks = 256;
  std::size_t eval_tasks = 200;
  std::uint64_t task_seed = 2024;

  BasePrior base_prior;
  std::string init_checkpoint;

  std::size_t eval_k = 8;
  double eval_temperature = 0.8;
  double eval_top_p = 0.95;

  void validate() const;
};

/// Desk-scale defaults for the tiny policy.
TrainConfig desk_preset();
/// Learning rate 1e-6, 24 questions x G=8 = 192 sampled responses per step.
TrainConfig full_scale_preset();
/// Plain GRPO on the same setup: alpha = 0, uniform token credit in both
/// phases, no KL, no difficulty-aware sampling or prefix fusion.
TrainConfig grpo_baseline(TrainConfig cfg);

struct MetricsRow {
  std::size_t iteration = 0;
  Stage stage = Stage::stage1;
  double mean_reward = 0.0;
  double mean_policy_entropy = 0.0;  ///< temperature-1 next-token entropy over rollout tokens
  double mean_output_length = 0.0;
  double objective = 0.0;
  double kl = 0.0;
};

DifficultyRecord score_difficulty(const PolicySnapshot& policy, const ArithChainTask& task,
                                  std::size_t group_size, const SamplerConfig& sampler,
                                  const DifficultyThresholds& thresholds = {});

Bucket bucket_for(std::size_t successes, std::size_t group_size,
                  const DifficultyThresholds& thresholds);

/// Adds prefixed copies of every hard task that has verified-correct
/// trajectories: question ++ first j steps, j = 1..min(steps-1, cap).
/// Other tasks pass through unchanged. Throws ValidationError when a
/// trajectory does not belong to its task or is not correct.
std::vector<TrainingTask> fuse_dataset_with_prefixes(
    const std::vector<TrainingTask>& tasks,
    const std::map<std::string, std::vector<Trajectory>>& correct_trajectories,
    const SegmentationConfig& segmentation, std::size_t cap);

struct StageResult {
  PolicySnapshot policy;
  std::vector<MetricsRow> metrics;
};

using IterationObserver =
    std::function<void(std::size_t iteration, const PolicySnapshot& policy, const MetricsRow& row)>;

/// Question indices for one iteration (without replacement when the pool allows).
std::vector<std::size_t> select_batch(std::uint64_t seed, Stage stage, std::size_t iteration,
                                      std::size_t pool_size, std::size_t batch);

/// Base seed for the rollout group of batch slot `slot`; member j uses seed + j.
std::uint64_t rollout_seed(std::uint64_t seed, Stage stage, std::size_t iteration, std::size_t slot);

/// Sampler settings used for a task in a stage (hard tasks get the higher
/// temperature in stage 1 when the curriculum is on).
SamplerConfig sampler_for(const TrainConfig& cfg, Stage stage, const TrainingTask& task);

/// Runs one curriculum stage. Stage 2 requires `ref`. Throws RuntimeFailure
/// with a dump of the offending group if the objective or gradient is not finite.
StageResult run_stage(PolicySnapshot policy, const std::vector<TrainingTask>& tasks, Stage stage,
                      const TrainConfig& cfg, const PolicySnapshot* ref = nullptr,
                      const IterationObserver& observer = {});

/// Fraction of tasks with at least one verified answer among k samples.
double evaluate_acc_at_k(const PolicySnapshot& policy, const std::vector<ArithChainTask>& tasks,
                         std::size_t k = 8, double temperature = 0.8, double top_p = 0.95,
                         std::uint64_t seed = 0);

struct TwoStageResult {
  PolicySnapshot stage1_policy;
  PolicySnapshot final_policy;
  std::vector<MetricsRow> metrics;
  std::vector<std::pair<std::string, DifficultyRecord>> difficulty;  ///< (phase, record)
  std::vector<TrainingTask> fused_tasks;
};

/// Curriculum scoring and fusion, Stage 1, then Stage 2 against the Stage-1
/// snapshot. With `out_dir`, writes metrics.csv, difficulty.csv,
/// fused_tasks.jsonl and checkpoints/stage{1,2}_final.ckpt.
TwoStageResult train_two_stage(const TrainConfig& cfg,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                               const IterationObserver& observer = {});

std::vector<ArithChainTask> training_pool(const TrainConfig& cfg);
std::vector<ArithChainTask> evaluation_pool(const TrainConfig& cfg);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// Task interchange used for fused_tasks.jsonl and `eval --tasks`.
std::string serialize_task(const ArithChainTask& task, const Vocabulary& vocab);
ArithChainTask parse_task(std::string_view line);
std::vector<ArithChainTask> load_tasks(std::istream& in);

/// INI-style `[section] key = value` config on top of a preset (`[train] preset`).
/// Unknown sections or keys are rejected.
TrainConfig load_train_config(std::istream& in);
TrainConfig load_train_config_file(const std::string& path);

}  // namespace acpo
