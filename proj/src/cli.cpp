#include "acpo/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acpo/advantage.hpp"
#include "acpo/error.hpp"
#include "acpo/infotheory.hpp"
#include "acpo/log.hpp"
#include "acpo/policy.hpp"
#include "acpo/segmentation.hpp"
#include "acpo/trainer.hpp"

namespace acpo {

void write_segments(std::ostream& out, const SegmentedTrajectory& seg,
                    const SegmentAnnotations& annotations) {
  nlohmann::json doc;
  doc["id"] = seg.trajectory.id;
  doc["statistic"] = std::string(to_string(seg.statistic));
  doc["boundaries"] = seg.boundaries();
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < seg.steps.size(); ++i) {
    nlohmann::json step{{"start", seg.steps[i].start}, {"end", seg.steps[i].end}};
    if (annotations.profile) {
      step["c_attr"] = annotations.profile->scores.at(i);
      step["h_cond"] = annotations.profile->step_entropies.at(i);
    }
    if (!annotations.weights.empty()) step["w"] = annotations.weights[i];
    steps.push_back(std::move(step));
  }
  doc["steps"] = std::move(steps);
  out << doc.dump() << '\n';
  if (!out) throw RuntimeFailure("failed to write segments for \"" + seg.trajectory.id + "\"");
}

void write_report(const std::filesystem::path& metrics_csv, const std::filesystem::path& out_dir) {
  std::ifstream in(metrics_csv);
  if (!in) throw ValidationError("cannot open metrics file " + metrics_csv.string());

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };

  std::string line;
  std::vector<std::string> header;
  if (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = split(line);
  }
  const std::vector<std::pair<std::string, std::string>> plots{
      {"mean_reward", "reward.dat"}, {"mean_entropy", "entropy.dat"}, {"mean_len", "length.dat"}};
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  if (!header.empty()) {
    for (const auto& name : {std::string("iter"), plots[0].first, plots[1].first, plots[2].first}) {
      if (!column.count(name)) {
        throw ValidationError("metrics row 1: missing column \"" + name + "\"");
      }
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ValidationError("metrics row " + std::to_string(row_number) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    }
    for (const auto& name : {std::string("iter"), plots[0].first, plots[1].first, plots[2].first}) {
      const std::string& cell = cells[column[name]];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ValidationError("metrics row " + std::to_string(row_number) + ": field \"" + name +
                              "\" is not a number");
      }
    }
    rows.push_back(std::move(cells));
  }

  std::filesystem::create_directories(out_dir);
  for (const auto& [name, file] : plots) {
    std::ofstream f(out_dir / file, std::ios::binary);
    if (!f) throw RuntimeFailure("cannot write " + (out_dir / file).string());
    for (const auto& r : rows) f << r[column["iter"]] << ' ' << r[column[name]] << '\n';
  }
}

namespace {

struct AnalyzeOptions {
  std::string in_path;
  std::string markers_path;
  std::string out_path;
  std::string checkpoint;
  double quantile = 0.05;
  std::size_t min_interval = 1;
  std::vector<int> boundary_ids;
  std::vector<std::string> boundary_text;
  bool no_fallback = false;
};

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write " + path);
  return f;
}

void run_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  std::ifstream in(opt.in_path);
  if (!in) throw ValidationError("cannot open trace file " + opt.in_path);
  const auto trajectories = load_trace(in);

  SegmentationConfig cfg;
  cfg.entropy_quantile = opt.quantile;
  cfg.min_interval = opt.min_interval;
  cfg.fallback_to_surprisal = !opt.no_fallback;
  if (opt.markers_path.empty()) {
    cfg.marker_lexicon = default_marker_lexicon();
  } else {
    std::ifstream m(opt.markers_path);
    if (!m) throw ValidationError("cannot open marker file " + opt.markers_path);
    cfg.marker_lexicon = load_marker_lexicon(m);
  }
  cfg.boundary_token_ids.insert(opt.boundary_ids.begin(), opt.boundary_ids.end());
  for (const auto& t : trajectories) {
    for (const auto& r : t.output) {
      for (const auto& text : opt.boundary_text) {
        if (r.text == text) cfg.boundary_token_ids.insert(r.token_id);
      }
    }
  }
  cfg.validate();

  std::optional<PolicySnapshot> policy;
  if (!opt.checkpoint.empty()) {
    policy = load_checkpoint_file(opt.checkpoint);
    for (const auto& t : trajectories) {
      auto out_of_vocab = [&](int id) { return id < 0 || id >= policy->vocab_size(); };
      bool bad = std::any_of(t.question.begin(), t.question.end(), out_of_vocab) ||
                 std::any_of(t.output.begin(), t.output.end(),
                             [&](const TokenRecord& r) { return out_of_vocab(r.token_id); });
      if (bad) {
        throw ValidationError("trajectory \"" + t.id + "\" uses token ids outside the checkpoint vocabulary");
      }
    }
  }

  const std::size_t n = trajectories.size();
  std::vector<std::optional<SegmentedTrajectory>> segs(n);
  std::vector<std::optional<AttributionProfile>> profiles(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = trajectories[i];
    if (t.reasoning_length() == 0) {
      log::info("trajectory \"" + t.id + "\" has no reasoning region");
      continue;
    }
    segs[i] = segment_trajectory(t, cfg);
    if (policy && !t.answer_span.empty()) {
      const PolicyJudge judge(*policy);
      profiles[i] = attribution_profile(judge, *segs[i], {});
    }
  }

  // weights need a group: rewarded members sharing a question
  std::vector<std::vector<double>> weights(n);
  if (policy) {
    std::map<std::vector<int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
      if (trajectories[i].reward) groups[trajectories[i].question].push_back(i);
    }
    const ModulationParams params;
    for (const auto& [question, members] : groups) {
      if (members.size() < 2) continue;
      std::vector<double> rewards;
      for (auto i : members) rewards.push_back(*trajectories[i].reward);
      const auto base = group_base_advantage(rewards);
      double hmin = 0.0, hmax = 0.0;
      bool any = false;
      for (auto i : members) {
        if (!profiles[i]) continue;
        for (double h : profiles[i]->step_entropies) {
          hmin = any ? std::min(hmin, h) : h;
          hmax = any ? std::max(hmax, h) : h;
          any = true;
        }
      }
      for (std::size_t k = 0; k < members.size(); ++k) {
        const auto i = members[k];
        if (!profiles[i]) continue;
        for (std::size_t s = 0; s < profiles[i]->scores.size(); ++s) {
          weights[i].push_back(modulation_weight(profiles[i]->step_entropies[s],
                                                 profiles[i]->scores[s], base[k], hmin, hmax, params));
        }
      }
    }
  }

  auto emit = [&](std::ostream& os) {
    for (std::size_t i = 0; i < n; ++i) {
      if (segs[i]) {
        SegmentAnnotations ann;
        if (profiles[i]) ann.profile = &*profiles[i];
        ann.weights = weights[i];
        write_segments(os, *segs[i], ann);
      } else {
        SegmentedTrajectory empty;
        empty.trajectory = trajectories[i];
        write_segments(os, empty);
      }
    }
  };
  if (opt.out_path.empty()) {
    emit(out);
  } else {
    auto f = open_output(opt.out_path);
    emit(f);
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribution-guided policy optimization on arithmetic-chain tasks", "acpo"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_path;
  auto common = [&](CLI::App* cmd, bool out_required, const std::string& out_help) {
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s; seed_given = true; }, "Random seed");
    auto* o = cmd->add_option("--out", out_path, out_help);
    if (out_required) o->required();
  };

  std::string config_path;
  auto* train = app.add_subcommand("train", "Run two-stage training");
  train->add_option("--config", config_path, "Training config file")->required();
  common(train, true, "Output directory");

  std::string checkpoint, tasks_path;
  std::size_t k = 8;
  double eval_temperature = 0.8, eval_top_p = 0.95;
  auto* eval = app.add_subcommand("eval", "Acc@k of a checkpoint on a task file");
  eval->add_option("--checkpoint", checkpoint, "Policy checkpoint")->required();
  eval->add_option("--tasks", tasks_path, "Task JSONL file")->required();
  eval->add_option("--k", k, "Samples per task")->check(CLI::PositiveNumber);
  eval->add_option("--temperature", eval_temperature, "Sampling temperature");
  eval->add_option("--top-p", eval_top_p, "Nucleus mass");
  common(eval, false, "Write the result to this file as well");

  AnalyzeOptions analyze_opt;
  auto* analyze = app.add_subcommand("analyze-trace", "Segment and attribute recorded trajectories");
  analyze->add_option("--in", analyze_opt.in_path, "Trace JSONL file")->required();
  analyze->add_option("--markers", analyze_opt.markers_path, "Marker lexicon, one per line");
  analyze->add_option("--checkpoint", analyze_opt.checkpoint, "Policy used to score attributions");
  analyze->add_option("--quantile", analyze_opt.quantile, "Fraction of tokens taken as candidates");
  analyze->add_option("--min-interval", analyze_opt.min_interval, "Minimum boundary spacing");
  analyze->add_option("--boundary-id", analyze_opt.boundary_ids, "Sentence terminator token id");
  analyze->add_option("--boundary-text", analyze_opt.boundary_text, "Sentence terminator token text");
  analyze->add_flag("--no-fallback", analyze_opt.no_fallback, "Fail instead of using surprisal");
  common(analyze, false, "Segments JSONL output (default: standard output)");

  std::size_t samples = 1000;
  auto* verify = app.add_subcommand("verify-math", "Check the information-theoretic identities");
  verify->add_option("--samples", samples, "Random joint distributions to check")
      ->check(CLI::PositiveNumber);
  common(verify, false, "Write the summary to this file as well");

  std::string metrics_path;
  auto* report = app.add_subcommand("report", "Emit plot data from metrics.csv");
  report->add_option("--metrics", metrics_path, "metrics.csv from a training run")->required();
  common(report, true, "Output directory");

  std::vector<const char*> argv{"acpo"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "acpo-error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (train->parsed()) {
      if (!std::filesystem::exists(config_path)) {
        throw ConfigError("config file not found: " + config_path);
      }
      TrainConfig cfg = load_train_config_file(config_path);
      if (seed_given) cfg.seed = seed;
      const auto result = train_two_stage(cfg, std::filesystem::path(out_path));
      const auto pool = evaluation_pool(cfg);
      const double acc1 = evaluate_acc_at_k(result.stage1_policy, pool, cfg.eval_k,
                                            cfg.eval_temperature, cfg.eval_top_p, cfg.seed);
      const double acc2 = evaluate_acc_at_k(result.final_policy, pool, cfg.eval_k,
                                            cfg.eval_temperature, cfg.eval_top_p, cfg.seed);
      out << "stage1 acc@" << cfg.eval_k << ' ' << format_double(acc1) << '\n';
      out << "final acc@" << cfg.eval_k << ' ' << format_double(acc2) << '\n';
    } else if (eval->parsed()) {
      const auto policy = load_checkpoint_file(checkpoint);
      std::ifstream in(tasks_path);
      if (!in) throw ValidationError("cannot open task file " + tasks_path);
      const auto tasks = load_tasks(in);
      for (const auto& t : tasks) {
        if (t.modulus != policy.vocab().modulus()) {
          throw ValidationError("task \"" + t.id + "\" has modulus " + std::to_string(t.modulus) +
                                " but the checkpoint uses " +
                                std::to_string(policy.vocab().modulus()));
        }
      }
      const double acc = evaluate_acc_at_k(policy, tasks, k, eval_temperature, eval_top_p, seed);
      const std::string line = "acc@" + std::to_string(k) + ' ' + format_double(acc) + '\n';
      out << line;
      if (!out_path.empty()) open_output(out_path) << line;
    } else if (analyze->parsed()) {
      analyze_opt.out_path = out_path;
      run_analyze(analyze_opt, out);
    } else if (verify->parsed()) {
      const auto s = info::run_theorem_sweep(seed, samples, samples / 2 == 0 ? 1 : samples / 2);
      std::ostringstream summary;
      summary << "joints checked " << s.joints_checked << ", failed " << s.joints_failed << '\n'
              << "chains checked " << s.chains_checked << ", failed " << s.chains_failed
              << " (premise rejections " << s.chains_rejected << ")\n"
              << "max identity error " << s.max_identity_error << ", max symmetry error "
              << s.max_symmetry_error << '\n';
      summary << (s.passed() ? "all checks passed\n" : "checks FAILED\n");
      out << summary.str();
      if (!out_path.empty()) open_output(out_path) << summary.str();
      if (!s.passed()) throw RuntimeFailure("information-theoretic checks failed");
    } else if (report->parsed()) {
      write_report(metrics_path, out_path);
    }
  } catch (const ValidationError& e) {
    err << "acpo-error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "acpo-error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace acpo
