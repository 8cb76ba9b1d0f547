#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acpo/cli.hpp"
#include "acpo/policy.hpp"
#include "acpo/trainer.hpp"

using namespace acpo;

namespace {

const std::filesystem::path kData = ACPO_TEST_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("acpo-cli-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST(Cli, VerifyMathPasses) {
  const auto r = cli({"verify-math", "--samples", "50"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
}

TEST(Cli, AnalyzeTraceFixture) {
  const auto dir = scratch("analyze");
  const auto out = dir / "segments.jsonl";
  const auto r = cli({"analyze-trace", "--in", (kData / "trace_fixture.jsonl").string(), "--quantile", "0.3",
                      "--boundary-text", ".", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(out);
  ASSERT_EQ(lines.size(), 3u);
  const std::vector<std::vector<std::size_t>> expected{{3}, {3, 6}, {}};
  const std::vector<std::string> statistic{"entropy", "entropy", "surprisal"};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto j = nlohmann::json::parse(lines[i]);
    EXPECT_EQ(j.at("boundaries").get<std::vector<std::size_t>>(), expected[i]) << lines[i];
    EXPECT_EQ(j.at("statistic"), statistic[i]);
    for (const auto& s : j.at("steps")) {
      EXPECT_FALSE(s.contains("c_attr"));
      EXPECT_FALSE(s.contains("w"));
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Cli, AnalyzeTraceWithCheckpoint) {
  const auto dir = scratch("analyze-ckpt");
  const auto ckpt = dir / "base.ckpt";
  save_checkpoint_file(ckpt.string(), make_base_policy(10));
  const auto out = dir / "segments.jsonl";
  const auto r = cli({"analyze-trace", "--in", (kData / "trace_fixture.jsonl").string(), "--quantile", "0.3",
                      "--boundary-text", ".", "--checkpoint", ckpt.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(out);
  ASSERT_EQ(lines.size(), 3u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto j = nlohmann::json::parse(lines[i]);
    for (const auto& s : j.at("steps")) {
      EXPECT_TRUE(s.contains("c_attr"));
      EXPECT_TRUE(s.contains("w"));
      EXPECT_GT(s.at("w").get<double>(), 0.0);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Cli, AnalyzeTraceRejectsMalformedInput) {
  const auto dir = scratch("analyze-bad");
  const auto in = dir / "bad.jsonl";
  std::ofstream(in) << "{\"id\": \"x\"\n";
  const auto r = cli({"analyze-trace", "--in", in.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("acpo-error:"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Cli, MissingConfigNamesPath) {
  const auto r = cli({"train", "--config", "/no/such/train.ini", "--out", "/tmp/acpo-cli-none"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/no/such/train.ini"), std::string::npos);
}

TEST(Cli, UnknownFlagFails) {
  const auto r = cli({"verify-math", "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(cli({"no-such-command"}).code, 1);
}

TEST(Cli, ReportCopiesValuesVerbatim) {
  const auto dir = scratch("report");
  const auto csv = dir / "metrics.csv";
  {
    std::ofstream m(csv);
    m << "iter,stage,mean_reward,mean_entropy,mean_len,objective,kl\n";
    for (int i = 0; i < 10; ++i) {
      m << i << ",1,0.1" << i << ",1.2" << i << "," << 10 + i << ".5,0,0\n";
    }
  }
  const auto r = cli({"report", "--metrics", csv.string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto reward = lines_of(dir / "reward.dat");
  const auto entropy = lines_of(dir / "entropy.dat");
  const auto length = lines_of(dir / "length.dat");
  ASSERT_EQ(reward.size(), 10u);
  ASSERT_EQ(entropy.size(), 10u);
  ASSERT_EQ(length.size(), 10u);
  EXPECT_EQ(reward[3], "3 0.13");
  EXPECT_EQ(entropy[9], "9 1.29");
  EXPECT_EQ(length[0], "0 10.5");
  std::filesystem::remove_all(dir);
}

TEST(Cli, ReportOnEmptyMetrics) {
  const auto dir = scratch("report-empty");
  const auto csv = dir / "metrics.csv";
  std::ofstream(csv) << "iter,stage,mean_reward,mean_entropy,mean_len,objective,kl\n";
  ASSERT_EQ(cli({"report", "--metrics", csv.string(), "--out", dir.string()}).code, 0);
  for (const char* f : {"reward.dat", "entropy.dat", "length.dat"}) {
    ASSERT_TRUE(std::filesystem::exists(dir / f));
    EXPECT_EQ(std::filesystem::file_size(dir / f), 0u);
  }
  std::filesystem::remove_all(dir);
}

TEST(Cli, ReportNamesMalformedRow) {
  const auto dir = scratch("report-bad");
  const auto csv = dir / "metrics.csv";
  std::ofstream(csv) << "iter,stage,mean_reward,mean_entropy,mean_len,objective,kl\n0,1,0.5,1,2,0,0\n1,1,0.5\n";
  const auto r = cli({"report", "--metrics", csv.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
  std::filesystem::remove_all(dir);
}

TEST(Cli, EvalCheckpoint) {
  const auto dir = scratch("eval");
  const auto ckpt = dir / "base.ckpt";
  save_checkpoint_file(ckpt.string(), make_base_policy(10, {40, 40, 40, 20, 40}));
  const auto tasks = dir / "tasks.jsonl";
  {
    std::ofstream t(tasks);
    const Vocabulary v(10);
    for (const auto& task : generate_task_pool(5, 2, 3)) t << serialize_task(task, v) << "\n";
  }
  const auto r = cli({"eval", "--checkpoint", ckpt.string(), "--tasks", tasks.string(), "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("acc@2 1.000000"), std::string::npos) << r.out;
  std::filesystem::remove_all(dir);
}
