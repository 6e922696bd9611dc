#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cpsim/cli.hpp"
#include "cpsim/error.hpp"
#include "cpsim/export.hpp"

namespace cpsim {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("cpsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = root_ / "tiny.yaml";
    write_text_file(config_,
                    "duration: 2\n"
                    "scenario:\n"
                    "  road_length: 600\n"
                    "  comms_region: [100, 500]\n"
                    "  logging_region: [200, 400]\n"
                    "metrics:\n"
                    "  warmup: 0.5\n");
  }
  void TearDown() override { fs::remove_all(root_); }

  int call(std::vector<std::string> args) {
    args.insert(args.begin(), "cpsim");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    out_.str("");
    err_.str("");
    return cli_main(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path root_;
  fs::path config_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, RunWritesArtifacts) {
  const fs::path dir = root_ / "run";
  ASSERT_EQ(call({"run", "-c", config_.string(), "--seed", "1", "--out", dir.string()}), kExitOk) << err_.str();
  for (const char* name : {"summary.json", "config.json", "ote.csv", "cbr.csv"}) EXPECT_TRUE(fs::exists(dir / name));
  EXPECT_NE(out_.str().find("mean CBR"), std::string::npos);
}

TEST_F(CliTest, MissingConfigExitsTwoAndNamesPath) {
  const std::string missing = (root_ / "nope.yaml").string();
  EXPECT_EQ(call({"run", "-c", missing}), kExitUsage);
  EXPECT_NE(err_.str().find(missing), std::string::npos) << err_.str();
}

TEST_F(CliTest, BadOverrideExitsTwo) {
  EXPECT_EQ(call({"run", "-c", config_.string(), "--set", "sensor.bogus=1"}), kExitUsage);
  EXPECT_NE(err_.str().find("sensor.bogus"), std::string::npos) << err_.str();
  EXPECT_EQ(call({"run", "--no-such-flag"}), kExitUsage);
}

TEST_F(CliTest, OverridesEchoedInSummary) {
  const fs::path dir = root_ / "acc";
  ASSERT_EQ(call({"run", "-c", config_.string(), "--policy", "accuracy", "--gamma", "3", "--out", dir.string()}),
            kExitOk)
      << err_.str();
  const auto j = nlohmann::json::parse(read_text_file(dir / "summary.json"));
  EXPECT_EQ(j["config"]["policy"]["mode"], "accuracy");
  EXPECT_EQ(j["config"]["policy"]["gamma"], 3.0);
}

TEST_F(CliTest, OutputRootFromEnvironment) {
  ::setenv("CPSIM_OUTPUT_ROOT", (root_ / "env").string().c_str(), 1);
  EXPECT_EQ(output_root(std::nullopt), root_ / "env");
  EXPECT_EQ(output_root(std::string("x")), fs::path("x"));
  ::unsetenv("CPSIM_OUTPUT_ROOT");
  EXPECT_EQ(output_root(std::nullopt), fs::path("runs"));
}

TEST_F(CliTest, RunDirectoryNameCarriesDigest) {
  SimConfig a, b;
  b.seed = 2;
  const std::string na = run_directory_name(a), nb = run_directory_name(b);
  EXPECT_EQ(na.size(), 16u + 1u + 8u);
  EXPECT_NE(na.substr(17), nb.substr(17));
}

TEST_F(CliTest, ParseAxis) {
  const SweepAxis axis = parse_axis("policy=etsi,accuracy:1,accuracy:3");
  EXPECT_EQ(axis.name, "policy");
  EXPECT_EQ(axis.values, (std::vector<std::string>{"etsi", "accuracy:1", "accuracy:3"}));
  EXPECT_THROW(parse_axis("policy"), ConfigError);
  const SimConfig c = apply_axis_value(SimConfig{}, "policy", "accuracy:5");
  EXPECT_EQ(c.policy.mode, PolicyMode::kAccuracy);
  EXPECT_DOUBLE_EQ(c.policy.gamma, 5.0);
  EXPECT_THROW(apply_axis_value(SimConfig{}, "scenario.nothing", "1"), ConfigError);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

TEST_F(CliTest, SweepGridAndDeterminism) {
  const std::vector<std::string> args{"sweep", "-c", config_.string(), "--duration", "1",
                                      "--axis", "policy=etsi,accuracy:1,accuracy:3,accuracy:5",
                                      "--axis", "density=60,120"};
  auto first = args;
  first.insert(first.end(), {"--out", (root_ / "s1").string()});
  auto second = args;
  second.insert(second.end(), {"--out", (root_ / "s2").string()});
  ASSERT_EQ(call(first), kExitOk) << err_.str();
  ASSERT_EQ(call(second), kExitOk) << err_.str();
  const std::string table = read_text_file(root_ / "s1" / "compare.csv");
  EXPECT_EQ(table, read_text_file(root_ / "s2" / "compare.csv"));

  std::set<std::string> cells;
  std::size_t cbr_mean_rows = 0;
  for (const std::string& line : lines_of(table)) {
    if (line.find(",cbr.mean,") != std::string::npos) ++cbr_mean_rows;
    cells.insert(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(cbr_mean_rows, 8u);
  EXPECT_EQ(cells.size(), 8u + 1u);  // plus the header
}

TEST_F(CliTest, SingleCellSweepMatchesRun) {
  ASSERT_EQ(call({"run", "-c", config_.string(), "--out", (root_ / "r").string()}), kExitOk) << err_.str();
  ASSERT_EQ(call({"sweep", "-c", config_.string(), "--axis", "seed=1", "--out", (root_ / "s").string()}), kExitOk)
      << err_.str();
  fs::path cell;
  for (const auto& entry : fs::directory_iterator(root_ / "s")) {
    if (entry.is_directory()) cell = entry.path();
  }
  ASSERT_FALSE(cell.empty());
  EXPECT_EQ(read_text_file(cell / "summary.json"), read_text_file(root_ / "r" / "summary.json"));
  EXPECT_EQ(read_text_file(cell / "ote.csv"), read_text_file(root_ / "r" / "ote.csv"));
}

TEST_F(CliTest, CompareTwoRuns) {
  ASSERT_EQ(call({"run", "-c", config_.string(), "--out", (root_ / "a").string()}), kExitOk);
  ASSERT_EQ(call({"run", "-c", config_.string(), "--policy", "accuracy", "--out", (root_ / "b").string()}), kExitOk);
  ASSERT_EQ(call({"compare", (root_ / "a").string(), (root_ / "b").string()}), kExitOk) << err_.str();
  EXPECT_EQ(out_.str().rfind("statistic,a,b,relative_change\n", 0), 0u);
  EXPECT_EQ(call({"compare", (root_ / "a").string(), (root_ / "missing").string()}), kExitUsage);
}

}  // namespace
}  // namespace cpsim
