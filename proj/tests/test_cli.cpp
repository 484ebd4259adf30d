#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const fs::path kDir = fs::temp_directory_path() / "caattack_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(CAATTACK_CLI) + " " + args + " >" + (kDir / "stdout.txt").string() +
                          " 2>" + (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    ASSERT_EQ(run("generate-sbm --out " + (kDir / "sbm").string() + " --seed 3"), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(kDir); }
  static std::string data() { return (kDir / "sbm").string(); }
};

TEST_F(Cli, RunWritesReport) {
  const auto out = kDir / "run.json";
  ASSERT_EQ(run("run --dataset " + data() + " --ca-enabled --budget-fraction 0.05 --seeds 0,1 "
                "--victim-epochs 50 --output " + out.string()),
            0)
      << read(kDir / "stderr.txt");
  const auto j = nlohmann::json::parse(read(out));
  EXPECT_EQ(j["loss"], "CA-CE");
  EXPECT_EQ(j["per_seed_accuracy"].size(), 2u);
  EXPECT_TRUE(fs::exists(kDir / "run.flips.txt"));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  const auto cfg = kDir / "exp.json";
  std::ofstream(cfg) << nlohmann::json{{"dataset", data()}, {"attack", "dice"}, {"budget_fraction", 0.02},
                                       {"seeds", {0}}, {"victim_epochs", 20}}
                            .dump();
  const auto out = kDir / "cfg.json";
  ASSERT_EQ(run("run --config " + cfg.string() + " --budget-fraction 0.04 --output " + out.string()), 0)
      << read(kDir / "stderr.txt");
  const auto j = nlohmann::json::parse(read(out));
  EXPECT_EQ(j["attack"], "dice");
  EXPECT_EQ(j["config"]["budget_fraction"], 0.04);
}

TEST_F(Cli, AttackThenEvaluate) {
  const auto out = kDir / "atk.json";
  ASSERT_EQ(run("attack --dataset " + data() + " --budget-fraction 0.03 --output " + out.string()), 0)
      << read(kDir / "stderr.txt");
  const auto j = nlohmann::json::parse(read(out));
  EXPECT_FALSE(j["flips"].empty());
  EXPECT_EQ(j["trace"].size(), j["flips"].size());
  const auto ev = kDir / "ev.json";
  ASSERT_EQ(run("evaluate --dataset " + data() + " --flips " + (kDir / "atk.flips.txt").string() +
                " --seeds 0 --victim-epochs 30 --output " + ev.string()),
            0)
      << read(kDir / "stderr.txt");
  const auto e = nlohmann::json::parse(read(ev));
  EXPECT_EQ(e["flips"], j["flips"]);
  EXPECT_TRUE(e["degenerate_ci"].get<bool>());
}

TEST_F(Cli, ScatterCsv) {
  const auto out = kDir / "scatter.csv";
  ASSERT_EQ(run("scatter --dataset " + data() + " --ca-enabled --output " + out.string()), 0);
  const auto text = read(out);
  EXPECT_EQ(text.rfind("node_id,margin,grad_l2\n", 0), 0u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("run --dataset " + data() + " --budget-fraction 2"), 2);
  EXPECT_NE(read(kDir / "stderr.txt").find("[config]"), std::string::npos);
  EXPECT_EQ(run("run --dataset " + data() + " --no-such-flag 1"), 2);
  EXPECT_EQ(run("run --dataset " + (kDir / "missing").string()), 3);
  EXPECT_NE(read(kDir / "stderr.txt").find("[load]"), std::string::npos);
  EXPECT_EQ(run("evaluate --dataset " + data() + " --flips " + (kDir / "none.txt").string()), 3);
  std::ofstream(kDir / "bad.json") << R"({"datasett": "x"})";
  EXPECT_EQ(run("run --config " + (kDir / "bad.json").string()), 2);
  // DICE on a single edge between same-label nodes: deleting it would
  // isolate both ends and there is nothing to add.
  fs::create_directories(kDir / "pair");
  std::ofstream(kDir / "pair" / "labels.txt") << "0\n0\n";
  std::ofstream(kDir / "pair" / "edges.txt") << "0 1\n";
  EXPECT_EQ(run("run --dataset " + (kDir / "pair").string() +
                " --attack dice --budget-fraction 1 --labeled-fraction 0.5 --seeds 0"),
            4);
  EXPECT_NE(read(kDir / "stderr.txt").find("[attack]"), std::string::npos);
}

}  // namespace
