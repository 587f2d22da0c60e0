#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / ("promisetune_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli(const std::string& args, const std::string& env = "") {
  const fs::path log = fs::path(testing::TempDir()) / "promisetune_cli_stdout.txt";
  const std::string cmd = env + " " PROMISETUNE_CLI " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSource = "tune --synthetic rugged-wells --synthetic-options 6 --l 5 ";
const std::string kTune = std::string(kSource) + "--budget 25 ";

}  // namespace

TEST(Cli, UsageErrors) {
  const auto dir = scratch("usage");
  EXPECT_EQ(cli("tune --out " + dir.string()).code, 2);
  EXPECT_EQ(cli("tune --synthetic flat --dataset x.csv --out " + dir.string()).code, 2);
  EXPECT_EQ(cli("tune --synthetic flat --command 'echo 1' --out " + dir.string()).code, 2);
  EXPECT_EQ(cli("tune --synthetic flat --budget 0 --out " + dir.string()).code, 2);
  EXPECT_EQ(cli("tune --command 'echo 1' --out " + dir.string()).code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("tune --synthetic flat --out /x --emit-report ../escape.json").code, 2);
}

TEST(Cli, RuntimeErrors) {
  const auto dir = scratch("runtime");
  EXPECT_EQ(cli("tune --dataset /nonexistent.csv --out " + dir.string()).code, 1);
  EXPECT_EQ(cli("tune --synthetic volcano --out " + dir.string()).code, 1);
  EXPECT_EQ(cli("explain --result " + dir.string()).code, 1);
}

TEST(Cli, TuneWritesArtifacts) {
  const auto dir = scratch("tune");
  const auto r = cli(kTune + "--seed 3 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Incumbent trajectory"), std::string::npos);
  EXPECT_NE(r.out.find("Evaluations: 25 / 25"), std::string::npos);
  for (const char* name : {"space.json", "trials.csv", "result.json", "rules.json", "explain.json",
                           "causal_report.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  const Json result = Json::parse(slurp(dir / "result.json"));
  EXPECT_EQ(result["evaluations"], 25);
  EXPECT_EQ(result["seed"], 3);
  std::istringstream csv(slurp(dir / "trials.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 26U);
}

TEST(Cli, TuneIsByteIdentical) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const auto c = scratch("det_c");
  ASSERT_EQ(cli(kTune + "--seed 9 --out " + a.string()).code, 0);
  ASSERT_EQ(cli(kTune + "--out " + b.string(), "PROMISETUNE_SEED=9").code, 0);
  ASSERT_EQ(cli(kTune + "--seed 9 --threads 3 --out " + c.string()).code, 0);
  EXPECT_EQ(slurp(a / "trials.csv"), slurp(b / "trials.csv"));
  EXPECT_EQ(slurp(a / "trials.csv"), slurp(c / "trials.csv"));
  EXPECT_EQ(slurp(a / "rules.json"), slurp(c / "rules.json"));
}

TEST(Cli, CustomReportNames) {
  const auto dir = scratch("names");
  ASSERT_EQ(cli(kTune + "--out " + dir.string() +
                " --emit-report e.json --emit-causal-report c.json")
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir / "e.json"));
  EXPECT_TRUE(fs::exists(dir / "c.json"));
}

TEST(Cli, NoRulesAblation) {
  const auto dir = scratch("norules");
  ASSERT_EQ(cli(kTune + "--no-rules --out " + dir.string()).code, 0);
  const Json result = Json::parse(slurp(dir / "result.json"));
  EXPECT_EQ(result["tuner"], "w/o Rules");
  EXPECT_EQ(result["rule_pipeline_runs"], 0);
}

TEST(Cli, OfflineDataset) {
  const auto dir = scratch("offline");
  std::string csv = "a,b,performance\n";
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 8; ++b) {
      csv += std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(10 * a + b) + "\n";
    }
  }
  write(dir / "t.csv", csv);
  const auto r = cli("tune --dataset " + (dir / "t.csv").string() +
                     " --budget 16 --initial 4 --out " + (dir / "run").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const Json result = Json::parse(slurp(dir / "run" / "result.json"));
  EXPECT_EQ(result["best_performance"], 0.0);
}

TEST(Cli, CommandSource) {
  const auto dir = scratch("command");
  write(dir / "space.json",
        R"({"options":[{"name":"x","kind":"int","lo":0,"hi":9}]})");
  const auto r = cli("tune --command 'echo perf={x}' --regex 'perf=([0-9]+)' --space " +
                     (dir / "space.json").string() + " --budget 6 --initial 3 --out " +
                     (dir / "run").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(Json::parse(slurp(dir / "run" / "result.json"))["evaluations"], 6);
}

TEST(Cli, AblateFlatTiesEverything) {
  const auto dir = scratch("ablate");
  const auto r = cli("ablate --synthetic flat --synthetic-options 4 --repeats 2 --budgets 20 --out " +
                     dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("### B = 20"), std::string::npos);
  const Json ranks = Json::parse(slurp(dir / "ranks.json"));
  std::size_t cells = 0;
  for (const auto& row : ranks["cells"]) {
    EXPECT_EQ(row["rank"], 1) << row.dump();
    ++cells;
  }
  EXPECT_EQ(cells, 3U);
  EXPECT_TRUE(fs::exists(dir / "runs.csv"));
  EXPECT_TRUE(fs::exists(dir / "ranks.md"));
}

TEST(Cli, AblateParsesBudgetList) {
  const auto dir = scratch("budgets");
  const auto r = cli("ablate --synthetic flat --synthetic-options 3 --repeats 2 "
                     "--budgets 5,6,7 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* b : {"### B = 5", "### B = 6", "### B = 7"}) {
    EXPECT_NE(r.out.find(b), std::string::npos) << b;
  }
  EXPECT_EQ(cli("ablate --synthetic flat --budgets 5,x --out " + dir.string()).code, 2);
  EXPECT_EQ(cli("ablate --synthetic flat --repeats 1 --out " + dir.string()).code, 2);
}

TEST(Cli, ExplainSweepIsMonotone) {
  const auto dir = scratch("explain");
  write(dir / "space.json",
        R"({"options":[{"name":"x","kind":"int","lo":0,"hi":9},{"name":"y","kind":"int","lo":0,"hi":9}]})");
  std::string csv = "iteration,x,y,performance,source\n";
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 10; ++y) {
      csv += std::to_string(x * 10 + y) + "," + std::to_string(x) + "," + std::to_string(y) + "," +
             std::to_string(x + y) + ",init\n";
    }
  }
  write(dir / "trials.csv", csv);
  write(dir / "rules.json", R"([
      [{"option":"x","op":"<","value":1},{"option":"y","op":"<","value":1}],
      [{"option":"x","op":"<","value":3}],
      [{"option":"y","op":"<","value":5}],
      [{"option":"x","op":">=","value":7}]])");
  std::vector<std::size_t> counts;
  for (const char* k : {"1", "5", "20", "60", "100"}) {
    const auto out = dir / (std::string("k") + k);
    const auto r = cli("explain --result " + dir.string() + " --k " + k + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    counts.push_back(Json::parse(slurp(out / "explain.json"))["explainable_rules"].size());
  }
  EXPECT_EQ(counts, (std::vector<std::size_t>{3, 3, 3, 4, 4}));
  const auto again = cli("explain --result " + dir.string() + " --k 20");
  const auto once = cli("explain --result " + dir.string() + " --k 20");
  EXPECT_EQ(again.out, once.out);
  EXPECT_NE(once.out.find("x"), std::string::npos);
}

TEST(Cli, ExplainMatchesTuneReport) {
  const auto dir = scratch("explain_same");
  ASSERT_EQ(cli(kTune + "--k 10 --out " + dir.string()).code, 0);
  ASSERT_EQ(cli("explain --result " + dir.string() + " --k 10 --out " + (dir / "re").string()).code,
            0);
  EXPECT_EQ(slurp(dir / "explain.json"), slurp(dir / "re" / "explain.json"));
}
