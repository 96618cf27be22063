#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "siren/attribution.hpp"
#include "siren/bench.hpp"
#include "siren/fcm.hpp"
#include "siren/io.hpp"
#include "siren/parallel.hpp"
#include "siren/score.hpp"

namespace fs = std::filesystem;
using namespace siren;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("siren_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(SIREN_RCA_BIN) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateRoundTripsAndIsDeterministic) {
  ASSERT_EQ(run("generate --suite supplychain --seed 4 --out " + path("a")).code, 0);
  ASSERT_EQ(run("generate --suite supplychain --seed 4 --out " + path("b")).code, 0);
  for (const char* f : {"graph.json", "normal_data.csv", "outlier.json", "ground_truth.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  ExperimentConfig ec;
  ec.seed = 4;
  BenchCase bc = generate_case(Suite::kSupplyChain, ec, derive_seed(4, "generate"));
  EXPECT_EQ(dag_from_json(read_json_file(dir_ / "a" / "graph.json")), bc.dag());
  EXPECT_EQ(read_data_csv(dir_ / "a" / "normal_data.csv"), bc.normal_data);
  auto truth = ground_truth_from_json(read_json_file(dir_ / "a" / "ground_truth.json"));
  EXPECT_EQ(truth.root_causes, bc.truth.root_causes);
}

TEST_F(Cli, UnwritableOutputNamesPath) {
  std::ofstream(path("blocker")) << "x";
  Outcome r = run("generate --suite supplychain --out " + path("blocker") + "/sub");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("blocker"), std::string::npos) << r.err;
}

TEST_F(Cli, NaiveNeedsNoScoreModels) {
  ASSERT_EQ(run("generate --suite supplychain --seed 1 --out " + path("case")).code, 0);
  ASSERT_EQ(run("fit --in " + path("case") + " --kind linear --skip-scores --out " + path("m"))
                .code,
            0);
  const std::string common =
      " --model " + path("m/model.json") + " --outlier " + path("case/outlier.json");
  Outcome naive = run("attribute --method naive --out " + path("r") + common);
  EXPECT_EQ(naive.code, 0) << naive.err;
  EXPECT_NE(naive.out.find("rank"), std::string::npos);
  auto res = attribution_from_json(read_json_file(dir_ / "r" / "attribution.json"));
  EXPECT_EQ(res.method, "naive");
  EXPECT_EQ(res.ranking.size(), 6u);

  Outcome siren = run("attribute --method siren --out " + path("r2") + common);
  EXPECT_EQ(siren.code, 1);
  EXPECT_NE(siren.err.find("score"), std::string::npos) << siren.err;

  Outcome bogus = run("attribute --method magic --out " + path("r3") + common);
  EXPECT_EQ(bogus.code, 1);
  EXPECT_NE(bogus.err.find("traversal"), std::string::npos) << bogus.err;
}

TEST_F(Cli, CircaRejectsNonLinearBundle) {
  ASSERT_EQ(run("generate --suite supplychain --seed 2 --out " + path("case")).code, 0);
  ASSERT_EQ(run("fit --in " + path("case") +
                " --kind anm --epochs 2 --skip-scores --out " + path("m"))
                .code,
            0);
  Outcome r = run("attribute --method circa --model " + path("m/model.json") + " --outlier " +
              path("case/outlier.json") + " --out " + path("r"));
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, FitThenAttributeMatchesInMemory) {
  ASSERT_EQ(run("generate --suite supplychain --seed 3 --out " + path("case")).code, 0);
  ASSERT_EQ(run("fit --in " + path("case") + " --kind linear --epochs 3 --seed 8 --out " +
                path("m"))
                .code,
            0);
  const std::string args = "attribute --method siren --seed 8 --m 2 --model " +
                           path("m/model.json") + " --outlier " + path("case/outlier.json");
  ASSERT_EQ(run(args + " --out " + path("r1")).code, 0);
  ASSERT_EQ(run(args + " --out " + path("r2")).code, 0);
  EXPECT_EQ(slurp(dir_ / "r1" / "attribution.json"), slurp(dir_ / "r2" / "attribution.json"));

  const Dag dag = dag_from_json(read_json_file(dir_ / "case" / "graph.json"));
  const Eigen::MatrixXd data = read_data_csv(dir_ / "case" / "normal_data.csv");
  FcmFitConfig fit;
  fit.seed = derive_seed(8, "fit");
  fit.mean.epochs = 3;
  FittedFcm fcm = fit_fcm(dag, data, MechanismKind::kLinear, fit);
  ScoreTrainConfig sc;
  sc.seed = derive_seed(8, "score");
  sc.epochs = 3;
  ScoreSet scores = train_score_set(fcm, data, NoiseSchedule(), sc);
  auto x = read_json_file(dir_ / "case" / "outlier.json").at("x").get<std::vector<double>>();
  SirenConfig cfg;
  cfg.seed = derive_seed(8, "siren");
  cfg.m = 2;
  auto direct = siren_attribute(fcm, scores, x, dag.leaf(), cfg);
  auto loaded = attribution_from_json(read_json_file(dir_ / "r1" / "attribution.json"));
  EXPECT_EQ(loaded.xi, direct.xi);
  EXPECT_EQ(loaded.ranking, direct.ranking);
}

TEST_F(Cli, MalformedAndIncompleteCsv) {
  ASSERT_EQ(run("generate --suite supplychain --seed 1 --out " + path("case")).code, 0);
  const fs::path csv = dir_ / "case" / "normal_data.csv";
  std::string text = slurp(csv);
  std::ofstream(csv) << text.substr(0, text.find('\n') + 1) << "1.0,abc,2,3,4,5\n";
  Outcome bad = run("fit --in " + path("case") + " --kind linear --skip-scores --out " + path("m"));
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;

  std::ofstream(csv) << "n0,n1,n2,n3,n5\n1,2,3,4,5\n";
  Outcome missing = run("fit --in " + path("case") + " --kind linear --skip-scores --out " + path("m"));
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("n4"), std::string::npos) << missing.err;
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(path("cfg.json")) << R"({"suite": "supplychain", "seed": 5, "out": ")"
                                  << path("from_cfg") << "\"}";
  ASSERT_EQ(run("generate --config " + path("cfg.json")).code, 0);
  ASSERT_EQ(run("generate --config " + path("cfg.json") + " --out " + path("flag")).code, 0);
  EXPECT_EQ(slurp(dir_ / "from_cfg" / "normal_data.csv"), slurp(dir_ / "flag" / "normal_data.csv"));
  std::ofstream(path("bad.json")) << R"({"colour": 1})";
  EXPECT_EQ(run("generate --config " + path("bad.json")).code, 1);
}

TEST_F(Cli, BenchSmokePreset) {
  const auto start = std::chrono::steady_clock::now();
  Outcome r = run("bench --preset smoke --seed 2 --out " + path("a"));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(secs, 60.0);
  const std::string csv = slurp(dir_ / "a" / "ndcg.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,naive_mean,naive_std,traversal_mean,traversal_std");
  ASSERT_EQ(run("bench --preset smoke --seed 2 --out " + path("b")).code, 0);
  for (const char* f : {"report.json", "ndcg.csv", "rankings.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(Cli, UsageErrors) {
  Outcome unknown = run("bench --preset smoke --methods naive,oracle --out " + path("a"));
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("siren, naive, traversal"), std::string::npos) << unknown.err;
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("bench --suite mars --out " + path("b")).code, 1);
}
