#include "ecstfl/cli.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace ecstfl;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ecstfl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root = fs::temp_directory_path() / ("ecstfl_cli_" + std::string(info->name()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  std::string dir(const std::string& name) const { return (root / name).string(); }

  // A small dataset that still holds every class.
  std::string make_data(const std::string& name = "data", const std::string& seed = "3") {
    const Result r = run({"gen-data", "--n", "150", "--seed", seed, "--out", dir(name)});
    EXPECT_EQ(r.code, 0) << r.err;
    return dir(name);
  }

  fs::path root;
};

const std::vector<std::string> kQuick = {"--epochs", "3"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_F(Cli, GenDataWritesDatasetFoldsAndManifest) {
  const std::string data = make_data();
  for (const char* f : {"dataset.csv", "folds.csv", "dataset.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(fs::path(data) / f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(fs::path(data) / "manifest.json"));
  EXPECT_EQ(manifest["command"], "gen-data");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["outputs"].size(), 3u);
  EXPECT_EQ(manifest["outputs"][0]["sha256"], sha256_file(fs::path(data) / "dataset.csv"));
  const auto meta = nlohmann::json::parse(slurp(fs::path(data) / "dataset.json"));
  EXPECT_EQ(meta["n_clips"], 150);
}

TEST_F(Cli, GenDataIsDeterministic) {
  const std::string a = make_data("a", "9");
  const std::string b = make_data("b", "9");
  const std::string c = make_data("c", "10");
  EXPECT_EQ(sha256_file(fs::path(a) / "dataset.csv"), sha256_file(fs::path(b) / "dataset.csv"));
  EXPECT_EQ(sha256_file(fs::path(a) / "folds.csv"), sha256_file(fs::path(b) / "folds.csv"));
  EXPECT_NE(sha256_file(fs::path(a) / "dataset.csv"), sha256_file(fs::path(c) / "dataset.csv"));
}

TEST_F(Cli, TrainThenEvalOnRecordedFold) {
  const std::string data = make_data();
  Result r = run(concat({"train", "--data", data, "--fold", "2", "--out", dir("train")}, kQuick));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"checkpoint.json", "history.csv", "loss_trace.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(root / "train" / f)) << f;
  EXPECT_EQ(slurp(root / "train" / "history.csv").substr(0, 45), "epoch,lr,L_s,L_ecstfl,L_total,skipped_batches");

  r = run({"eval", "--data", data, "--checkpoint", dir("train") + "/checkpoint.json", "--out", dir("eval")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = nlohmann::json::parse(slurp(root / "eval" / "metrics.json"));
  EXPECT_EQ(metrics["folds"][0]["fold"], 2);
  EXPECT_TRUE(fs::exists(root / "eval" / "confusion.csv"));
  EXPECT_TRUE(fs::exists(root / "eval" / "projection.csv"));
}

TEST_F(Cli, EvalPoolsSeveralCheckpoints) {
  const std::string data = make_data();
  std::vector<std::string> args{"eval", "--data", data, "--out", dir("eval")};
  for (int f = 1; f <= 5; ++f) {
    const std::string out = dir("fold" + std::to_string(f));
    ASSERT_EQ(run(concat({"train", "--data", data, "--fold", std::to_string(f), "--out", out}, kQuick)).code, 0);
    args.insert(args.end(), {"--checkpoint", out + "/checkpoint.json"});
  }
  const Result r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = nlohmann::json::parse(slurp(root / "eval" / "metrics.json"));
  EXPECT_EQ(metrics["n_clips"], metrics["folds"][0]["n_test"].get<int>() + metrics["folds"][1]["n_test"].get<int>() +
                                    metrics["folds"][2]["n_test"].get<int>() + metrics["folds"][3]["n_test"].get<int>() +
                                    metrics["folds"][4]["n_test"].get<int>());
  EXPECT_TRUE(fs::exists(root / "eval" / "projection_fd5.csv"));
}

TEST_F(Cli, TrainWithLearningRateGrid) {
  const std::string data = make_data();
  const Result r = run(concat({"train", "--data", data, "--lr-grid", "0.1,0.01", "--out", dir("t")}, kQuick));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto gs = nlohmann::json::parse(slurp(root / "t" / "lr_grid.json"));
  EXPECT_EQ(gs["outcomes"].size(), 2u);
}

TEST_F(Cli, KappaCommand) {
  const std::string ann = (root / "ann.csv").string();
  std::ofstream(ann) << "clip_id,c1,c2,c3,c4,c5,c6,c7\na,10,0,0,0,0,0,0\nb,0,10,0,0,0,0,0\nc,7,3,0,0,0,0,0\n";
  Result r = run({"kappa", "--annotations", ann, "--out", dir("k")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto k = nlohmann::json::parse(slurp(root / "k" / "kappa.json"));
  EXPECT_EQ(k["n_items"], 3);
  EXPECT_EQ(slurp(root / "k" / "single_labels.csv"), "clip_id,label,label_name\na,1,happy\nb,2,sad\nc,1,happy\n");

  r = run({"kappa", "--annotations", ann, "--r", "10", "--out", dir("k10")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(root / "k10" / "single_labels.csv"), "clip_id,label,label_name\n");

  std::ofstream(ann) << "clip_id,c1,c2,c3,c4,c5,c6,c7\na,10,0,0,0,0,0,0\nb,10,0,0,0,0,0,0\n";
  r = run({"kappa", "--annotations", ann, "--out", dir("deg")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("undefined"), std::string::npos) << r.err;
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"gen-data", "--n", "3", "--out", dir("tiny")}).code, 1);
  EXPECT_EQ(run({"gen-data", "--noise", "-1", "--out", dir("neg")}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);

  const std::string data = make_data();
  fs::remove(fs::path(data) / "folds.csv");
  Result r = run({"train", "--data", data, "--out", dir("t")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fold file"), std::string::npos) << r.err;

  const std::string data2 = make_data("data2");
  EXPECT_EQ(run({"train", "--data", data2, "--loss", "triplet", "--out", dir("t2")}).code, 1);
  EXPECT_EQ(run({"train", "--data", data2, "--fold", "9", "--out", dir("t3")}).code, 1);
  r = run({"train", "--data", data2, "--lr", "1e300", "--epochs", "2", "--out", dir("t4")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("epoch"), std::string::npos) << r.err;
  std::ofstream(root / "bad.json") << "{not json";
  EXPECT_EQ(run({"eval", "--data", data2, "--checkpoint", (root / "bad.json").string(), "--out", dir("e")}).code, 1);
}

TEST_F(Cli, ConfigFileMirrorsFlagsAndFlagsWin) {
  const std::string data = make_data();
  const fs::path cfg = root / "run.toml";
  std::ofstream(cfg) << "[train]\nepochs = 2\nbatch = 30\nlambda = 5\n";
  Result r = run({"--config", cfg.string(), "train", "--data", data, "--lambda", "7", "--out", dir("t")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ck = nlohmann::json::parse(slurp(root / "t" / "checkpoint.json"));
  EXPECT_EQ(ck["config"]["epochs"], 2);
  EXPECT_EQ(ck["config"]["batch_size"], 30);
  EXPECT_EQ(ck["config"]["lambda"], 7.0);
}

TEST_F(Cli, SweepGridsAndCellFidelity) {
  const std::string data = make_data();
  Result r = run(concat({"sweep", "--data", data, "--axis", "lambda", "--out", dir("sl")}, kQuick));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = nlohmann::json::parse(slurp(root / "sl" / "summary.json"));
  std::vector<double> cells;
  for (const auto& c : summary["cells"]) cells.push_back(c["cell"].get<double>());
  EXPECT_EQ(cells, kLambdaGrid);

  r = run(concat({"sweep", "--data", data, "--axis", "batch", "--out", dir("sb")}, kQuick));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sb = nlohmann::json::parse(slurp(root / "sb" / "summary.json"));
  cells.clear();
  for (const auto& c : sb["cells"]) cells.push_back(c["cell"].get<double>());
  EXPECT_EQ(cells, kBatchGrid);

  r = run(concat({"train", "--data", data, "--lambda", "15", "--out", dir("solo")}, kQuick));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(root / "solo" / "checkpoint.json"), slurp(root / "sl" / "cell_15" / "checkpoint.json"));
  EXPECT_EQ(slurp(root / "solo" / "history.csv"), slurp(root / "sl" / "cell_15" / "history.csv"));

  EXPECT_EQ(run({"sweep", "--data", data, "--axis", "depth", "--out", dir("bad")}).code, 1);
}

TEST_F(Cli, ReportComparesModes) {
  const std::string data = make_data();
  const Result r =
      run(concat({"report", "--data", data, "--modes", "softmax,softmax+ecstfl", "--out", dir("rep")}, kQuick));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(root / "rep" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "mode,uar,war");
  EXPECT_NE(csv.find("softmax+ecstfl,"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "rep" / "confusion_softmax.csv"));
}
