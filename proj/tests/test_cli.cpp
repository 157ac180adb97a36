#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "fixtures.hpp"
#include "pipelines.hpp"
#include "rntraj/checkpoint.hpp"
#include "rntraj/io.hpp"
#include "rntraj/roadnet.hpp"

using namespace rntraj;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("rntraj_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("base.cfg",
          "# small run on the sample scene\n"
          "trajectories = " + fixtures::data_path("eth_sample.txt") + "\n"
          "output_dir = " + (dir_ / "out").string() + "\n"
          "grid = 4\n"
          "rn_epochs = 3\n"
          "local_epochs = 2\n"
          "rn_hidden_dim = 8\n"
          "rn_latent_dim = 4\n"
          "window_stride = 4\n"
          "eval_runs = 2\n"
          "seed = 7\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }
  fs::path out(const std::string& name) const { return dir_ / "out" / name; }

  void write(const std::string& name, const std::string& text) const { io::atomic_write_file(path(name), text); }

  CliRun run(std::vector<std::string> args) const {
    std::ostringstream o, e;
    const int code = cli::run_cli(args, o, e);
    return {code, o.str(), e.str()};
  }

  /// Runs `command` with the base config plus overrides and expects success.
  CliRun ok(const std::string& command, std::vector<std::string> extra = {}) const {
    std::vector<std::string> args{command, "-c", path("base.cfg").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    CliRun r = run(args);
    EXPECT_EQ(r.code, 0) << command << ": " << r.err;
    return r;
  }

  std::string read(const fs::path& p) const { return io::read_file(p); }

  std::vector<nlohmann::json> report_lines(const fs::path& p) const {
    std::istringstream in(read(p));
    std::string line;
    std::getline(in, line);
    std::vector<nlohmann::json> out;
    while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, BuildRoadnetWritesABoundedDeterministicNetwork) {
  CliRun r = ok("build-roadnet", {"-s", "grid=6"});
  EXPECT_NE(r.out.find("active nodes"), std::string::npos);
  const std::string first = read(out("roadnet.txt"));
  RoadNetworkGraph net = parse_road_network(first);
  EXPECT_EQ(net.grid.gr, 6);
  EXPECT_GE(net.n_active(), 1u);
  EXPECT_LE(net.n_active(), 36u);
  ok("build-roadnet", {"-s", "grid=6"});
  EXPECT_EQ(read(out("roadnet.txt")), first);
}

TEST_F(CliTest, MissingTrajectoryFileNamesThePath) {
  const std::string missing = path("nowhere.txt").string();
  CliRun r = run({"build-roadnet", "-c", path("base.cfg").string(), "-s", "trajectories=" + missing});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error:", 0), 0u);
  EXPECT_NE(r.err.find(missing), std::string::npos);
  EXPECT_FALSE(fs::exists(out("roadnet.txt")));
}

TEST_F(CliTest, SetOverridesTheConfigFile) {
  ok("build-roadnet", {"-s", "grid=3"});
  EXPECT_EQ(parse_road_network(read(out("roadnet.txt"))).grid.gr, 3);
  ok("build-roadnet");
  EXPECT_EQ(parse_road_network(read(out("roadnet.txt"))).grid.gr, 4);
}

TEST_F(CliTest, UnknownKeysAreRejected) {
  CliRun r = run({"build-roadnet", "-c", path("base.cfg").string(), "-s", "gird=4"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("gird"), std::string::npos);
  write("bad.cfg", "grid = 4\nspeed = 2\n");
  r = run({"build-roadnet", "-c", path("bad.cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommandFails) {
  CliRun r = run({"fly"});
  EXPECT_NE(r.code, 0);
}

TEST_F(CliTest, PretrainIsDeterministic) {
  ok("build-roadnet");
  CliRun r = ok("pretrain-rn");
  EXPECT_NE(r.out.find("final Huber loss"), std::string::npos);
  const std::string checkpoint = read(out("rn_checkpoint.txt"));
  const std::string report = read(out("rn_checkpoint.report.jsonl"));
  EXPECT_EQ(report_lines(out("rn_checkpoint.report.jsonl")).size(), 5u);
  ok("pretrain-rn");
  EXPECT_EQ(read(out("rn_checkpoint.txt")), checkpoint);
  EXPECT_EQ(read(out("rn_checkpoint.report.jsonl")), report);
}

TEST_F(CliTest, ZeroPretrainEpochsKeepsInitialization) {
  ok("build-roadnet");
  ok("pretrain-rn", {"-s", "rn_epochs=0"});
  const std::string untrained = read(out("rn_checkpoint.txt"));
  ok("pretrain-rn", {"-s", "rn_epochs=3", "-s", "rn_lr=0"});
  EXPECT_EQ(read(out("rn_checkpoint.txt")), untrained);
  ok("pretrain-rn");
  EXPECT_NE(read(out("rn_checkpoint.txt")), untrained);
}

TEST_F(CliTest, PretrainLossTrendsDownOnSyntheticLoops) {
  // Four walkers circling the same square loop, a quarter turn apart.
  std::string text;
  const double corners[4][2] = {{1.0, 1.0}, {5.0, 1.0}, {5.0, 5.0}, {1.0, 5.0}};
  for (int t = 0; t < 120; ++t) {
    for (int p = 0; p < 4; ++p) {
      const int side = (t / 3 + p) % 4;
      const double f = (t % 3) / 3.0;
      const auto& a = corners[side];
      const auto& b = corners[(side + 1) % 4];
      text += std::to_string(t * 10) + " " + std::to_string(p + 1) + " " + std::to_string(a[0] + f * (b[0] - a[0])) +
              " " + std::to_string(a[1] + f * (b[1] - a[1])) + "\n";
    }
  }
  write("loops.txt", text);
  const std::vector<std::string> sets{"-s", "trajectories=" + path("loops.txt").string(), "-s", "rn_epochs=50"};
  ok("build-roadnet", sets);
  ok("pretrain-rn", sets);
  auto lines = report_lines(out("rn_checkpoint.report.jsonl"));
  ASSERT_EQ(lines.size(), 52u);
  int decreasing = 0;
  for (std::size_t e = 1; e < 51; ++e) decreasing += lines[e]["loss"].get<double>() < lines[e - 1]["loss"].get<double>();
  EXPECT_GE(decreasing, 40);
}

TEST_F(CliTest, BaselineTrainingAndEvaluation) {
  CliRun r = ok("train");
  EXPECT_NE(r.out.find("training on"), std::string::npos);
  const std::string checkpoint = read(out("local_checkpoint.txt"));
  EXPECT_FALSE(load_local_checkpoint(checkpoint).fused);
  ok("train");
  EXPECT_EQ(read(out("local_checkpoint.txt")), checkpoint);

  r = ok("eval");
  EXPECT_NE(r.out.find("ADE "), std::string::npos);
  const std::string result = read(out("local_checkpoint.eval.json"));
  ok("eval");
  EXPECT_EQ(read(out("local_checkpoint.eval.json")), result);
  auto doc = nlohmann::json::parse(result.substr(result.find('\n') + 1));
  EXPECT_EQ(doc["runs"].get<int>(), 2);
  double seg = 0.0;
  for (double s : doc["segmented_ade"]) seg += s;
  EXPECT_NEAR(seg / 3.0, doc["ade"].get<double>(), 1e-12);
}

TEST_F(CliTest, FusedTrainingNeedsAGlobalCheckpoint) {
  ok("build-roadnet");
  CliRun r = run({"train", "--with-rn", "-c", path("base.cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("rn_checkpoint.txt"), std::string::npos);
  EXPECT_FALSE(fs::exists(out("local_checkpoint.txt")));
  EXPECT_FALSE(fs::exists(out("local_checkpoint.report.jsonl")));
}

TEST_F(CliTest, ZeroAlphaFusionStartsAtTheBaselineLoss) {
  ok("build-roadnet");
  ok("pretrain-rn");
  const std::vector<std::string> sets{"-s", "alpha_init=0", "-s", "lambda_huber=0"};
  std::vector<std::string> fused = sets;
  fused.insert(fused.begin(), "--with-rn");
  ok("train", fused);
  auto with_rn = report_lines(out("local_checkpoint.report.jsonl"));
  EXPECT_TRUE(load_local_checkpoint(read(out("local_checkpoint.txt"))).fused);
  ok("train", sets);
  auto baseline = report_lines(out("local_checkpoint.report.jsonl"));
  EXPECT_EQ(with_rn[0]["loss"].get<double>(), baseline[0]["loss"].get<double>());
  EXPECT_EQ(with_rn[0]["nll"].get<double>(), baseline[0]["nll"].get<double>());
}

TEST_F(CliTest, ResumeContinuesTheSameRun) {
  ok("train", {"-s", "local_epochs=3"});
  const std::string straight = read(out("local_checkpoint.txt"));
  ok("train", {"-s", "local_epochs=1"});
  ok("train", {"--resume", "-s", "local_epochs=3"});
  EXPECT_EQ(read(out("local_checkpoint.txt")), straight);
}

TEST_F(CliTest, ResumeRejectsMismatchedFusion) {
  ok("train");
  ok("build-roadnet");
  ok("pretrain-rn");
  CliRun r = run({"train", "--with-rn", "--resume", "-c", path("base.cfg").string()});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, ToyModelWithKnownOffsetPrintsAdeFive) {
  // Every pedestrian moves by (0.2, -0.1) per step; the toy model adds a
  // (3, 4) jump at the first predicted step only, then follows the motion.
  write("linear.txt", [] {
    std::string text;
    for (int t = 0; t < 60; ++t) {
      for (int p = 0; p < 3; ++p) {
        text += std::to_string(t) + " " + std::to_string(p + 1) + " " + std::to_string(p * 2.0 + 0.2 * t) + " " +
                std::to_string(10.0 - 0.1 * t) + "\n";
      }
    }
    return text;
  }());
  LocalModel model = fixtures::constant_step_model({0.2, -0.1});
  model.params().get("txp.b").data_mut()[0] = 1.0;
  auto head = model.params().get("head.w").data_mut();
  head[0] = 3.0;
  head[1] = 4.0;
  io::atomic_write_file(out("local_checkpoint.txt"), save_local_checkpoint(make_local_state(model, {}), false));
  CliRun r = ok("eval", {"-s", "trajectories=" + path("linear.txt").string()});
  EXPECT_NE(r.out.find("ADE 5.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("FDE 5.000000"), std::string::npos) << r.out;
}

TEST_F(CliTest, EmptyEvaluationSetFails) {
  ok("train");
  std::string text;
  for (int t = 0; t < 10; ++t) text += std::to_string(t) + " 1 " + std::to_string(0.1 * t) + " 0.5\n";
  write("short.txt", text);
  CliRun r = run({"eval", "-c", path("base.cfg").string(), "-s", "trajectories=" + path("short.txt").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error:", 0), 0u);
  EXPECT_FALSE(fs::exists(out("local_checkpoint.eval.json")));
}

TEST_F(CliTest, PredictWritesDeterministicTrajectories) {
  ok("train");
  ok("predict");
  const std::string first = read(out("local_checkpoint.predictions.csv"));
  EXPECT_EQ(first.rfind("# rntraj-predictions v1\n", 0), 0u);
  ok("predict");
  EXPECT_EQ(read(out("local_checkpoint.predictions.csv")), first);
}

TEST_F(CliTest, HeatmapsHaveOneGridPerHorizon) {
  ok("build-roadnet");
  ok("pretrain-rn");
  ok("export-heatmap");
  RoadNetworkGraph net = parse_road_network(read(out("roadnet.txt")));
  std::string first;
  for (int h : {1, 4, 8}) {
    const fs::path file = out("heatmap_h" + std::to_string(h) + ".csv");
    ASSERT_TRUE(fs::exists(file)) << file;
    std::istringstream in(read(file));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# rntraj-heatmap v1", 0), 0u);
    int row = 0;
    while (std::getline(in, line)) {
      std::vector<std::string> fields;
      std::stringstream ls(line);
      std::string f;
      while (std::getline(ls, f, ',')) fields.push_back(f);
      if (!line.empty() && line.back() == ',') fields.push_back("");
      ASSERT_EQ(fields.size(), 4u) << line;
      for (int col = 0; col < 4; ++col) {
        const bool active = net.node_active[static_cast<std::size_t>(net.grid.cell_id({col, row}))];
        EXPECT_EQ(fields[static_cast<std::size_t>(col)].empty(), !active) << "row " << row << " col " << col;
      }
      ++row;
    }
    EXPECT_EQ(row, 4);
    if (h == 1) first = read(file);
  }
  ok("export-heatmap");
  EXPECT_EQ(read(out("heatmap_h1.csv")), first);
}

TEST_F(CliTest, HeatmapEndStepIsChecked) {
  ok("build-roadnet");
  ok("pretrain-rn");
  CliRun r = run({"export-heatmap", "-c", path("base.cfg").string(), "--end-step", "0"});
  EXPECT_EQ(r.code, 1);
  ok("export-heatmap", {"--end-step", "20"});
}
