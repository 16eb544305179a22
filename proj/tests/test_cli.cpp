#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "test_support.hpp"

namespace sdr {
namespace {

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "sdr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream os;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), os);
  if (out) *out = os.str();
  return code;
}

std::string write_config(const test::TempDir& dir, const std::string& body, const std::string& name = "cfg.json") {
  const auto path = dir / name;
  std::ofstream(path) << body;
  return path.string();
}

const char* kSmallP3 = R"({"problem":{"id":"p3_dirichlet"},"network":{"layer_sizes":[4,8,8,1]},
  "train":{"iterations":30,"batch_size":16,"seed":3},"eval":{"every":10,"samples":1000}})";

std::vector<std::vector<double>> parse_csv(const std::string& text, bool header) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  if (header) std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

TEST(Cli, GradcheckPassesOnP3) {
  test::TempDir dir("cli");
  std::string out;
  EXPECT_EQ(run_cli({"gradcheck", "--config", write_config(dir, kSmallP3)}, &out), 0) << out;
  EXPECT_NE(out.find("PASS"), std::string::npos);
}

TEST(Cli, GradcheckCorruptedFails) {
  test::TempDir dir("cli");
  EXPECT_EQ(run_cli({"gradcheck", "--config", write_config(dir, kSmallP3), "--corrupt"}), 1);
}

TEST(Cli, GradcheckMissingConfigIsUsageError) { EXPECT_EQ(run_cli({"gradcheck"}), 2); }

TEST(Cli, UnknownSubcommandOrFlag) {
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"eval", "--checkpoint", "x.json", "--bogus"}), 2);
  EXPECT_EQ(run_cli({}), 2);
}

TEST(Cli, ErrorClassesHaveDistinctCodes) {
  test::TempDir dir("cli");
  // Unreadable config.
  EXPECT_EQ(run_cli({"train", "--config", (dir / "missing.json").string(), "--out", (dir / "r").string()}), 3);
  // Malformed config content.
  EXPECT_EQ(run_cli({"train", "--config", write_config(dir, "{", "bad.json"), "--out", (dir / "r").string()}), 4);
  // Missing checkpoint.
  EXPECT_EQ(run_cli({"eval", "--checkpoint", (dir / "nope.json").string()}), 3);
  // Malformed point.
  const auto ck = write_config(dir, R"({"problem_id":"p3_dirichlet","surrogate":"exact"})", "exact.json");
  EXPECT_EQ(run_cli({"density", "--checkpoint", ck, "--point", "0.25;0.25", "--samples", "100"}), 2);
  EXPECT_EQ(run_cli({"density", "--checkpoint", ck, "--point", "0.25", "--samples", "100"}), 2);
}

TEST(Cli, TrainWritesRunDirectory) {
  test::TempDir dir("cli");
  const auto run = dir / "run";
  std::string out;
  ASSERT_EQ(run_cli({"train", "--config", write_config(dir, kSmallP3), "--out", run.string()}, &out), 0);
  for (const char* f : {"checkpoint.json", "loss_history.csv", "manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(run / f)) << f;
  const auto manifest = nlohmann::json::parse(read_text(run / "manifest.json"));
  EXPECT_EQ(manifest["status"], "completed");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["format_version"], 1);
  // The snapshot reproduces the run config exactly.
  const TrainConfig snap = config_from_json(manifest["config"]);
  EXPECT_EQ(config_to_json(snap), config_to_json(load_config(dir / "cfg.json")));
  const std::string csv = read_text(run / "loss_history.csv");
  EXPECT_EQ(csv.rfind("iteration,loss,lr,rel_l2_error\n", 0), 0u);
  // Rerunning from the snapshot is bit-identical.
  std::ofstream(dir / "snap.json") << manifest["config"].dump();
  ASSERT_EQ(run_cli({"train", "--config", (dir / "snap.json").string(), "--out", (dir / "run2").string()}), 0);
  EXPECT_EQ(read_text(run / "checkpoint.json"), read_text(dir / "run2" / "checkpoint.json"));
  EXPECT_EQ(csv, read_text(dir / "run2" / "loss_history.csv"));
}

TEST(Cli, SeedOverride) {
  test::TempDir dir("cli");
  const auto cfg = write_config(dir, kSmallP3);
  ASSERT_EQ(run_cli({"train", "--config", cfg, "--out", (dir / "a").string(), "--seed", "5"}), 0);
  EXPECT_EQ(load_checkpoint(dir / "a" / "checkpoint.json").seed, 5u);
}

TEST(Cli, EvalOnExactCheckpointIsZero) {
  test::TempDir dir("cli");
  const auto ck = write_config(dir, R"({"problem_id":"p4_langevin","problem_dim":4,"surrogate":"exact"})", "e.json");
  ASSERT_EQ(run_cli({"eval", "--checkpoint", ck, "--samples", "2000", "--out", (dir / "report.json").string()}), 0);
  const auto report = nlohmann::json::parse(read_text(dir / "report.json"));
  EXPECT_EQ(report["rel_l2_error"], 0.0);
  EXPECT_EQ(report["n_samples"], 2000);
}

TEST(Cli, SampleSphere) {
  std::string out;
  ASSERT_EQ(run_cli({"sample", "--sampler", "sphere", "--dim", "10", "-n", "3"}, &out), 0);
  const auto rows = parse_csv(out, false);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 10u);
    double s = 0.0;
    for (double v : r) s += v * v;
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
  }
  EXPECT_EQ(run_cli({"sample", "--sampler", "cube", "--dim", "2", "-n", "3"}), 2);
}

TEST(Cli, DensityAndJointExports) {
  test::TempDir dir("cli");
  const auto ck = write_config(dir, R"({"problem_id":"p3_dirichlet","surrogate":"exact"})", "e.json");
  ASSERT_EQ(run_cli({"density", "--checkpoint", ck, "--point", "0.25,0.25", "--samples", "5000", "--grid", "64",
                     "--out", (dir / "pdf.csv").string()}),
            0);
  const std::string pdf = read_text(dir / "pdf.csv");
  EXPECT_EQ(pdf.rfind("u,density,exact_density\n", 0), 0u);
  const auto rows = parse_csv(pdf, true);
  ASSERT_EQ(rows.size(), 64u);
  Eigen::VectorXd u(64), f(64);
  for (int i = 0; i < 64; ++i) {
    u(i) = rows[i][0];
    f(i) = rows[i][1];
    EXPECT_GE(f(i), 0.0);
    EXPECT_EQ(rows[i][1], rows[i][2]);  // exact surrogate: learned == reference
  }
  EXPECT_NEAR(trapezoid(u, f), 1.0, 0.05);

  ASSERT_EQ(run_cli({"joint", "--checkpoint", ck, "--p1", "0.25,0.25", "--p2", "0.5,0.5", "--bins", "16", "--samples",
                     "5000", "--out", (dir / "joint.csv").string()}),
            0);
  const auto joint = parse_csv(read_text(dir / "joint.csv"), true);
  ASSERT_EQ(joint.size(), 256u);
  double mass = 0.0;
  for (const auto& r : joint) mass += r[2];
  EXPECT_NEAR(mass, 1.0, 1e-12);
}

TEST(Cli, ResidualOnExactCheckpoint) {
  test::TempDir dir("cli");
  const auto ck = write_config(dir, R"({"problem_id":"p3_dirichlet","surrogate":"exact"})", "e.json");
  std::string out;
  ASSERT_EQ(run_cli({"residual", "--checkpoint", ck, "--directions", "3", "--samples", "20000"}, &out), 0);
  const auto rows = parse_csv(out, true);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_LE(std::abs(r[3]), 3.0);
}

TEST(Cli, AbortedTrainingKeepsLastGoodCheckpoint) {
  test::TempDir dir("cli");
  // A huge learning rate on the Langevin problem drives the network to
  // overflow; the run must exit 1 and still leave a readable checkpoint.
  const auto cfg = write_config(dir, R"({"problem":{"id":"p4_langevin","dim":2},"network":{"layer_sizes":[3,8,1]},
    "train":{"iterations":200,"batch_size":8,"lr_initial":1e300,"seed":1}})");
  const int code = run_cli({"train", "--config", cfg, "--out", (dir / "r").string()});
  EXPECT_EQ(code, 1);
  const Checkpoint c = load_checkpoint(dir / "r" / "checkpoint.json");
  EXPECT_TRUE(c.params.weights[0].allFinite());
  EXPECT_EQ(nlohmann::json::parse(read_text(dir / "r" / "manifest.json"))["status"], "aborted");
}

}  // namespace
}  // namespace sdr
