#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hnorm/estimator.hpp"
#include "hnorm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(const std::string& args) {
  static int counter = 0;
  const fs::path err_file = fs::temp_directory_path() / ("hnorm_cli_err_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  const std::string cmd = std::string(HNORM_CLI_PATH) + " " + args + " 2>" + err_file.string();
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  fs::remove(err_file);
  return r;
}

std::string data(const std::string& name) { return std::string(HNORM_DATA_DIR) + "/" + name; }

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("hnorm_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  fs::path dir_;
};

using CliFiles = TempDir;

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("decide --mode sometimes --input " + data("uniform_noise.csv")).code, 2);
}

TEST(Cli, MissingInputExitsThree) {
  const CliRun r = run("fit --input /nonexistent/file.csv");
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, OddLossOrderRejected) {
  const CliRun r = run("fit --loss-order 3 --input " + data("uniform_noise.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("even"), std::string::npos);
}

TEST(Cli, LeastSquaresFitMatchesNormalEquations) {
  const auto table = hnorm::io::read_table(data("normal_noise.csv"));
  const auto d = hnorm::io::table_to_data(table, "y");
  const Eigen::VectorXd beta = (d.design().transpose() * d.design()).ldlt().solve(d.design().transpose() * d.response());
  const CliRun r = run("fit --loss-order 2 --input " + data("normal_noise.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["beta_hat"].size(), 2u);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(j["beta_hat"][i].get<double>(), beta[i], 1e-8);
  EXPECT_EQ(j["terms"][1], "x");
}

TEST(Cli, DecideFixtures) {
  const CliRun u = run("decide --mode test --input " + data("uniform_noise.csv"));
  ASSERT_EQ(u.code, 0) << u.err;
  EXPECT_EQ(json::parse(u.out)["verdict"], "prefer_l4");
  const CliRun n = run("decide --mode test --input " + data("normal_noise.csv"));
  ASSERT_EQ(n.code, 0) << n.err;
  const json j = json::parse(n.out);
  EXPECT_EQ(j["verdict"], "prefer_l2");
  EXPECT_EQ(j["mode"], "test");
}

TEST(Cli, DecideReportCarriesStatisticIntervalAndPseudoR2) {
  const CliRun r = run("decide --input " + data("uniform_noise.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  for (const char* key : {"v_hat", "t_stat", "s_squared", "confidence_interval", "verdict", "pseudo_r2"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_LT(j["confidence_interval"][0].get<double>(), j["confidence_interval"][1].get<double>());
  EXPECT_GT(j["pseudo_r2"]["l4"].get<double>(), j["pseudo_r2"]["l2"].get<double>());
  const CliRun text = run("decide --format text --input " + data("uniform_noise.csv"));
  ASSERT_EQ(text.code, 0);
  EXPECT_NE(text.out.find("test statistic T"), std::string::npos);
  EXPECT_NE(text.out.find("verdict prefer_l4"), std::string::npos);
}

TEST_F(CliFiles, ConstantResponseIsAnError) {
  std::string csv = "y,x\n";
  for (int i = 0; i < 20; ++i) csv += "3," + std::to_string(i) + "\n";
  const CliRun r = run("decide --input " + write("flat.csv", csv));
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliFiles, ResponseColumnAndDelimiter) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> e(0.0, 0.1);
  std::string csv = "x;y\n";
  for (int i = 0; i < 50; ++i) csv += std::to_string(i) + ";" + std::to_string(2.0 + 0.5 * i + e(rng)) + "\n";
  const CliRun r = run("fit --loss-order 2 --response-col y --input " + write("semi.csv", csv));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["beta_hat"][1].get<double>(), 0.5, 0.01);
  EXPECT_EQ(run("fit --response-col z --input " + write("semi2.csv", csv)).code, 3);
}

TEST(Cli, CriterionClosedForms) {
  const CliRun u = run("criterion uniform");
  ASSERT_EQ(u.code, 0) << u.err;
  EXPECT_NEAR(json::parse(u.out)["ratio"].get<double>(), 3.0 / 7.0, 1e-12);
  const CliRun rc = run("criterion raised_cosine b=2");
  ASSERT_EQ(rc.code, 0) << rc.err;
  EXPECT_NEAR(json::parse(rc.out)["ratio"].get<double>(), 0.8926, 5e-5);
  EXPECT_EQ(run("criterion beta a=-1 b=2").code, 2);
  EXPECT_EQ(run("criterion no_such_family").code, 2);
}

TEST(Cli, CriterionSweepChangesSignNearMixtureBoundary) {
  const CliRun r = run("criterion gaussian_mixture --sweep c=1.0..1.1 --steps 11");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "c,ratio");
  double prev_c = 0, prev_ratio = 0, crossing = NAN;
  bool first = true;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double c = std::stod(line.substr(0, comma)), ratio = std::stod(line.substr(comma + 1));
    if (!first && prev_ratio > 1.0 && ratio <= 1.0) crossing = 0.5 * (prev_c + c);
    prev_c = c;
    prev_ratio = ratio;
    first = false;
  }
  ASSERT_FALSE(std::isnan(crossing));
  EXPECT_NEAR(crossing, 1.058, 0.01);
}

TEST(Cli, CriterionFromData) {
  const CliRun r = run("criterion --from-data --input " + data("uniform_noise.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out)["ratio"].get<double>(), 3.0 / 7.0, 0.03);
}

TEST_F(CliFiles, SimulateRejectsZeroReplications) {
  const std::string cfg = write("zero.cfg", "experiment = risk\nnoise = normal_mixture\nsettings = 1,-1\nsample_sizes = 50\nreplications = 0\nseed = 1\n");
  EXPECT_EQ(run("simulate " + cfg).code, 2);
}

TEST_F(CliFiles, SimulateIsReproducibleForAFixedSeed) {
  const std::string cfg = write("small.cfg", "experiment = risk\nnoise = normal_mixture\nsettings = 2,-2 | 0,0\nsample_sizes = 50, 100\nreplications = 20\n");
  const CliRun a = run("simulate " + cfg + " --seed 99");
  const CliRun b = run("simulate " + cfg + " --seed 99 --threads 1");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(a.out.empty());
}

TEST_F(CliFiles, SimulateReportsADrawnSeed) {
  const std::string cfg = write("noseed.cfg", "experiment = rounding\nreplications = 5\n");
  const CliRun r = run("simulate " + cfg);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("seed "), std::string::npos);
}

TEST(Cli, BundledConfigsParse) {
  for (const auto& entry : fs::directory_iterator(HNORM_DATA_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(hnorm::io::read_simulation_config(entry.path().string())) << entry.path();
  }
}

TEST_F(CliFiles, OutFileMatchesStdout) {
  const std::string out = (dir_ / "report.json").string();
  const CliRun r = run("fit --input " + data("uniform_noise.csv") + " --out " + out);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(json::parse(ss.str()), json::parse(r.out));
}
