#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "lcgmm/io.hpp"
#include "lcgmm/metrics.hpp"
#include "lcgmm/synth.hpp"

using namespace lcgmm;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lcgmm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    model_ = path("model.xyz");
    io::write_xyz(synth::blade_model(400, 3), model_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "lcgmm");
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  std::string slurp(const std::string& p) const {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::string model_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, RegisterSelfGivesNearIdentity) {
  ASSERT_EQ(run({"register", "--scanned", model_, "--model", model_, "--out-transform", path("t.txt"),
                 "--report", path("r.csv"), "--max-iters", "30"}),
            cli::kOk)
      << err_.str();
  // lambda > 0 biases the fixed point slightly away from the identity
  const auto t = io::read_transform(path("t.txt"));
  EXPECT_LT((t.rotation - Eigen::Matrix3d::Identity()).norm(), 0.02);
  EXPECT_LT(t.translation.norm(), 1.0);
  const auto rows = io::read_results(path("r.csv"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].method, "lcgmm");
  EXPECT_NE(out_.str().find("iterations"), std::string::npos);
}

TEST_F(CliTest, RegisterSelfWithoutRegularizerIsExact) {
  ASSERT_EQ(run({"register", "--scanned", model_, "--model", model_, "--lambda", "0", "--omega", "0",
                 "--out-transform", path("t.txt")}),
            cli::kOk)
      << err_.str();
  const auto t = io::read_transform(path("t.txt"));
  EXPECT_LT((t.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-6);
  EXPECT_LT(t.translation.norm(), 1e-5);
}

TEST_F(CliTest, RegisterIcp) {
  EXPECT_EQ(run({"register", "--scanned", model_, "--model", model_, "--method", "icp", "--out-transform",
                 path("t.txt")}),
            cli::kOk)
      << err_.str();
}

TEST_F(CliTest, MissingFileIsInputError) {
  const std::string missing = path("nope.xyz");
  EXPECT_EQ(run({"register", "--scanned", missing, "--model", model_, "--out-transform", path("t.txt")}),
            cli::kInputError);
  EXPECT_NE(err_.str().find(missing), std::string::npos) << err_.str();
  EXPECT_EQ(run({"register", "--bogus"}), cli::kInputError);
  EXPECT_EQ(run({"register", "--scanned", model_, "--model", model_, "--method", "cpd", "--out-transform",
                 path("t.txt")}),
            cli::kInputError);
}

TEST_F(CliTest, FullOutlierWeightIsNumericalError) {
  EXPECT_EQ(run({"register", "--scanned", model_, "--model", model_, "--omega", "1.0", "--out-transform",
                 path("t.txt")}),
            cli::kNumericalError);
  EXPECT_NE(err_.str().find("collapse"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(path("t.txt")));
}

TEST_F(CliTest, SynthCleanIsSubsampleWithIdentity) {
  ASSERT_EQ(run({"synth", "--model", model_, "--n", "100", "--noise", "0", "--outliers", "0", "--angle-range",
                 "0", "--trans-range", "0", "--seed", "5", "--out-scanned", path("s.xyz"), "--out-gt",
                 path("gt.txt")}),
            cli::kOk)
      << err_.str();
  const auto gt = io::read_transform(path("gt.txt"));
  EXPECT_TRUE(gt.rotation.isIdentity(0));
  EXPECT_TRUE(gt.translation.isZero(0));
  const PointCloud s = io::read_xyz(path("s.xyz"));
  const PointCloud m = io::read_xyz(model_);
  ASSERT_EQ(s.rows(), 100);
  for (Index i = 0; i < s.rows(); ++i) {
    bool found = false;
    for (Index j = 0; j < m.rows() && !found; ++j) found = s.row(i) == m.row(j);
    EXPECT_TRUE(found) << i;
  }
}

TEST_F(CliTest, SynthCountsAndDeterminism) {
  io::write_xyz(synth::blade_model(3000, 1), path("big.xyz"));
  const std::vector<std::string> args{"synth",       "--model",         path("big.xyz"), "--n", "3000",
                                      "--outliers",  "0.1",             "--noise",       "4",   "--seed",
                                      "9",           "--out-scanned",   path("a.xyz"),   "--out-gt",
                                      path("a.txt")};
  ASSERT_EQ(run(args), cli::kOk) << err_.str();
  EXPECT_EQ(io::read_xyz(path("a.xyz")).rows(), 3300);
  auto again = args;
  again[12] = path("b.xyz");
  again[14] = path("b.txt");
  ASSERT_EQ(run(again), cli::kOk);
  EXPECT_EQ(slurp(path("a.xyz")), slurp(path("b.xyz")));
  EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
  EXPECT_EQ(run({"synth", "--model", model_, "--n", "401", "--out-scanned", path("c.xyz"), "--out-gt",
                 path("c.txt")}),
            cli::kInputError);
}

TEST_F(CliTest, EvalZerosAndHalfTurn) {
  RigidTransformd gt;
  gt.translation = Eigen::Vector3d(1, 2, 3);
  io::write_transform(gt, path("gt.txt"));
  ASSERT_EQ(run({"eval", "--model", model_, "--gt", path("gt.txt"), "--est", path("gt.txt"), "--csv"}), cli::kOk);
  EXPECT_EQ(out_.str(), "0,0,0,0\n");

  RigidTransformd est = gt;
  est.rotation = Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  io::write_transform(est, path("est.txt"));
  ASSERT_EQ(run({"eval", "--model", model_, "--gt", path("gt.txt"), "--est", path("est.txt"), "--csv"}), cli::kOk);
  std::stringstream ss(out_.str());
  std::vector<double> v;
  for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
  ASSERT_EQ(v.size(), 4u);
  EXPECT_NEAR(v[2], std::sqrt(8.0), 1e-12);

  // self-consistency with the library on the same files
  const PointCloud y = io::read_xyz(model_);
  const auto g = io::read_transform(path("gt.txt"));
  const auto e = io::read_transform(path("est.txt"));
  EXPECT_NEAR(v[0], metrics::transform_rmse(y, g, e), 1e-12 * (1 + v[0]));
  EXPECT_NEAR(v[1], metrics::transform_rmse(y, g, e, metrics::RmseConvention::paper_literal), 1e-12);
  EXPECT_NEAR(v[3], 0.0, 1e-12);
}

TEST_F(CliTest, EvalCloudRmse) {
  io::write_transform(RigidTransformd::Identity(), path("id.txt"));
  ASSERT_EQ(run({"eval", "--model", model_, "--gt", path("id.txt"), "--est", path("id.txt"), "--scanned", model_,
                 "--csv"}),
            cli::kOk);
  EXPECT_EQ(out_.str(), "0,0,0,0,0\n");
  EXPECT_EQ(run({"eval", "--model", model_, "--gt", path("missing.txt"), "--est", path("id.txt")}),
            cli::kInputError);
}

TEST_F(CliTest, SweepRowCountsAndPairing) {
  const std::vector<std::string> small{"--set", "n_points=40", "--set", "model_points=60", "--set", "max_iters=3",
                                       "--set", "icp_max_iters=3"};
  auto lambda = std::vector<std::string>{"sweep", "--mode", "lambda", "--trials", "1", "--methods", "lcgmm",
                                         "--out", path("l.csv")};
  lambda.insert(lambda.end(), small.begin(), small.end());
  ASSERT_EQ(run(lambda), cli::kOk) << err_.str();
  EXPECT_EQ(io::read_results(path("l.csv")).size(), 6u);

  auto outl = std::vector<std::string>{"sweep", "--mode", "outliers", "--out", path("o.csv")};
  outl.insert(outl.end(), small.begin(), small.end());
  ASSERT_EQ(run(outl), cli::kOk) << err_.str();
  const auto rows = io::read_results(path("o.csv"));
  ASSERT_EQ(rows.size(), 96u);
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    EXPECT_EQ(rows[i].trial_id, rows[i + 1].trial_id);
    EXPECT_EQ(rows[i].method, "icp");
    EXPECT_EQ(rows[i + 1].method, "lcgmm");
    EXPECT_EQ(rows[i].n_points, rows[i + 1].n_points);
    EXPECT_EQ(rows[i].noise_sigma, rows[i + 1].noise_sigma);
    EXPECT_EQ(rows[i].outlier_ratio, rows[i + 1].outlier_ratio);
  }
}

TEST_F(CliTest, SweepConfigFileAndDeterminism) {
  {
    std::ofstream cfg(path("sweep.cfg"));
    cfg << "# small noise sweep\nmode = noise\ngrid = 2,5\ntrials = 2\nn_points = 40\n"
           "model_points = 60\nmax_iters = 4\nicp_max_iters = 4\nrecord_timing = false\n";
  }
  ASSERT_EQ(run({"sweep", "--config", path("sweep.cfg"), "--out", path("a.csv")}), cli::kOk) << err_.str();
  ASSERT_EQ(run({"sweep", "--config", path("sweep.cfg"), "--jobs", "3", "--out", path("b.csv")}), cli::kOk);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(io::read_results(path("a.csv")).size(), 8u);
  EXPECT_EQ(run({"sweep", "--config", path("sweep.cfg"), "--set", "colour=red", "--out", path("c.csv")}),
            cli::kInputError);
  EXPECT_EQ(run({"sweep", "--config", path("nope.cfg"), "--out", path("c.csv")}), cli::kInputError);
}
