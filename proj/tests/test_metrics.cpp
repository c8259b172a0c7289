#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lcgmm/error.hpp"
#include "lcgmm/metrics.hpp"
#include "oracles.hpp"

using namespace lcgmm;
using namespace lcgmm::metrics;

namespace {

RigidTransformd shift(double dx) {
  RigidTransformd t;
  t.translation = Eigen::Vector3d(dx, 0, 0);
  return t;
}

}  // namespace

TEST(TransformRmse, Conventions) {
  PointCloud one(1, 3);
  one << 1, 2, 3;
  PointCloud four(4, 3);
  four << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  for (auto c : {RmseConvention::mean_then_sqrt, RmseConvention::paper_literal}) {
    EXPECT_EQ(transform_rmse(four, shift(3), shift(3), c), 0.0);
    EXPECT_DOUBLE_EQ(transform_rmse(one, shift(0), shift(2), c), 2.0);
  }
  EXPECT_DOUBLE_EQ(transform_rmse(four, shift(0), shift(2), RmseConvention::mean_then_sqrt), 2.0);
  EXPECT_DOUBLE_EQ(transform_rmse(four, shift(0), shift(2), RmseConvention::paper_literal), 1.0);
}

TEST(TransformRmse, InvariantToCommonLeftComposition) {
  std::mt19937_64 gen(1);
  const PointCloud y = oracle::random_cloud(gen, 50, -20, 20);
  const auto gt = oracle::random_transform(gen, 5), est = oracle::random_transform(gen, 5);
  const auto g = oracle::random_transform(gen, 30);
  EXPECT_NEAR(transform_rmse(y, gt, est), transform_rmse(y, g * gt, g * est), 1e-10);
}

TEST(TransformRmse, RankingAgreesAcrossConventions) {
  std::mt19937_64 gen(2);
  const PointCloud y = oracle::random_cloud(gen, 30, -20, 20);
  const auto gt = oracle::random_transform(gen, 5);
  for (int i = 0; i < 50; ++i) {
    const auto a = oracle::random_transform(gen, 5), b = oracle::random_transform(gen, 5);
    const bool m = transform_rmse(y, gt, a) < transform_rmse(y, gt, b);
    const bool p = transform_rmse(y, gt, a, RmseConvention::paper_literal) <
                   transform_rmse(y, gt, b, RmseConvention::paper_literal);
    EXPECT_EQ(m, p);
  }
}

TEST(RotationError, Examples) {
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  EXPECT_EQ(rotation_error(id, id), 0.0);
  const Eigen::Matrix3d half = Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  EXPECT_NEAR(rotation_error(id, half), std::sqrt(8.0), 1e-12);
  std::mt19937_64 gen(3);
  const Eigen::Matrix3d a = oracle::random_rotation(gen), b = oracle::random_rotation(gen);
  double s = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  EXPECT_NEAR(rotation_error(a, b), std::sqrt(s), 1e-12);
  EXPECT_EQ(rotation_error(a, b), rotation_error(b, a));
}

TEST(TranslationError, Examples) {
  EXPECT_EQ(translation_error(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)), 0.0);
  EXPECT_DOUBLE_EQ(translation_error(Eigen::Vector3d::Zero(), Eigen::Vector3d(3, 4, 0)), 5.0);
}

TEST(Conventions, NamesRoundTrip) {
  for (auto c : {RmseConvention::mean_then_sqrt, RmseConvention::paper_literal})
    EXPECT_EQ(parse_convention(to_string(c)), c);
  EXPECT_THROW(parse_convention("median"), InputError);
}

TEST(CloudRmse, Examples) {
  std::mt19937_64 gen(4);
  const PointCloud m = oracle::random_cloud(gen, 30, -5, 5);
  EXPECT_EQ(cloud_rmse(m, m, 10), 0.0);
  PointCloud model(2, 3), scan(1, 3);
  model << 0, 0, 0, 100, 0, 0;
  scan << 0, 3, 0;
  EXPECT_DOUBLE_EQ(cloud_rmse(scan, model, 10), 3.0);
  EXPECT_THROW(cloud_rmse(scan, model, 1), NumericalError);
}

TEST(CloudRmse, MatchesBruteForceAndShrinksWithThreshold) {
  std::mt19937_64 gen(5);
  const PointCloud model = oracle::random_cloud(gen, 400, -10, 10);
  const PointCloud scan = oracle::random_cloud(gen, 300, -14, 14);
  const auto brute = [&](double thr) {
    double s = 0;
    int kept = 0;
    for (Index i = 0; i < scan.rows(); ++i) {
      double best = INFINITY;
      for (Index j = 0; j < model.rows(); ++j) best = std::min(best, (scan.row(i) - model.row(j)).squaredNorm());
      if (best <= thr * thr) {
        s += best;
        ++kept;
      }
    }
    return std::sqrt(s / kept);
  };
  double prev = INFINITY;
  for (double thr : {10.0, 3.0, 2.0, 1.5, 1.0}) {
    const double v = cloud_rmse(scan, model, thr);
    EXPECT_NEAR(v, brute(thr), 1e-12);
    EXPECT_LE(v, prev);
    prev = v;
  }
}
