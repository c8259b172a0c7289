#include "lcgmm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace lcgmm::synth {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InputError("Rng::below: empty range");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return v % n;
}

std::uint64_t mix64(std::uint64_t v) {
  v += 0x9E3779B97F4A7C15ULL;
  v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ULL;
  v = (v ^ (v >> 27)) * 0x94D049BB133111EBULL;
  return v ^ (v >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(base) ^ a) ^ b);
}

void CorruptionSpec::validate() const {
  if (n_points < 1) throw InputError("n_points must be >= 1");
  if (!(noise_sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) throw InputError("outlier ratio must lie in [0, 1)");
  if (!(angle_range_deg >= 0.0) || !(trans_range >= 0.0)) throw InputError("ranges must be >= 0");
}

PointCloud subsample(const PointCloud& cloud, Index n, std::uint64_t seed) {
  if (n < 0 || n > cloud.rows()) {
    throw InputError("subsample: requested " + std::to_string(n) + " of " +
                     std::to_string(cloud.rows()) + " points");
  }
  std::vector<Index> idx(static_cast<std::size_t>(cloud.rows()));
  for (Index i = 0; i < cloud.rows(); ++i) idx[i] = i;
  Rng rng(seed);
  // partial Fisher-Yates
  for (Index i = 0; i < n; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cloud.rows() - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  PointCloud out(n, 3);
  for (Index i = 0; i < n; ++i) out.row(i) = cloud.row(idx[i]);
  return out;
}

RigidTransformd random_rigid(const CorruptionSpec& spec) {
  Rng rng(spec.seed);
  const double range = spec.angle_range_deg * std::numbers::pi / 180.0;
  const double ax = rng.uniform(-range, range);
  const double ay = rng.uniform(-range, range);
  const double az = rng.uniform(-range, range);
  RigidTransformd t;
  t.rotation = (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  for (int a = 0; a < 3; ++a) t.translation(a) = rng.uniform(-spec.trans_range, spec.trans_range);
  return t;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
  PointCloud out = cloud;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (Index i = 0; i < out.rows(); ++i) {
    for (int a = 0; a < 3; ++a) out(i, a) += sigma * rng.normal();
  }
  return out;
}

PointCloud add_outliers(const PointCloud& cloud, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw InputError("outlier ratio must lie in [0, 1)");
  const auto extra = static_cast<Index>(std::llround(ratio * static_cast<double>(cloud.rows())));
  if (extra == 0 || cloud.rows() == 0) return cloud;
  const Eigen::RowVector3d lo = cloud.colwise().minCoeff();
  const Eigen::RowVector3d hi = cloud.colwise().maxCoeff();
  const Eigen::RowVector3d pad = 0.05 * (hi - lo);
  PointCloud out(cloud.rows() + extra, 3);
  out.topRows(cloud.rows()) = cloud;
  Rng rng(seed);
  for (Index i = cloud.rows(); i < out.rows(); ++i) {
    for (int a = 0; a < 3; ++a) out(i, a) = rng.uniform(lo(a) - pad(a), hi(a) + pad(a));
  }
  return out;
}

PointCloud blade_model(Index n_points, std::uint64_t seed) {
  if (n_points < 1) throw InputError("blade_model: n_points must be >= 1");
  constexpr double kSpan = 150.0;
  constexpr double kRootChord = 60.0;
  constexpr double kTipChord = 38.0;
  constexpr double kThickness = 0.12;
  constexpr double kCamber = 0.06;
  constexpr double kTwist = 35.0 * std::numbers::pi / 180.0;
  Rng rng(seed);
  PointCloud out(n_points, 3);
  for (Index i = 0; i < n_points; ++i) {
    const double v = rng.uniform();
    // arc parameter around the section, denser near the edges
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    const double u = 0.5 * (1.0 - std::cos(theta));
    const double side = theta < std::numbers::pi ? 1.0 : -1.0;
    const double half_thick = 5.0 * kThickness *
        (0.2969 * std::sqrt(u) - 0.1260 * u - 0.3516 * u * u + 0.2843 * u * u * u - 0.1015 * u * u * u * u);
    const double camber = u < 0.4 ? kCamber / 0.16 * (0.8 * u - u * u)
                                  : kCamber / 0.36 * (0.2 + 0.8 * u - u * u);
    const double chord = kRootChord + (kTipChord - kRootChord) * v;
    const double cx = (u - 0.3) * chord;
    const double cy = (camber + side * half_thick) * chord;
    const double twist = kTwist * v;
    const double c = std::cos(twist), s = std::sin(twist);
    out(i, 0) = c * cx - s * cy + 6.0 * v * v;
    out(i, 1) = s * cx + c * cy;
    out(i, 2) = kSpan * v;
  }
  return out;
}

Trial make_trial(const PointCloud& model, const CorruptionSpec& spec) {
  spec.validate();
  PointCloud sample = subsample(model, spec.n_points, derive_seed(spec.seed, 1));
  CorruptionSpec motion = spec;
  motion.seed = derive_seed(spec.seed, 2);
  Trial trial;
  trial.ground_truth = random_rigid(motion);
  PointCloud moved = apply_transform(sample, trial.ground_truth);
  moved = add_gaussian_noise(moved, spec.noise_sigma, derive_seed(spec.seed, 3));
  trial.scanned = add_outliers(moved, spec.outlier_ratio, derive_seed(spec.seed, 4));
  return trial;
}

}  // namespace lcgmm::synth
