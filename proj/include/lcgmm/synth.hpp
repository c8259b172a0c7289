#pragma once

#include <cstdint>
#include <random>

#include "lcgmm/geometry.hpp"

namespace lcgmm::synth {

/// Portable random stream: std::mt19937_64 (its output sequence is fixed
/// by the standard) with hand-written distributions, because the standard
/// distributions differ between library implementations.
///   uniform():  (bits >> 11) * 2^-53, in [0, 1)
///   normal():   Box-Muller on two uniforms, both outputs used in order
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; the building block for every derived seed.
std::uint64_t mix64(std::uint64_t v);

/// Seed of an independent stream keyed by (base, a, b).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

struct CorruptionSpec {
  Index n_points = 3000;
  double noise_sigma = 0.0;       // mm
  double outlier_ratio = 0.0;     // appended points / n_points
  double angle_range_deg = 60.0;  // per axis, symmetric
  double trans_range = 10.0;      // mm per axis, symmetric
  std::uint64_t seed = 0;

  void validate() const;
};

/// n distinct points drawn uniformly without replacement, kept in their
/// original order.
PointCloud subsample(const PointCloud& cloud, Index n, std::uint64_t seed);

/// R = Rz(gamma) Ry(beta) Rx(alpha). alpha, beta, gamma, then tx, ty, tz
/// are drawn in that order, each uniform in its symmetric range.
RigidTransformd random_rigid(const CorruptionSpec& spec);

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

/// Appends round(ratio * n) points uniform in the 5%-padded bounding box.
PointCloud add_outliers(const PointCloud& cloud, double ratio, std::uint64_t seed);

/// Synthetic turbine-blade-like surface: a cambered, tapered airfoil
/// section swept 150 mm along z with 35 degrees of twist.
PointCloud blade_model(Index n_points, std::uint64_t seed);

struct Trial {
  PointCloud scanned;
  RigidTransformd ground_truth;  // maps the model into the scanned frame
};

/// subsample -> random_rigid -> noise -> outliers, every stage on its own
/// stream derived from spec.seed.
Trial make_trial(const PointCloud& model, const CorruptionSpec& spec);

}  // namespace lcgmm::synth
