#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lcgmm/geometry.hpp"
#include "lcgmm/spatial.hpp"

namespace lcgmm {

/// Gaussian mixture whose m-th component is centered at the transformed
/// model point R y_m + t, plus a uniform outlier component over volume V.
struct MixtureState {
  Eigen::VectorXd variances;    // sigma_m^2, mm^2
  double component_prior = 0;   // pi_m = (1 - omega) / M
  double outlier_weight = 0;    // omega = pi_{M+1}
  double volume = 1;            // V, mm^3

  Index components() const { return variances.size(); }
};

/// N x (M+1) responsibilities; the last column is the outlier component.
using PosteriorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct RegistrationConfig {
  double lambda = 0.5;
  double outlier_weight = 0.1;
  // lambda * degree should stay near 1; at k = 8 the neighbor term swamps
  // the data term for the lambda values of interest
  Index knn_k = 2;
  int max_iterations = 100;
  double convergence_tol = 1e-7;  // Frobenius(dR) + |dt|
  /// Lower bound on every sigma_m^2. Unset means 1e-9 * diag(X)^2, where
  /// diag is the bounding-box diagonal of the scanned cloud.
  std::optional<double> variance_floor;
  double posterior_truncation = 0.0;
  std::uint64_t seed = 0;  // carried into result rows; the solver is deterministic

  void validate() const;
};

enum class StopReason { max_iterations, transform_tolerance };

const char* to_string(StopReason r);

struct RegistrationReport {
  RigidTransformd transform;  // maps the model cloud into the scanned frame
  int iterations_run = 0;
  std::vector<double> objective_trace;      // Q after each iteration
  std::vector<double> gmm_objective_trace;  // the Q_GMM part of the same values
  Eigen::VectorXd final_variances;
  StopReason converged_by = StopReason::max_iterations;
  double wall_time = 0.0;  // seconds
  bool degenerate_rotation = false;
};

struct InitialGuess {
  MixtureState state;
  RigidTransformd transform;
};

/// Centroid-aligned identity rotation; every variance set to the mean
/// squared cross distance over 3NM after alignment, floored.
InitialGuess init_state(const PointCloud& x, const PointCloud& y, const RegistrationConfig& cfg);

/// Posterior responsibilities, evaluated in log space with a per-row max
/// shift. Entries below `truncation` are zeroed and rows renormalized.
PosteriorMatrix e_step(const PointCloud& x, const PointCloud& y, const RigidTransformd& t,
                       const MixtureState& state, double truncation = 0.0);

/// Closed-form symmetric KL divergence between the posteriors of scanned
/// points i and j.
double pairwise_divergence(Index i, Index j, const PosteriorMatrix& p, const PointCloud& x,
                           const PointCloud& y, const RigidTransformd& t, const MixtureState& state);

/// sum_i sum_j w_ij D_ij over ordered pairs, i.e. twice the sum over edges.
double local_consistency(const PosteriorMatrix& p, const NeighborGraph& graph, const PointCloud& x,
                         const PointCloud& y, const RigidTransformd& t, const MixtureState& state);

struct ObjectiveValue {
  double total = 0;  // Q = Q_GMM + lambda * Q_LC
  double gmm = 0;
  double local = 0;
};

ObjectiveValue objective(const PosteriorMatrix& p, const NeighborGraph& graph, const PointCloud& x,
                         const PointCloud& y, const RigidTransformd& t, const MixtureState& state,
                         double lambda);

struct WeightedCentroids {
  Eigen::Vector3d mu_x;
  Eigen::Vector3d mu_y;
};

/// Translation stationarity terms; t* = mu_x - R mu_y. Throws
/// PosteriorCollapse when no weight remains on the Gaussian components.
WeightedCentroids weighted_centroids(const PosteriorMatrix& p, const NeighborGraph& graph,
                                     const PointCloud& x, const PointCloud& y,
                                     const MixtureState& state, double lambda);

struct RotationUpdate {
  RigidTransformd transform;  // (R*, mu_x - R* mu_y)
  Eigen::Matrix3d cross_covariance;
  bool degenerate = false;
};

/// R* = argmax Tr(R H) with H = H1 + H2 built from centered coordinates.
/// Throws DegenerateRotation when H vanishes and M > 1.
RotationUpdate update_rotation(const PosteriorMatrix& p, const NeighborGraph& graph,
                               const PointCloud& x, const PointCloud& y, const MixtureState& state,
                               double lambda, const WeightedCentroids& mu, std::size_t iteration = 0);

/// Closed-form sigma_m^2 update at the new transform, clamped to `floor`.
/// Components with no responsibility keep `state.variances`.
Eigen::VectorXd update_variances(const PosteriorMatrix& p, const NeighborGraph& graph,
                                 const PointCloud& x, const PointCloud& y,
                                 const RigidTransformd& t_new, const MixtureState& state,
                                 double lambda, double floor);

/// Runs EM until max_iterations or the transform change drops below
/// convergence_tol. The kNN graph is built once on the scanned cloud.
RegistrationReport register_clouds(const PointCloud& x, const PointCloud& y,
                                   const RegistrationConfig& cfg);

}  // namespace lcgmm
