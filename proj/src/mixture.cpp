#include "lcgmm/mixture.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace lcgmm {

void RegistrationConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and >= 0");
  if (!(outlier_weight >= 0.0 && outlier_weight <= 1.0)) throw InputError("omega must lie in [0, 1]");
  if (knn_k < 1) throw InputError("knn_k must be >= 1");
  if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
  if (!(convergence_tol >= 0.0)) throw InputError("convergence_tol must be >= 0");
  if (variance_floor && !(*variance_floor > 0.0 && std::isfinite(*variance_floor))) {
    throw InputError("variance_floor must be finite and > 0");
  }
  if (!(posterior_truncation >= 0.0 && posterior_truncation < 1.0)) {
    throw InputError("posterior_truncation must lie in [0, 1)");
  }
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::transform_tolerance: return "transform_tolerance";
  }
  return "unknown";
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// exp() of anything further below the row maximum is under DBL_MIN.
constexpr double kUnderflow = -708.0;

double resolve_floor(const PointCloud& x, const RegistrationConfig& cfg) {
  if (cfg.variance_floor) return *cfg.variance_floor;
  const double diag = bounding_diagonal(x);
  const double floor = 1e-9 * diag * diag;
  return floor > 0.0 ? floor : 1e-12;
}

void check_shapes(const PosteriorMatrix& p, const PointCloud& x, const PointCloud& y) {
  if (p.rows() != x.rows() || p.cols() != y.rows() + 1) {
    throw InputError("posterior matrix must be N x (M+1)");
  }
}

// Everything about the scanned side that the M-step needs, in coordinates
// centered at `center`. With L the graph Laplacian and a_n = |x_n - c|^2:
//   features = [x - c | a | L x | L a]   (N x 8)
// Because L 1 = 0, the neighbor double sums collapse into products of the
// posterior with these columns.
struct ScannedTerms {
  Eigen::Vector3d center;
  Eigen::MatrixXd features;

  ScannedTerms(const PointCloud& x, const NeighborGraph& graph) {
    if (graph.n != x.rows()) throw InputError("neighbor graph vertex count must equal N");
    center = x.colwise().mean().transpose();
    const Index n = x.rows();
    Eigen::MatrixXd base(n, 4);
    base.leftCols<3>() = (x.rowwise() - center.transpose());
    base.col(3) = base.leftCols<3>().rowwise().squaredNorm();
    features.resize(n, 8);
    features.leftCols<4>() = base;
    features.rightCols<4>() = apply_laplacian(graph, base);
  }
};

// Per-component products of the posterior with the scanned features.
struct ComponentMoments {
  Eigen::VectorXd mass;    // sum_n p_nm
  Eigen::MatrixXd moment;  // sum_n p_nm * features_n   (M x 8)
};

ComponentMoments component_moments(const PosteriorMatrix& p, const ScannedTerms& terms, Index m) {
  ComponentMoments out;
  const auto pm = p.leftCols(m);
  out.mass = pm.colwise().sum().transpose();
  out.moment.noalias() = pm.transpose() * terms.features;
  return out;
}

// sum_n p_nm |x_n - phi_m|^2 and the ordered-pair sum
// sum_ij w_ij (p_mi - p_mj)(|x_j - phi_m|^2 - |x_i - phi_m|^2) at transform t.
struct ResidualSums {
  Eigen::VectorXd weighted_sq;
  Eigen::VectorXd neighbor;
};

ResidualSums residual_sums(const ComponentMoments& cm, const ScannedTerms& terms,
                           const PointCloud& y, const RigidTransformd& t) {
  const Index m = y.rows();
  ResidualSums out;
  out.weighted_sq.resize(m);
  out.neighbor.resize(m);
  const Eigen::Vector3d shift = t.translation - terms.center;
  for (Index k = 0; k < m; ++k) {
    const Eigen::Vector3d phi = t.rotation * y.row(k).transpose() + shift;
    const Eigen::Vector3d px = cm.moment.row(k).head<3>().transpose();
    const Eigen::Vector3d plx = cm.moment.row(k).segment<3>(4).transpose();
    const double sq = cm.moment(k, 3) - 2.0 * px.dot(phi) + cm.mass(k) * phi.squaredNorm();
    out.weighted_sq(k) = std::max(sq, 0.0);
    out.neighbor(k) = -2.0 * (cm.moment(k, 7) - 2.0 * plx.dot(phi));
  }
  return out;
}

Eigen::VectorXd inverse_variances(const MixtureState& state) {
  return state.variances.cwiseInverse();
}

ObjectiveValue evaluate_objective(const ComponentMoments& cm, const ResidualSums& rs,
                                  const Eigen::VectorXd& variances, double lambda) {
  ObjectiveValue q;
  for (Index k = 0; k < variances.size(); ++k) {
    q.gmm += rs.weighted_sq(k) / (2.0 * variances(k)) + 1.5 * cm.mass(k) * std::log(variances(k));
    q.local += rs.neighbor(k) / (4.0 * variances(k));
  }
  q.total = q.gmm + lambda * q.local;
  return q;
}

WeightedCentroids centroids_from_moments(const ComponentMoments& cm, const ScannedTerms& terms,
                                         const PointCloud& y, const MixtureState& state,
                                         double lambda, std::size_t iteration) {
  const Eigen::VectorXd s = inverse_variances(state);
  const double total = cm.mass.dot(s);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw PosteriorCollapse(state.outlier_weight, iteration);
  }
  // sum_m s_m sum_n p_nm (x_n - c - lambda (L x)_n)
  const Eigen::Vector3d num_x =
      cm.moment.leftCols<3>().transpose() * s - lambda * (cm.moment.middleCols<3>(4).transpose() * s);
  WeightedCentroids mu;
  mu.mu_x = num_x / total + terms.center;
  mu.mu_y = y.transpose() * cm.mass.cwiseProduct(s) / total;
  return mu;
}

RotationUpdate rotation_from_moments(const ComponentMoments& cm, const ScannedTerms& terms,
                                     const PointCloud& y, const MixtureState& state, double lambda,
                                     const WeightedCentroids& mu, std::size_t iteration) {
  const Index m = y.rows();
  const Eigen::VectorXd s = inverse_variances(state);
  const Eigen::Vector3d mux_c = mu.mu_x - terms.center;

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  double scale = 0.0;
  for (Index k = 0; k < m; ++k) {
    const Eigen::Vector3d yc = y.row(k).transpose() - mu.mu_y;
    // sum_n p_nm (x_n - mu_x) - lambda sum_n p_nm (L x)_n
    const Eigen::Vector3d g = cm.moment.row(k).head<3>().transpose() - cm.mass(k) * mux_c -
                              lambda * cm.moment.row(k).segment<3>(4).transpose();
    h.noalias() += s(k) * yc * g.transpose();
    scale += s(k) * yc.norm() * g.norm();
  }

  const RotationFit<double> fit = rotation_from_cross_covariance(h);
  RotationUpdate out;
  out.cross_covariance = h;
  const bool vanished = !(scale > 0.0) || fit.singular_values(0) <= 1e-13 * scale;
  if (vanished && m > 1) throw DegenerateRotation(iteration);
  out.transform.rotation = vanished ? Eigen::Matrix3d::Identity() : fit.rotation;
  out.transform.translation = mu.mu_x - out.transform.rotation * mu.mu_y;
  out.degenerate = vanished || fit.degenerate;
  return out;
}

Eigen::VectorXd variances_from_sums(const ComponentMoments& cm, const ResidualSums& rs,
                                    const MixtureState& state, double lambda, double floor) {
  Eigen::VectorXd out = state.variances;
  for (Index k = 0; k < out.size(); ++k) {
    if (!(cm.mass(k) > 0.0)) continue;
    const double v = (rs.weighted_sq(k) + 0.5 * lambda * rs.neighbor(k)) / (3.0 * cm.mass(k));
    out(k) = std::isfinite(v) ? std::max(v, floor) : state.variances(k);
  }
  return out;
}

}  // namespace

InitialGuess init_state(const PointCloud& x, const PointCloud& y, const RegistrationConfig& cfg) {
  if (x.rows() < 1 || y.rows() < 1) throw InputError("init_state: empty cloud");
  cfg.validate();
  validate_cloud(x, "scanned cloud");
  validate_cloud(y, "model cloud");
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(y.rows());
  const Eigen::Vector3d cx = x.colwise().mean().transpose();
  const Eigen::Vector3d cy = y.colwise().mean().transpose();

  InitialGuess g;
  g.transform.translation = cx - cy;
  // After centroid alignment the cross term of the double sum vanishes.
  const double sx = (x.rowwise() - cx.transpose()).squaredNorm();
  const double sy = (y.rowwise() - cy.transpose()).squaredNorm();
  const double sigma2 = (m * sx + n * sy) / (3.0 * n * m);
  g.state.variances = Eigen::VectorXd::Constant(y.rows(), std::max(sigma2, resolve_floor(x, cfg)));
  g.state.outlier_weight = cfg.outlier_weight;
  g.state.component_prior = (1.0 - cfg.outlier_weight) / m;
  g.state.volume = bounding_volume(x, 0.05);
  return g;
}

namespace {

// Writes the posterior into `p`, resizing only when the shape changes so the
// registration loop can reuse one N x (M+1) buffer.
void fill_posterior(PosteriorMatrix& p, const PointCloud& x, const PointCloud& y,
                    const RigidTransformd& t, const MixtureState& state, double truncation) {
  const Index n = x.rows();
  const Index m = y.rows();
  if (state.variances.size() != m) throw InputError("e_step: one variance per model point required");

  const PointCloud phi = y * t.rotation.transpose() + Eigen::VectorXd::Ones(m) * t.translation.transpose();
  const Eigen::ArrayXd px = phi.col(0), py = phi.col(1), pz = phi.col(2);
  const Eigen::ArrayXd inv2s = (2.0 * state.variances.array()).inverse();
  const double log_prior = state.component_prior > 0.0 ? std::log(state.component_prior)
                                                         : -std::numeric_limits<double>::infinity();
  const Eigen::ArrayXd log_c = log_prior - 1.5 * (kLog2Pi + state.variances.array().log());
  const double log_outlier = state.outlier_weight > 0.0
                                 ? std::log(state.outlier_weight / state.volume)
                                 : -std::numeric_limits<double>::infinity();

  p.resize(n, m + 1);
  Eigen::ArrayXd v(m);
  for (Index i = 0; i < n; ++i) {
    double* row = p.row(i).data();
    v = log_c - ((x(i, 0) - px).square() + (x(i, 1) - py).square() + (x(i, 2) - pz).square()) * inv2s;
    const double top = std::max(log_outlier, m > 0 ? v.maxCoeff() : log_outlier);
    Eigen::Map<Eigen::ArrayXd> out(row, m);
    v -= top;
    out = (v > kUnderflow).select(v.exp(), 0.0);
    const double d = log_outlier - top;
    row[m] = d > kUnderflow ? std::exp(d) : 0.0;
    const double inv = 1.0 / (out.sum() + row[m]);
    out *= inv;
    row[m] *= inv;

    if (truncation > 0.0) {
      double kept = 0.0;
      for (Index k = 0; k <= m; ++k) kept += row[k] >= truncation ? row[k] : 0.0;
      if (kept > 0.0) {
        for (Index k = 0; k <= m; ++k) row[k] = row[k] >= truncation ? row[k] / kept : 0.0;
      }
    }
  }
}

}  // namespace

PosteriorMatrix e_step(const PointCloud& x, const PointCloud& y, const RigidTransformd& t,
                       const MixtureState& state, double truncation) {
  PosteriorMatrix p;
  fill_posterior(p, x, y, t, state, truncation);
  return p;
}

double pairwise_divergence(Index i, Index j, const PosteriorMatrix& p, const PointCloud& x,
                           const PointCloud& y, const RigidTransformd& t, const MixtureState& state) {
  check_shapes(p, x, y);
  if (i == j) return 0.0;
  const Eigen::Vector3d xi = x.row(i).transpose();
  const Eigen::Vector3d xj = x.row(j).transpose();
  double d = 0.0;
  for (Index k = 0; k < y.rows(); ++k) {
    const Eigen::Vector3d phi = t(y.row(k).transpose());
    d += (p(i, k) - p(j, k)) * ((xj - phi).squaredNorm() - (xi - phi).squaredNorm()) /
         (4.0 * state.variances(k));
  }
  return d;
}

double local_consistency(const PosteriorMatrix& p, const NeighborGraph& graph, const PointCloud& x,
                         const PointCloud& y, const RigidTransformd& t, const MixtureState& state) {
  check_shapes(p, x, y);
  if (graph.n != x.rows()) throw InputError("neighbor graph vertex count must equal N");
  double q = 0.0;
  for (const auto& [i, j] : graph.edges) q += pairwise_divergence(i, j, p, x, y, t, state);
  return 2.0 * q;
}

ObjectiveValue objective(const PosteriorMatrix& p, const NeighborGraph& graph, const PointCloud& x,
                         const PointCloud& y, const RigidTransformd& t, const MixtureState& state,
                         double lambda) {
  check_shapes(p, x, y);
  const ScannedTerms terms(x, graph);
  const ComponentMoments cm = component_moments(p, terms, y.rows());
  return evaluate_objective(cm, residual_sums(cm, terms, y, t), state.variances, lambda);
}

WeightedCentroids weighted_centroids(const PosteriorMatrix& p, const NeighborGraph& graph,
                                     const PointCloud& x, const PointCloud& y,
                                     const MixtureState& state, double lambda) {
  check_shapes(p, x, y);
  const ScannedTerms terms(x, graph);
  return centroids_from_moments(component_moments(p, terms, y.rows()), terms, y, state, lambda, 0);
}

RotationUpdate update_rotation(const PosteriorMatrix& p, const NeighborGraph& graph,
                               const PointCloud& x, const PointCloud& y, const MixtureState& state,
                               double lambda, const WeightedCentroids& mu, std::size_t iteration) {
  check_shapes(p, x, y);
  const ScannedTerms terms(x, graph);
  return rotation_from_moments(component_moments(p, terms, y.rows()), terms, y, state, lambda, mu,
                               iteration);
}

Eigen::VectorXd update_variances(const PosteriorMatrix& p, const NeighborGraph& graph,
                                 const PointCloud& x, const PointCloud& y,
                                 const RigidTransformd& t_new, const MixtureState& state,
                                 double lambda, double floor) {
  check_shapes(p, x, y);
  const ScannedTerms terms(x, graph);
  const ComponentMoments cm = component_moments(p, terms, y.rows());
  return variances_from_sums(cm, residual_sums(cm, terms, y, t_new), state, lambda, floor);
}

RegistrationReport register_clouds(const PointCloud& x, const PointCloud& y,
                                   const RegistrationConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  if (x.rows() < 2) throw InputError("register: scanned cloud needs at least 2 points");
  if (y.rows() < 1) throw InputError("register: model cloud is empty");

  InitialGuess init = init_state(x, y, cfg);
  MixtureState state = std::move(init.state);
  RigidTransformd transform = init.transform;
  const double floor = resolve_floor(x, cfg);

  const NeighborGraph graph = build_knn_graph(x, cfg.knn_k);
  const ScannedTerms terms(x, graph);

  RegistrationReport report;
  PosteriorMatrix p;
  for (int q = 1; q <= cfg.max_iterations; ++q) {
    const auto iteration = static_cast<std::size_t>(q);
    fill_posterior(p, x, y, transform, state, cfg.posterior_truncation);
    const ComponentMoments cm = component_moments(p, terms, y.rows());

    const WeightedCentroids mu = centroids_from_moments(cm, terms, y, state, cfg.lambda, iteration);
    const RotationUpdate rot = rotation_from_moments(cm, terms, y, state, cfg.lambda, mu, iteration);
    report.degenerate_rotation = report.degenerate_rotation || rot.degenerate;

    const ResidualSums rs = residual_sums(cm, terms, y, rot.transform);
    state.variances = variances_from_sums(cm, rs, state, cfg.lambda, floor);

    const ObjectiveValue value = evaluate_objective(cm, rs, state.variances, cfg.lambda);
    report.objective_trace.push_back(value.total);
    report.gmm_objective_trace.push_back(value.gmm);

    const double change = (rot.transform.rotation - transform.rotation).norm() +
                          (rot.transform.translation - transform.translation).norm();
    transform = rot.transform;
    report.iterations_run = q;
    if (change < cfg.convergence_tol) {
      report.converged_by = StopReason::transform_tolerance;
      break;
    }
  }

  report.transform = transform;
  report.final_variances = state.variances;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace lcgmm
