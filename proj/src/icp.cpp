#include "lcgmm/icp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

#include "lcgmm/spatial.hpp"

namespace lcgmm::baselines {

void IcpConfig::validate() const {
  if (max_iterations < 1) throw InputError("icp: max_iterations must be >= 1");
  if (!(convergence_tol >= 0.0)) throw InputError("icp: convergence_tol must be >= 0");
  if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) throw InputError("icp: trim_fraction must lie in [0, 1)");
}

RegistrationReport icp(const PointCloud& x, const PointCloud& y, const IcpConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  if (x.rows() < 3 || y.rows() < 3) throw InputError("icp: both clouds need at least 3 points");
  validate_cloud(y, "model cloud");
  const KdTree tree(x);
  const Index m = y.rows();
  const auto keep = static_cast<Index>(std::floor((1.0 - cfg.trim_fraction) * static_cast<double>(m)));
  if (keep < 3) throw NumericalError("icp: trimming leaves fewer than 3 correspondences");

  RigidTransformd transform;
  transform.translation = (x.colwise().mean() - y.colwise().mean()).transpose();

  RegistrationReport report;
  std::vector<Neighbor> match(static_cast<std::size_t>(m));
  std::vector<Index> order(static_cast<std::size_t>(m));
  for (int q = 1; q <= cfg.max_iterations; ++q) {
    for (Index k = 0; k < m; ++k) match[k] = tree.nearest(transform(y.row(k).transpose()));

    std::iota(order.begin(), order.end(), Index{0});
    if (keep < m) {
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return match[a].squared_distance < match[b].squared_distance;
      });
      order.resize(static_cast<std::size_t>(keep));
      std::sort(order.begin(), order.end());
    }

    PointCloud src(keep, 3), dst(keep, 3);
    double residual = 0.0;
    for (Index r = 0; r < keep; ++r) {
      const Index k = order[r];
      src.row(r) = y.row(k);
      dst.row(r) = x.row(match[k].index);
      residual += match[k].squared_distance;
    }
    residual /= static_cast<double>(keep);
    order.resize(static_cast<std::size_t>(m));

    const KabschResult<double> fit = kabsch(src, dst);
    report.degenerate_rotation = report.degenerate_rotation || fit.degenerate;
    PointCloud moved = src * fit.transform.rotation.transpose();
    moved.rowwise() += fit.transform.translation.transpose();
    const double fitted = (moved - dst).rowwise().squaredNorm().mean();

    report.objective_trace.push_back(residual);
    report.iterations_run = q;
    transform = fit.transform;
    if (residual - fitted < cfg.convergence_tol) {
      report.converged_by = StopReason::transform_tolerance;
      break;
    }
  }

  report.transform = transform;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace lcgmm::baselines
