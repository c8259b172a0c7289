#pragma once

#include "lcgmm/geometry.hpp"
#include "lcgmm/mixture.hpp"

namespace lcgmm::baselines {

struct IcpConfig {
  int max_iterations = 100;
  double convergence_tol = 1e-9;  // stop once a fit improves the mean squared residual by less
  double trim_fraction = 0.0;     // drop this share of the worst matches before each fit

  void validate() const;
};

/// Point-to-point ICP. Each transformed model point is matched to its
/// nearest scanned point, then the pairs are refit with kabsch. Starts from
/// the centroid-aligned identity used by register_clouds.
/// objective_trace[q] is the mean squared match residual at the start of
/// iteration q+1.
RegistrationReport icp(const PointCloud& x, const PointCloud& y, const IcpConfig& cfg);

}  // namespace lcgmm::baselines
