#pragma once

#include <string_view>

#include "lcgmm/geometry.hpp"

namespace lcgmm::metrics {

/// How the point-wise transform discrepancy is averaged.
///   mean_then_sqrt: sqrt(sum |d|^2 / M)       (conventional RMSE)
///   paper_literal:  sqrt(sum |d|^2) / M
enum class RmseConvention { mean_then_sqrt, paper_literal };

const char* to_string(RmseConvention c);
RmseConvention parse_convention(std::string_view name);

struct ErrorTriple {
  double rmse = 0;
  double rot_error = 0;
  double trans_error = 0;
};

double transform_rmse(const PointCloud& y, const RigidTransformd& gt, const RigidTransformd& est,
                      RmseConvention convention = RmseConvention::mean_then_sqrt);

/// Frobenius norm of R_gt - R_est.
double rotation_error(const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_est);

double translation_error(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_est);

ErrorTriple evaluate(const PointCloud& y, const RigidTransformd& gt, const RigidTransformd& est,
                     RmseConvention convention = RmseConvention::mean_then_sqrt);

/// RMS of scanned-to-nearest-model distances, ignoring those above
/// `threshold`. Throws NumericalError if nothing survives.
double cloud_rmse(const PointCloud& scanned, const PointCloud& model, double threshold);

}  // namespace lcgmm::metrics
