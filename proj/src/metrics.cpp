#include "lcgmm/metrics.hpp"

#include <cmath>
#include <string>

#include "lcgmm/spatial.hpp"

namespace lcgmm::metrics {

const char* to_string(RmseConvention c) {
  return c == RmseConvention::paper_literal ? "paper_literal" : "mean_then_sqrt";
}

RmseConvention parse_convention(std::string_view name) {
  if (name == "mean_then_sqrt") return RmseConvention::mean_then_sqrt;
  if (name == "paper_literal") return RmseConvention::paper_literal;
  throw InputError("unknown RMSE convention '" + std::string(name) + "'");
}

double transform_rmse(const PointCloud& y, const RigidTransformd& gt, const RigidTransformd& est,
                      RmseConvention convention) {
  if (y.rows() == 0) throw InputError("transform_rmse: empty model cloud");
  const Eigen::Matrix3d dr = gt.rotation - est.rotation;
  const Eigen::Vector3d dt = gt.translation - est.translation;
  double sum = 0.0;
  for (Index i = 0; i < y.rows(); ++i) sum += (dr * y.row(i).transpose() + dt).squaredNorm();
  const auto m = static_cast<double>(y.rows());
  return convention == RmseConvention::paper_literal ? std::sqrt(sum) / m : std::sqrt(sum / m);
}

double rotation_error(const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_est) {
  return (r_gt - r_est).norm();
}

double translation_error(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_est) {
  return (t_gt - t_est).norm();
}

ErrorTriple evaluate(const PointCloud& y, const RigidTransformd& gt, const RigidTransformd& est,
                     RmseConvention convention) {
  return {transform_rmse(y, gt, est, convention), rotation_error(gt.rotation, est.rotation),
          translation_error(gt.translation, est.translation)};
}

double cloud_rmse(const PointCloud& scanned, const PointCloud& model, double threshold) {
  if (scanned.rows() == 0 || model.rows() == 0) throw InputError("cloud_rmse: empty cloud");
  if (!(threshold > 0.0)) throw InputError("cloud_rmse: threshold must be > 0");
  const KdTree tree(model);
  const double limit = threshold * threshold;
  double sum = 0.0;
  Index kept = 0;
  for (Index i = 0; i < scanned.rows(); ++i) {
    const double d2 = tree.nearest(scanned.row(i).transpose()).squared_distance;
    if (d2 <= limit) {
      sum += d2;
      ++kept;
    }
  }
  if (kept == 0) throw NumericalError("cloud_rmse: no correspondence within the threshold");
  return std::sqrt(sum / static_cast<double>(kept));
}

}  // namespace lcgmm::metrics
