#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "lcgmm/error.hpp"

namespace lcgmm {

/// N x 3 point matrix, one point per row, millimeters.
template <typename Scalar>
using Cloud = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
using PointCloud = Cloud<double>;

using Index = Eigen::Index;

/// Proper rigid motion x -> R x + t.
template <typename Scalar>
struct RigidTransform {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform Identity() { return {}; }

  Vector3 operator()(const Vector3& p) const { return rotation * p + translation; }

  /// Composition: (a * b)(x) == a(b(x)).
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> h = Eigen::Matrix<Scalar, 4, 4>::Identity();
    h.template topLeftCorner<3, 3>() = rotation;
    h.template topRightCorner<3, 1>() = translation;
    return h;
  }
};
using RigidTransformd = RigidTransform<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Throws InputError if any coordinate is NaN or infinite.
template <typename Scalar>
void validate_cloud(const Cloud<Scalar>& cloud, const std::string& what = "point cloud") {
  for (Index i = 0; i < cloud.rows(); ++i) {
    if (!cloud.row(i).allFinite()) {
      throw InputError(what + ": non-finite coordinate at point " + std::to_string(i));
    }
  }
}

/// ||R^T R - I||_F <= tol and |det R - 1| <= tol.
template <typename Scalar>
bool is_rotation(const Eigen::Matrix<Scalar, 3, 3>& r, Scalar tol = Scalar(1e-9)) {
  if (!r.allFinite()) return false;
  const Scalar ortho = (r.transpose() * r - Eigen::Matrix<Scalar, 3, 3>::Identity()).norm();
  return ortho <= tol && std::abs(r.determinant() - Scalar(1)) <= tol;
}

template <typename Scalar>
void validate_transform(const RigidTransform<Scalar>& t, Scalar tol = Scalar(1e-9)) {
  if (!is_rotation(t.rotation, tol) || !t.translation.allFinite()) {
    throw InputError("rigid transform violates rotation invariants");
  }
}

template <typename Scalar>
Cloud<Scalar> apply_transform(const Cloud<Scalar>& cloud, const RigidTransform<Scalar>& t) {
  validate_transform(t);
  validate_cloud(cloud);
  Cloud<Scalar> out = cloud * t.rotation.transpose();
  out.rowwise() += t.translation.transpose();
  return out;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& t) {
  const Eigen::Matrix<Scalar, 3, 3> rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

/// Mean of the rows, optionally weighted. Throws NumericalError if the
/// weights do not have a positive sum.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> centroid(
    const Cloud<Scalar>& cloud,
    const std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& weights = std::nullopt) {
  if (cloud.rows() == 0) throw InputError("centroid of an empty cloud");
  if (!weights) return cloud.colwise().mean().transpose();
  if (weights->size() != cloud.rows()) throw InputError("centroid: weight count mismatch");
  const Scalar total = weights->sum();
  if (!(total > Scalar(0))) throw NumericalError("centroid: weights sum to zero");
  return (cloud.transpose() * *weights) / total;
}

/// Volume of the axis-aligned bounding box after growing each extent by
/// padding_fraction on both sides. Flat extents are floored at 1e-6 mm.
template <typename Scalar>
Scalar bounding_volume(const Cloud<Scalar>& cloud, Scalar padding_fraction) {
  if (cloud.rows() == 0) throw InputError("bounding volume of an empty cloud");
  const Eigen::Matrix<Scalar, 1, 3> extent = cloud.colwise().maxCoeff() - cloud.colwise().minCoeff();
  Scalar volume(1);
  for (int a = 0; a < 3; ++a) {
    volume *= std::max(extent(a) * (Scalar(1) + Scalar(2) * padding_fraction), Scalar(1e-6));
  }
  return volume;
}

/// Diagonal length of the axis-aligned bounding box.
template <typename Scalar>
Scalar bounding_diagonal(const Cloud<Scalar>& cloud) {
  if (cloud.rows() == 0) return Scalar(0);
  return (cloud.colwise().maxCoeff() - cloud.colwise().minCoeff()).norm();
}

template <typename Scalar>
struct RotationFit {
  Eigen::Matrix<Scalar, 3, 3> rotation;
  Eigen::Matrix<Scalar, 3, 1> singular_values;
  bool degenerate = false;  // rank(H) < 2: the optimum is not unique
};

/// argmax_R Tr(R H) over proper rotations, with H = U S V^T:
/// R = V diag(1, 1, det(V U^T)) U^T.
template <typename Scalar>
RotationFit<Scalar> rotation_from_cross_covariance(const Eigen::Matrix<Scalar, 3, 3>& h) {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Eigen::Matrix<Scalar, 3, 1> d(1, 1, (v * u.transpose()).determinant() < 0 ? -1 : 1);
  RotationFit<Scalar> fit;
  fit.rotation = v * d.asDiagonal() * u.transpose();
  fit.singular_values = svd.singularValues();
  const Scalar s0 = fit.singular_values(0);
  fit.degenerate = !(s0 > Scalar(0)) ||
                   fit.singular_values(1) <= s0 * Eigen::NumTraits<Scalar>::epsilon() * Scalar(1e4);
  return fit;
}

template <typename Scalar>
struct KabschResult {
  RigidTransform<Scalar> transform;
  bool degenerate = false;
};

/// Weighted least-squares rigid motion mapping source onto target:
/// minimizes sum_i w_i ||R s_i + t - d_i||^2 with det(R) = +1.
template <typename Scalar>
KabschResult<Scalar> kabsch(const Cloud<Scalar>& source, const Cloud<Scalar>& target,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  if (source.rows() != target.rows() || source.rows() != weights.size()) {
    throw InputError("kabsch: source, target and weights must have equal lengths");
  }
  if (!weights.allFinite() || (weights.array() < Scalar(0)).any()) {
    throw InputError("kabsch: weights must be finite and nonnegative");
  }
  const Scalar total = weights.sum();
  if (!(total > Scalar(0))) throw NumericalError("kabsch: weights sum to zero");

  const Eigen::Matrix<Scalar, 3, 1> mu_s = (source.transpose() * weights) / total;
  const Eigen::Matrix<Scalar, 3, 1> mu_t = (target.transpose() * weights) / total;
  const Cloud<Scalar> sc = source.rowwise() - mu_s.transpose();
  const Cloud<Scalar> tc = target.rowwise() - mu_t.transpose();
  const Eigen::Matrix<Scalar, 3, 3> h = sc.transpose() * weights.asDiagonal() * tc;

  const RotationFit<Scalar> fit = rotation_from_cross_covariance(h);
  KabschResult<Scalar> out;
  out.transform.rotation = fit.rotation;
  out.transform.translation = mu_t - fit.rotation * mu_s;
  out.degenerate = fit.degenerate || source.rows() < 3;
  return out;
}

template <typename Scalar>
KabschResult<Scalar> kabsch(const Cloud<Scalar>& source, const Cloud<Scalar>& target) {
  return kabsch(source, target,
                Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(source.rows()).eval());
}

}  // namespace lcgmm
