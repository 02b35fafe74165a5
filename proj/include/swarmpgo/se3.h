#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "swarmpgo/errors.h"

namespace swarmpgo {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

// Tangent coordinates, rotational part first: [omega; v].
using Twist = Eigen::Matrix<double, 6, 1>;

// 6x6 symmetric positive-definite measurement information, (rad, m)^-2,
// ordered to match Twist.
using Information6 = Matrix6;

/// Rotation on SO(3), stored as a unit quaternion with w >= 0.
/// Every constructor and composition renormalizes, so chained products do
/// not drift away from the unit sphere.
class Rotation3 {
 public:
  Rotation3() : q_(1.0, 0.0, 0.0, 0.0) {}

  static Rotation3 fromQuaternion(double w, double x, double y, double z);
  /// Nearest rotation to an arbitrary 3x3 matrix (orthogonal projection with
  /// determinant correction); exact for matrices already in SO(3).
  static Rotation3 fromMatrix(const Matrix3& m);
  static Rotation3 axisAngle(const Vector3& axis, double angle_rad);
  static Rotation3 exp(const Vector3& omega);

  /// Rotation-vector (axis * angle) with angle in [0, pi).
  /// Throws AngleNearPi within 1e-6 of the cut locus.
  Vector3 log() const;

  Rotation3 operator*(const Rotation3& other) const;
  Rotation3 inverse() const;
  Vector3 rotate(const Vector3& p) const;
  Matrix3 matrix() const { return q_.toRotationMatrix(); }
  double angleRad() const;

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  bool isApprox(const Rotation3& other, double tol = 1e-9) const;

 private:
  explicit Rotation3(const Eigen::Quaterniond& q);
  Eigen::Quaterniond q_;
};

/// Rigid-body transform on SE(3).
class Pose3 {
 public:
  Pose3() : translation_(Vector3::Zero()) {}
  Pose3(const Rotation3& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose3 fromMatrix(const Matrix4& m);

  Pose3 compose(const Pose3& other) const;
  Pose3 operator*(const Pose3& other) const { return compose(other); }
  Pose3 inverse() const;
  Vector3 transformFrom(const Vector3& p) const;
  Matrix4 matrix() const;

  const Rotation3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  bool isApprox(const Pose3& other, double tol = 1e-9) const;

 private:
  Rotation3 rotation_;
  Vector3 translation_;
};

/// Relative transform a^-1 * b.
Pose3 between(const Pose3& a, const Pose3& b);

/// Closed-form SE(3) exponential (with the V matrix coupling rotation and
/// translation) and its inverse. log_map throws AngleNearPi at the cut locus.
Pose3 exp_map(const Twist& xi);
Twist log_map(const Pose3& p);

/// Geodesic rotation distance in degrees, in [0, 180].
double rotation_geodesic_deg(const Rotation3& a, const Rotation3& b);
/// Euclidean distance between translations, meters.
double translation_distance(const Pose3& a, const Pose3& b);

Matrix3 skew(const Vector3& v);

/// Adjoint of a pose, mapping right-tangent to left-tangent coordinates.
Matrix6 adjoint(const Pose3& p);

/// Inverse of the right Jacobian of the SE(3) exponential at xi: the exact
/// linearization d/d(delta) log(exp(xi) exp(delta)) at delta = 0.
Matrix6 se3_right_jacobian_inverse(const Twist& xi);

/// Diagonal information from a (sigma_rot rad, sigma_trans m) noise pair.
Information6 diagonal_information(double sigma_rot_rad, double sigma_trans_m);

}  // namespace swarmpgo
