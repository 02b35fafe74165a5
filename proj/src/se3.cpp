#include "swarmpgo/se3.h"

#include <cmath>

namespace swarmpgo {

namespace {

constexpr double kCutLocusMargin = 1e-6;
constexpr double kSmallAngleSq = 1e-12;

// Canonical double-cover representative: w >= 0, with a deterministic
// tie-break when w == 0 so equal rotations always store identical bits.
Eigen::Quaterniond canonicalize(Eigen::Quaterniond q) {
  q.normalize();
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    if (q.x() != 0.0) {
      flip = q.x() < 0.0;
    } else if (q.y() != 0.0) {
      flip = q.y() < 0.0;
    } else {
      flip = q.z() < 0.0;
    }
  }
  if (flip) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

}  // namespace

Rotation3::Rotation3(const Eigen::Quaterniond& q) : q_(canonicalize(q)) {}

Rotation3 Rotation3::fromQuaternion(double w, double x, double y, double z) {
  return Rotation3(Eigen::Quaterniond(w, x, y, z));
}

Rotation3 Rotation3::fromMatrix(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Matrix3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return Rotation3(Eigen::Quaterniond(r));
}

Rotation3 Rotation3::axisAngle(const Vector3& axis, double angle_rad) {
  return Rotation3(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis.normalized())));
}

Rotation3 Rotation3::exp(const Vector3& omega) {
  const double theta_sq = omega.squaredNorm();
  double half_sinc;  // sin(theta/2) / theta
  double cos_half;
  if (theta_sq < kSmallAngleSq) {
    half_sinc = 0.5 - theta_sq / 48.0;
    cos_half = 1.0 - theta_sq / 8.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    half_sinc = std::sin(0.5 * theta) / theta;
    cos_half = std::cos(0.5 * theta);
  }
  return Rotation3(
      Eigen::Quaterniond(cos_half, half_sinc * omega.x(), half_sinc * omega.y(),
                         half_sinc * omega.z()));
}

Vector3 Rotation3::log() const {
  const Vector3 vec(q_.x(), q_.y(), q_.z());
  const double vec_norm = vec.norm();
  const double angle = 2.0 * std::atan2(vec_norm, q_.w());  // in [0, pi] since w >= 0
  if (angle > M_PI - kCutLocusMargin) {
    throw AngleNearPi();
  }
  if (vec_norm < 1e-12) {
    return 2.0 * vec;  // first-order: angle ~ 2 |vec|
  }
  return (angle / vec_norm) * vec;
}

Rotation3 Rotation3::operator*(const Rotation3& other) const {
  return Rotation3(q_ * other.q_);
}

Rotation3 Rotation3::inverse() const { return Rotation3(q_.conjugate()); }

Vector3 Rotation3::rotate(const Vector3& p) const { return q_ * p; }

double Rotation3::angleRad() const {
  return 2.0 * std::atan2(Vector3(q_.x(), q_.y(), q_.z()).norm(), q_.w());
}

bool Rotation3::isApprox(const Rotation3& other, double tol) const {
  // Canonical storage makes coefficient-wise comparison meaningful.
  return (q_.coeffs() - other.q_.coeffs()).norm() <= tol;
}

Pose3 Pose3::fromMatrix(const Matrix4& m) {
  return Pose3(Rotation3::fromMatrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>());
}

Pose3 Pose3::compose(const Pose3& other) const {
  return Pose3(rotation_ * other.rotation_,
               translation_ + rotation_.rotate(other.translation_));
}

Pose3 Pose3::inverse() const {
  const Rotation3 rinv = rotation_.inverse();
  return Pose3(rinv, -rinv.rotate(translation_));
}

Vector3 Pose3::transformFrom(const Vector3& p) const {
  return rotation_.rotate(p) + translation_;
}

Matrix4 Pose3::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

bool Pose3::isApprox(const Pose3& other, double tol) const {
  return rotation_.isApprox(other.rotation_, tol) &&
         (translation_ - other.translation_).norm() <= tol;
}

Pose3 between(const Pose3& a, const Pose3& b) { return a.inverse().compose(b); }

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

namespace {

// V matrix of the SE(3) exponential: t = V(omega) * v.
Matrix3 exp_v_matrix(const Vector3& omega) {
  const double theta_sq = omega.squaredNorm();
  const Matrix3 w = skew(omega);
  double a;  // (1 - cos t) / t^2
  double b;  // (t - sin t) / t^3
  if (theta_sq < kSmallAngleSq) {
    a = 0.5 - theta_sq / 24.0;
    b = 1.0 / 6.0 - theta_sq / 120.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    a = (1.0 - std::cos(theta)) / theta_sq;
    b = (theta - std::sin(theta)) / (theta_sq * theta);
  }
  return Matrix3::Identity() + a * w + b * w * w;
}

Matrix3 log_v_inverse_matrix(const Vector3& omega) {
  const double theta_sq = omega.squaredNorm();
  const Matrix3 w = skew(omega);
  double c;  // 1/t^2 - (1 + cos t) / (2 t sin t)
  if (theta_sq < kSmallAngleSq) {
    c = 1.0 / 12.0 + theta_sq / 720.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    c = 1.0 / theta_sq - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Matrix3::Identity() - 0.5 * w + c * w * w;
}

// Inverse left Jacobian of the SO(3) exponential (same matrix as the log-map
// V^-1 for rotations).
Matrix3 so3_left_jacobian_inverse(const Vector3& omega) {
  return log_v_inverse_matrix(omega);
}

// Coupling block of the SE(3) left Jacobian (Q in Barfoot's closed form),
// for tangent ordering [omega; v].
Matrix3 se3_left_jacobian_q(const Vector3& omega, const Vector3& v) {
  const double theta_sq = omega.squaredNorm();
  const Matrix3 w = skew(omega);
  const Matrix3 p = skew(v);
  double c2;  // (t - sin t) / t^3
  double c3;  // (1 - t^2/2 - cos t) / t^4
  double c4;  // (t - sin t - t^3/6) / t^5
  if (theta_sq < 1e-8) {
    c2 = 1.0 / 6.0 - theta_sq / 120.0;
    c3 = -1.0 / 24.0 + theta_sq / 720.0;
    c4 = -1.0 / 120.0 + theta_sq / 5040.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    const double t4 = theta_sq * theta_sq;
    c2 = (theta - std::sin(theta)) / (theta_sq * theta);
    c3 = (1.0 - 0.5 * theta_sq - std::cos(theta)) / t4;
    c4 = (theta - std::sin(theta) - theta_sq * theta / 6.0) / (t4 * theta);
  }
  const Matrix3 wp = w * p;
  const Matrix3 pw = p * w;
  const Matrix3 wpw = wp * w;
  return 0.5 * p + c2 * (wp + pw + wpw) - c3 * (w * wp + pw * w - 3.0 * wpw) -
         0.5 * (c3 - 3.0 * c4) * (wpw * w + w * wpw);
}

// Inverse left Jacobian of the SE(3) exponential, ordering [omega; v].
Matrix6 se3_left_jacobian_inverse(const Twist& xi) {
  const Vector3 omega = xi.head<3>();
  const Vector3 v = xi.tail<3>();
  const Matrix3 jinv = so3_left_jacobian_inverse(omega);
  const Matrix3 q = se3_left_jacobian_q(omega, v);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = jinv;
  out.bottomRightCorner<3, 3>() = jinv;
  out.bottomLeftCorner<3, 3>() = -jinv * q * jinv;
  return out;
}

}  // namespace

Pose3 exp_map(const Twist& xi) {
  const Vector3 omega = xi.head<3>();
  const Vector3 v = xi.tail<3>();
  return Pose3(Rotation3::exp(omega), exp_v_matrix(omega) * v);
}

Twist log_map(const Pose3& p) {
  const Vector3 omega = p.rotation().log();
  Twist xi;
  xi.head<3>() = omega;
  xi.tail<3>() = log_v_inverse_matrix(omega) * p.translation();
  return xi;
}

double rotation_geodesic_deg(const Rotation3& a, const Rotation3& b) {
  return (a.inverse() * b).angleRad() * 180.0 / M_PI;
}

double translation_distance(const Pose3& a, const Pose3& b) {
  return (a.translation() - b.translation()).norm();
}

Matrix6 adjoint(const Pose3& p) {
  const Matrix3 r = p.rotation().matrix();
  Matrix6 ad = Matrix6::Zero();
  ad.topLeftCorner<3, 3>() = r;
  ad.bottomRightCorner<3, 3>() = r;
  ad.bottomLeftCorner<3, 3>() = skew(p.translation()) * r;
  return ad;
}

Matrix6 se3_right_jacobian_inverse(const Twist& xi) {
  return se3_left_jacobian_inverse(-xi);
}

Information6 diagonal_information(double sigma_rot_rad, double sigma_trans_m) {
  Information6 info = Information6::Zero();
  const double wr = 1.0 / (sigma_rot_rad * sigma_rot_rad);
  const double wt = 1.0 / (sigma_trans_m * sigma_trans_m);
  info.diagonal() << wr, wr, wr, wt, wt, wt;
  return info;
}

}  // namespace swarmpgo
