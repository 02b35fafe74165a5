#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "oracles.h"
#include "swarmpgo/se3.h"

using namespace swarmpgo;

namespace {
Pose3 rz_pose(double deg, double x, double y, double z) {
  return Pose3(Rotation3::axisAngle(Vector3(0, 0, 1), deg * M_PI / 180.0), Vector3(x, y, z));
}
}  // namespace

TEST_CASE("compose identity and inverse axioms") {
  std::mt19937 rng(7);
  const Pose3 p = oracle::random_pose(rng);
  CHECK(Pose3().compose(p).isApprox(p, 1e-12));
  CHECK(p.compose(Pose3()).isApprox(p, 1e-12));
  CHECK(p.compose(p.inverse()).isApprox(Pose3(), 1e-9));
}

TEST_CASE("compose matches hand-computed planar case") {
  // Rz(90) @ (1,0,0) composed with itself lands at (1,1,0) facing Rz(180).
  const Pose3 a = rz_pose(90.0, 1, 0, 0);
  const Pose3 expect = rz_pose(180.0, 1, 1, 0);
  CHECK(a.compose(a).isApprox(expect, 1e-12));
}

TEST_CASE("compose and between match the homogeneous-matrix oracle") {
  std::mt19937 rng(42);
  for (int i = 0; i < 500; ++i) {
    const Pose3 a = oracle::random_pose(rng);
    const Pose3 b = oracle::random_pose(rng);
    const Matrix4 mc = a.matrix() * b.matrix();
    CHECK((a.compose(b).matrix() - mc).cwiseAbs().maxCoeff() < 1e-9);
    const Matrix4 mb = a.matrix().inverse() * b.matrix();
    CHECK((between(a, b).matrix() - mb).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(a.compose(between(a, b)).isApprox(b, 1e-9));
  }
}

TEST_CASE("between trivial cases") {
  std::mt19937 rng(3);
  const Pose3 p = oracle::random_pose(rng);
  CHECK(between(p, p).isApprox(Pose3(), 1e-9));
  CHECK(between(Pose3(), p).isApprox(p, 1e-12));
}

TEST_CASE("exp_map matches the matrix-exponential series oracle") {
  CHECK(exp_map(Twist::Zero()).isApprox(Pose3(), 1e-15));
  std::mt19937 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Twist xi = oracle::random_twist(rng, 3.0);
    const Matrix4 ref = oracle::expm_series(oracle::twist_hat(xi));
    CHECK((exp_map(xi).matrix() - ref).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("log_map inverts exp_map away from the cut locus") {
  std::mt19937 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Pose3 p = oracle::random_pose(rng, 3.0);
    CHECK(exp_map(log_map(p)).isApprox(p, 1e-9));
    const Twist xi = oracle::random_twist(rng, 3.0);
    CHECK((log_map(exp_map(xi)) - xi).norm() < 1e-9);
  }
}

TEST_CASE("log_map of a pure translation keeps the vector") {
  Twist xi;
  xi << 0, 0, 0, 1, 2, 3;
  const Twist back = log_map(exp_map(xi));
  CHECK((back - xi).norm() < 1e-12);
  CHECK(back.head<3>().norm() == 0.0);
}

TEST_CASE("log_map throws at the cut locus") {
  const Pose3 p(Rotation3::axisAngle(Vector3(1, 0, 0), M_PI - 1e-9), Vector3::Zero());
  CHECK_THROWS_AS(log_map(p), AngleNearPi);
  const Pose3 q(Rotation3::axisAngle(Vector3(1, 0, 0), M_PI - 1e-3), Vector3::Zero());
  CHECK_NOTHROW(log_map(q));
}

TEST_CASE("rotation geodesic and translation distance") {
  const Rotation3 rz90 = Rotation3::axisAngle(Vector3(0, 0, 1), M_PI / 2.0);
  CHECK(rotation_geodesic_deg(Rotation3(), rz90) == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(rotation_geodesic_deg(rz90, rz90) == doctest::Approx(0.0));
  CHECK(translation_distance(Pose3(Rotation3(), Vector3(0, 0, 0)),
                             Pose3(Rotation3(), Vector3(3, 4, 0))) == doctest::Approx(5.0));
  // Metric range.
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Pose3 a = oracle::random_pose(rng);
    const Pose3 b = oracle::random_pose(rng);
    const double d = rotation_geodesic_deg(a.rotation(), b.rotation());
    CHECK(d >= 0.0);
    CHECK(d <= 180.0);
    CHECK(d == doctest::Approx(rotation_geodesic_deg(b.rotation(), a.rotation())));
  }
}

TEST_CASE("group axioms under seeded random composition chains") {
  std::mt19937 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const Pose3 a = oracle::random_pose(rng);
    const Pose3 b = oracle::random_pose(rng);
    const Pose3 c = oracle::random_pose(rng);
    CHECK(a.compose(b).compose(c).isApprox(a.compose(b.compose(c)), 1e-9));
  }
}

TEST_CASE("quaternion norm is preserved through long composition chains") {
  std::mt19937 rng(123);
  Pose3 acc;
  for (int i = 0; i < 10000; ++i) {
    acc = acc.compose(oracle::random_pose(rng, 0.5, 0.1));
    if (i % 1000 == 0) {
      const auto& r = acc.rotation();
      const double n =
          std::sqrt(r.w() * r.w() + r.x() * r.x() + r.y() * r.y() + r.z() * r.z());
      CHECK(std::abs(n - 1.0) < 1e-9);
      CHECK(r.w() >= 0.0);
    }
  }
}

TEST_CASE("right jacobian inverse matches finite differences of the log") {
  std::mt19937 rng(77);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const Twist xi = oracle::random_twist(rng, 2.5, 2.0);
    const Pose3 base = exp_map(xi);
    const Matrix6 analytic = se3_right_jacobian_inverse(xi);
    for (int k = 0; k < 6; ++k) {
      Twist dp = Twist::Zero();
      dp[k] = h;
      const Twist plus = log_map(base.compose(exp_map(dp)));
      const Twist minus = log_map(base.compose(exp_map(-dp)));
      const Twist fd = (plus - minus) / (2.0 * h);
      CHECK((fd - analytic.col(k)).norm() < 1e-6);
    }
  }
}

TEST_CASE("diagonal information is SPD and symmetric") {
  const Information6 info = diagonal_information(0.01, 0.05);
  CHECK((info - info.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(info(0, 0) == doctest::Approx(1.0 / (0.01 * 0.01)));
  CHECK(info(3, 3) == doctest::Approx(1.0 / (0.05 * 0.05)));
  Eigen::SelfAdjointEigenSolver<Matrix6> eig(info);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("rotation fromMatrix projects back onto SO(3)") {
  std::mt19937 rng(31);
  for (int i = 0; i < 100; ++i) {
    const Rotation3 r = oracle::random_pose(rng).rotation();
    Matrix3 noisy = r.matrix();
    noisy(0, 1) += 1e-4;
    const Rotation3 back = Rotation3::fromMatrix(noisy);
    CHECK(rotation_geodesic_deg(r, back) < 0.1);
    CHECK((back.matrix().transpose() * back.matrix() - Matrix3::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}
