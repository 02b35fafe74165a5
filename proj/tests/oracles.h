#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they are used to check.

#include <Eigen/Core>
#include <random>

#include "swarmpgo/se3.h"

namespace oracle {

inline Eigen::Matrix4d twist_hat(const swarmpgo::Twist& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 1) = -xi[2];
  m(0, 2) = xi[1];
  m(1, 0) = xi[2];
  m(1, 2) = -xi[0];
  m(2, 0) = -xi[1];
  m(2, 1) = xi[0];
  m.topRightCorner<3, 1>() = xi.tail<3>();
  return m;
}

// Matrix exponential by scaling-and-squaring over the plain Taylor series.
inline Eigen::Matrix4d expm_series(const Eigen::Matrix4d& a) {
  int squarings = 0;
  Eigen::Matrix4d scaled = a;
  while (scaled.cwiseAbs().maxCoeff() > 0.25) {
    scaled *= 0.5;
    ++squarings;
  }
  Eigen::Matrix4d result = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k < 40; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }
  return result;
}

inline swarmpgo::Pose3 random_pose(std::mt19937& rng, double max_angle = 3.0,
                                   double box = 10.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, max_angle);
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
  } while (axis.norm() < 1e-6);
  const double angle = ang(rng);
  const Eigen::Vector3d t(box * unit(rng), box * unit(rng), box * unit(rng));
  return swarmpgo::Pose3(swarmpgo::Rotation3::axisAngle(axis, angle), t);
}

inline swarmpgo::Twist random_twist(std::mt19937& rng, double max_angle = 3.0,
                                    double box = 10.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::Vector3d omega;
  do {
    omega = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
  } while (omega.norm() < 1e-9);
  omega *= max_angle * std::abs(unit(rng)) / omega.norm();
  swarmpgo::Twist xi;
  xi.head<3>() = omega;
  xi.tail<3>() = Eigen::Vector3d(box * unit(rng), box * unit(rng), box * unit(rng));
  return xi;
}

}  // namespace oracle
