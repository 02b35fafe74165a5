#include <doctest.h>

#include <Eigen/Geometry>
#include <cstdio>
#include <random>

#include "oracles.h"
#include "swarmpgo/mission.h"

using namespace swarmpgo;

TEST_CASE("zero-noise odometry composes exactly to ground truth") {
  MissionParams mp;
  mp.n_robots = 1;
  mp.duration_s = 90.0;
  mp.odometry.sigma_rot_deg = 0.0;
  mp.odometry.trans_frac = 0.0;
  const Mission mission = generate_mission(mp);
  Pose3 pose = mission.keyframeGt(0, 0);
  for (int k = 1; k < mission.keyframeCount(0); ++k) {
    pose = pose.compose(mission.robots[0].odometry[k - 1]);
    CHECK(pose.isApprox(mission.keyframeGt(0, k), 1e-9));
  }
}

TEST_CASE("zero overlap means no co-visible inter-robot pairs") {
  MissionParams mp;
  mp.n_robots = 3;
  mp.duration_s = 150.0;
  mp.layout.overlap_fraction = 0.0;
  const Mission mission = generate_mission(mp);
  const double r_cov = 10.0;
  for (int a = 0; a < mp.n_robots; ++a) {
    for (int b = a + 1; b < mp.n_robots; ++b) {
      for (int i = 0; i < mission.keyframeCount(a); ++i) {
        for (int j = 0; j < mission.keyframeCount(b); ++j) {
          CHECK(translation_distance(mission.keyframeGt(a, i), mission.keyframeGt(b, j)) >
                r_cov);
        }
      }
    }
  }
}

TEST_CASE("positive overlap produces co-visible inter-robot pairs") {
  MissionParams mp;
  mp.n_robots = 2;
  mp.duration_s = 300.0;
  mp.layout.corridor_m = 30.0;
  mp.layout.separation_m = 24.0;
  mp.layout.overlap_fraction = 0.5;
  const Mission mission = generate_mission(mp);
  int covisible = 0;
  for (int i = 0; i < mission.keyframeCount(0); ++i) {
    for (int j = 0; j < mission.keyframeCount(1); ++j) {
      const auto& a = mission.keyframeGt(0, i);
      const auto& b = mission.keyframeGt(1, j);
      if (translation_distance(a, b) <= 10.0 &&
          rotation_geodesic_deg(a.rotation(), b.rotation()) <= 45.0) {
        ++covisible;
      }
    }
  }
  CHECK(covisible > 10);
}

TEST_CASE("fixed seed regenerates a byte-identical mission") {
  MissionParams mp;
  mp.n_robots = 2;
  mp.duration_s = 60.0;
  mp.seed = 99;
  const std::string a = mission_to_string(generate_mission(mp));
  const std::string b = mission_to_string(generate_mission(mp));
  CHECK(a == b);
  mp.seed = 100;
  CHECK(mission_to_string(generate_mission(mp)) != a);
}

TEST_CASE("mission save and load round trip") {
  MissionParams mp;
  mp.n_robots = 2;
  mp.duration_s = 45.0;
  mp.layout.type = "loops";
  const Mission mission = generate_mission(mp);
  const std::string path = "/tmp/swarmpgo_mission_test.txt";
  save_mission(mission, path);
  const Mission back = load_mission(path);
  CHECK(mission_to_string(back) == mission_to_string(mission));
  CHECK(back.keyframeCount(0) == mission.keyframeCount(0));
  std::remove(path.c_str());
}

TEST_CASE("rendezvous layout has the intended phase structure") {
  MissionParams mp;
  mp.n_robots = 4;
  mp.duration_s = 400.0;
  mp.layout.type = "rendezvous";
  const Mission mission = generate_mission(mp);
  // Movers are far from the origin mid-mission and back at the end.
  const Vector3 mid1 = mission.positionAt(1, 0.45 * mp.duration_s);
  CHECK(mid1.norm() > 150.0);
  CHECK(mission.positionAt(1, 0.99 * mp.duration_s).norm() < 60.0);
  // Robot 0 stays near the origin throughout.
  for (double t = 0; t < mp.duration_s; t += 25.0) {
    CHECK(mission.positionAt(0, t).norm() < 40.0);
  }
  // Movers meet on the far segment: within co-visibility range of the same
  // places (compare keyframe positions across robots 1 and 2 out there).
  int far_covisible = 0;
  for (int i = 0; i < mission.keyframeCount(1); ++i) {
    const auto& a = mission.keyframeGt(1, i);
    if (a.translation().norm() < 200.0) continue;
    for (int j = 0; j < mission.keyframeCount(2); ++j) {
      const auto& b = mission.keyframeGt(2, j);
      if (translation_distance(a, b) <= 10.0 &&
          rotation_geodesic_deg(a.rotation(), b.rotation()) <= 45.0) {
        ++far_covisible;
      }
    }
  }
  CHECK(far_covisible > 5);
}

TEST_CASE("synthetic bow scores are high when co-located and low when apart") {
  BowGenParams bp;
  const SyntheticBowGenerator gen(bp, 7);
  const Pose3 here(Rotation3::axisAngle(Vector3(0, 0, 1), 0.1), Vector3(10, 20, 0));
  const Pose3 near(Rotation3::axisAngle(Vector3(0, 0, 1), 0.15), Vector3(11, 20.5, 0));
  const Pose3 far(Rotation3::axisAngle(Vector3(0, 0, 1), 0.1), Vector3(700, -300, 0));
  const BowVector a = gen.generate(0, 0, here);
  const BowVector b = gen.generate(1, 30, near);
  const BowVector c = gen.generate(1, 60, far);
  CHECK(bow_similarity(a, b) > 0.6);
  CHECK(bow_similarity(a, c) < 0.3);
  // Weights normalized.
  double sum = 0.0;
  for (const auto& [w, v] : a.weights) {
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  // Deterministic per (robot, frame, pose).
  const BowVector a2 = gen.generate(0, 0, here);
  CHECK(a.weights == a2.weights);
}

TEST_CASE("heading direction gates the synthetic bow score") {
  BowGenParams bp;
  const SyntheticBowGenerator gen(bp, 7);
  const Pose3 east(Rotation3::axisAngle(Vector3(0, 0, 1), 0.0), Vector3(10, 20, 0));
  const Pose3 west(Rotation3::axisAngle(Vector3(0, 0, 1), M_PI), Vector3(10, 20, 0));
  const BowVector a = gen.generate(0, 0, east);
  const BowVector b = gen.generate(1, 30, west);
  CHECK(bow_similarity(a, b) < 0.3);
}

TEST_CASE("compute_ate basics and rigid invariance") {
  std::mt19937 rng(3);
  std::map<NodeKey, Pose3> ref;
  for (int k = 0; k < 40; ++k) {
    ref[NodeKey{0, k}] = oracle::random_pose(rng, 2.0, 20.0);
  }
  CHECK(compute_ate(ref, ref) == doctest::Approx(0.0));
  const Pose3 rigid = oracle::random_pose(rng, 2.0, 50.0);
  std::map<NodeKey, Pose3> moved;
  for (const auto& [key, pose] : ref) {
    moved[key] = rigid.compose(pose);
  }
  CHECK(compute_ate(moved, ref) < 1e-9);
  // Invariance: applying any rigid transform leaves the ATE unchanged.
  std::map<NodeKey, Pose3> noisy = ref;
  noisy[NodeKey{0, 3}] =
      Pose3(ref[NodeKey{0, 3}].rotation(), ref[NodeKey{0, 3}].translation() + Vector3(1, 0, 0));
  const double base = compute_ate(noisy, ref);
  std::map<NodeKey, Pose3> noisy_moved;
  for (const auto& [key, pose] : noisy) {
    noisy_moved[key] = rigid.compose(pose);
  }
  CHECK(compute_ate(noisy_moved, ref) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("compute_ate matches the Eigen umeyama oracle") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 30);
    std::map<NodeKey, Pose3> est;
    std::map<NodeKey, Pose3> ref;
    Eigen::MatrixXd src(3, n);
    Eigen::MatrixXd dst(3, n);
    for (int k = 0; k < n; ++k) {
      const Pose3 r = oracle::random_pose(rng, 2.0, 10.0);
      const Pose3 e = oracle::random_pose(rng, 2.0, 10.0);
      ref[NodeKey{0, k}] = r;
      est[NodeKey{0, k}] = e;
      src.col(k) = e.translation();
      dst.col(k) = r.translation();
    }
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    double sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector3d aligned =
          t.topLeftCorner<3, 3>() * src.col(k) + t.topRightCorner<3, 1>();
      sq += (aligned - dst.col(k)).squaredNorm();
    }
    const double expect = std::sqrt(sq / n);
    CHECK(compute_ate(est, ref) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("compute_ate rejects degenerate input") {
  std::map<NodeKey, Pose3> ref;
  std::map<NodeKey, Pose3> est;
  ref[NodeKey{0, 0}] = Pose3();
  ref[NodeKey{0, 1}] = Pose3(Rotation3(), Vector3(1, 0, 0));
  est = ref;
  CHECK_THROWS_AS(compute_ate(est, ref), DegenerateAlignment);  // < 3 keys
  // Collinear reference.
  for (int k = 0; k < 10; ++k) {
    ref[NodeKey{0, k}] = Pose3(Rotation3(), Vector3(k, 0, 0));
    est[NodeKey{0, k}] = Pose3(Rotation3(), Vector3(k, 0.1 * k, 0));
  }
  CHECK_THROWS_AS(compute_ate(est, ref), DegenerateAlignment);
}

TEST_CASE("square with one displaced pose matches the small-case oracle") {
  std::map<NodeKey, Pose3> ref;
  ref[NodeKey{0, 0}] = Pose3(Rotation3(), Vector3(0, 0, 0));
  ref[NodeKey{0, 1}] = Pose3(Rotation3(), Vector3(1, 0, 0));
  ref[NodeKey{0, 2}] = Pose3(Rotation3(), Vector3(1, 1, 0));
  ref[NodeKey{0, 3}] = Pose3(Rotation3(), Vector3(0, 1, 0));
  std::map<NodeKey, Pose3> est = ref;
  est[NodeKey{0, 2}] = Pose3(Rotation3(), Vector3(1, 2, 0));  // 1 m displaced
  Eigen::MatrixXd src(3, 4);
  Eigen::MatrixXd dst(3, 4);
  for (int k = 0; k < 4; ++k) {
    src.col(k) = est[NodeKey{0, k}].translation();
    dst.col(k) = ref[NodeKey{0, k}].translation();
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  double sq = 0.0;
  for (int k = 0; k < 4; ++k) {
    sq += (t.topLeftCorner<3, 3>() * src.col(k) + t.topRightCorner<3, 1>() - dst.col(k))
              .squaredNorm();
  }
  CHECK(compute_ate(est, ref) == doctest::Approx(std::sqrt(sq / 4)).epsilon(1e-9));
}
