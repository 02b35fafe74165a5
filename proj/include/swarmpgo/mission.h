#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swarmpgo/frontend.h"
#include "swarmpgo/pose_graph.h"

namespace swarmpgo {

struct LayoutParams {
  std::string type = "loops";  // "loops" or "rendezvous"
  double corridor_m = 40.0;    // trunk corridor length (loops layout)
  double separation_m = 24.0;  // lateral spacing between private circuits
  double overlap_fraction = 0.5;  // trunk fraction shared by every robot
  double speed_mps = 1.0;
  double far_distance_m = 280.0;  // rendezvous layout: distance of the far segment
};

struct OdometryNoiseParams {
  double sigma_rot_deg = 0.3;      // per keyframe step
  double trans_frac = 0.01;        // fraction of step length
  double info_sigma_factor = 2.0;  // conservative noise model on edges
};

struct BowGenParams {
  double cell_m = 5.0;
  double neighborhood_m = 7.0;  // cells within this radius contribute words
  int heading_sectors = 4;
  int words_per_cell = 8;
  int signature_pool = 4096;  // smaller pools create perceptual aliasing
  int vocabulary_size = 1 << 20;
  double observation_noise = 0.10;  // weight mass moved to per-frame words
};

struct MissionParams {
  int n_robots = 3;
  double duration_s = 300.0;
  double keyframe_period_s = 1.0;
  double pose_rate_hz = 10.0;
  LayoutParams layout;
  OdometryNoiseParams odometry;
  BowGenParams bow;
  std::uint64_t seed = 1;
};

struct RobotData {
  std::vector<double> pose_times;
  std::vector<Pose3> gt_poses;        // at pose_rate
  std::vector<int> keyframe_indices;  // into gt_poses
  std::vector<Pose3> odometry;        // keyframe k-1 -> k, size keyframes-1
  std::vector<double> odometry_step_m;
};

class Mission {
 public:
  MissionParams params;
  std::vector<RobotData> robots;

  int keyframeCount(int robot) const;
  double keyframeTime(int robot, int k) const;
  const Pose3& keyframeGt(int robot, int k) const;
  /// Ground-truth position at time t (clamped to the trajectory ends).
  Vector3 positionAt(int robot, double t) const;
  std::map<NodeKey, Pose3> groundTruthKeyframes() const;
  /// Number of keyframes emitted by time t.
  int keyframesBefore(int robot, double t) const;
};

/// Deterministic synthetic missions: robots traverse overlapping circuits on
/// a plane; odometry gets per-step drift noise. Throws InvalidLayout on
/// unknown layout types or impossible dimensions.
Mission generate_mission(const MissionParams& params);

void save_mission(const Mission& mission, const std::string& path);
std::string mission_to_string(const Mission& mission);
Mission load_mission(const std::string& path);

/// Map cells emit stable sparse word signatures (drawn from a limited
/// signature pool, so distinct places can alias) plus per-observation noise;
/// co-located same-heading frames score high.
class SyntheticBowGenerator {
 public:
  SyntheticBowGenerator(const BowGenParams& params, std::uint64_t seed);
  BowVector generate(int robot, int frame_index, const Pose3& gt_pose) const;

 private:
  BowGenParams params_;
  std::uint64_t seed_;
};

/// RMSE between the estimate and reference translations after one joint
/// rigid alignment (SVD orthogonal projection with determinant correction,
/// no scale) across all robots. Requires >= 3 common keys with
/// non-collinear reference positions.
double compute_ate(const std::map<NodeKey, Pose3>& estimate,
                   const std::map<NodeKey, Pose3>& reference);

}  // namespace swarmpgo
