#include "swarmpgo/mission.h"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace swarmpgo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Piecewise-linear trajectory in the plane with heading along the direction
// of travel.
struct TimedPath {
  std::vector<double> times;
  std::vector<Vector3> points;

  Pose3 sample(double t) const {
    if (times.empty()) return Pose3();
    if (t <= times.front()) t = times.front();
    if (t >= times.back()) t = times.back();
    std::size_t hi = 1;
    while (hi + 1 < times.size() && times[hi] < t) ++hi;
    const std::size_t lo = hi - 1;
    const double span = times[hi] - times[lo];
    const double u = span > 1e-12 ? (t - times[lo]) / span : 0.0;
    const Vector3 p = points[lo] + u * (points[hi] - points[lo]);
    // Heading of the current (or last moving) segment.
    Vector3 dir = points[hi] - points[lo];
    std::size_t back = lo;
    while (dir.head<2>().norm() < 1e-9 && back > 0) {
      dir = points[back] - points[back - 1];
      --back;
    }
    double yaw = 0.0;
    if (dir.head<2>().norm() > 1e-9) {
      yaw = std::atan2(dir.y(), dir.x());
    }
    return Pose3(Rotation3::axisAngle(Vector3(0, 0, 1), yaw), p);
  }
};

// Closed circuit traversed at constant speed, unrolled over the duration.
TimedPath unroll_circuit(const std::vector<Vector3>& loop, double speed, double duration,
                         double start_offset_m) {
  std::vector<double> seg_len;
  double lap = 0.0;
  for (std::size_t k = 0; k + 1 < loop.size(); ++k) {
    const double l = (loop[k + 1] - loop[k]).norm();
    seg_len.push_back(l);
    lap += l;
  }
  if (lap < 1e-6) {
    throw InvalidLayout("degenerate circuit");
  }
  TimedPath path;
  double s = std::fmod(start_offset_m, lap);
  double t = 0.0;
  // Locate the segment containing the start offset.
  std::size_t seg = 0;
  double into = s;
  while (into > seg_len[seg]) {
    into -= seg_len[seg];
    seg = (seg + 1) % seg_len.size();
  }
  Vector3 pos =
      loop[seg] + (seg_len[seg] > 1e-12 ? into / seg_len[seg] : 0.0) * (loop[seg + 1] - loop[seg]);
  path.times.push_back(0.0);
  path.points.push_back(pos);
  while (t < duration) {
    const double remain = seg_len[seg] - into;
    const double dt = remain / speed;
    t += dt;
    seg = (seg + 1) % seg_len.size();
    into = 0.0;
    path.times.push_back(t);
    path.points.push_back(loop[seg]);
  }
  return path;
}

std::vector<TimedPath> build_loops_layout(const MissionParams& params) {
  const auto& lay = params.layout;
  if (lay.corridor_m <= 0 || lay.separation_m <= 0) {
    throw InvalidLayout("corridor and separation must be positive");
  }
  const double shared = lay.overlap_fraction * lay.corridor_m;
  std::vector<TimedPath> paths;
  for (int r = 0; r < params.n_robots; ++r) {
    const double y = (r + 1) * lay.separation_m;
    const double h = 0.5 * lay.separation_m;
    std::vector<Vector3> loop;
    if (shared > 1e-9) {
      // Down to the trunk, along it, then around the private rectangle.
      loop = {Vector3(0, y, 0),          Vector3(0, 0, 0),
              Vector3(shared, 0, 0),     Vector3(shared, y, 0),
              Vector3(lay.corridor_m, y, 0), Vector3(lay.corridor_m, y + h, 0),
              Vector3(0, y + h, 0),      Vector3(0, y, 0)};
    } else {
      loop = {Vector3(0, y, 0), Vector3(lay.corridor_m, y, 0),
              Vector3(lay.corridor_m, y + h, 0), Vector3(0, y + h, 0), Vector3(0, y, 0)};
    }
    double lap = 0.0;
    for (std::size_t k = 0; k + 1 < loop.size(); ++k) lap += (loop[k + 1] - loop[k]).norm();
    paths.push_back(
        unroll_circuit(loop, lay.speed_mps, params.duration_s, r * lap / params.n_robots));
  }
  return paths;
}

// Scripted rendezvous: robot 0 patrols a ring near the origin, robots 1 and 2
// share a segment early, travel far along separated lanes, meet on a far
// shared segment, and return late; any further robots loop near the base and
// only cross robot 0's patrol at the very end.
std::vector<TimedPath> build_rendezvous_layout(const MissionParams& params) {
  if (params.n_robots < 3) {
    throw InvalidLayout("rendezvous layout needs at least 3 robots");
  }
  const double d = params.duration_s;
  const double far = params.layout.far_distance_m;
  std::vector<TimedPath> paths;

  {
    // Robot 0: rectangular patrol ring, bottom edge on y = 0 heading +x.
    std::vector<Vector3> ring = {Vector3(-20, 0, 0), Vector3(20, 0, 0), Vector3(20, 12, 0),
                                 Vector3(-20, 12, 0), Vector3(-20, 0, 0)};
    paths.push_back(unroll_circuit(ring, params.layout.speed_mps, d, 0.0));
  }

  for (int m = 0; m < 2; ++m) {
    const double lane = m == 0 ? 35.0 : -35.0;
    const double stagger = m == 0 ? 0.0 : 0.02 * d;
    TimedPath p;
    auto add = [&](double t, double x, double y) {
      p.times.push_back(t);
      p.points.push_back(Vector3(x, y, 0));
    };
    // Early shared pass over robot 0's bottom edge.
    add(0.00 * d + stagger, -20, 0);
    add(0.08 * d + stagger, 20, 0);
    // Outbound along a private lane.
    add(0.16 * d + stagger, 60, lane);
    add(0.38 * d + stagger, far - 30, lane);
    // Far shared segment, both headed +x on y = 0.
    add(0.42 * d + stagger, far, 0);
    add(0.50 * d + stagger, far + 40, 0);
    // Return along an upper lane (opposite heading, no revisits).
    add(0.56 * d + stagger, far - 30, lane + 14);
    add(0.78 * d + stagger, 60, lane + 14);
    add(0.86 * d + stagger, 20, 1);
    add(1.00 * d + stagger, -20, 1);
    paths.push_back(std::move(p));
  }

  for (int r = 3; r < params.n_robots; ++r) {
    // Latecomer: private ring around (0, -50), joining robot 0's edge late.
    TimedPath p;
    auto add = [&](double t, double x, double y) {
      p.times.push_back(t);
      p.points.push_back(Vector3(x, y, 0));
    };
    const std::vector<Vector3> ring = {Vector3(-12, -50, 0), Vector3(12, -50, 0),
                                       Vector3(12, -38, 0), Vector3(-12, -38, 0)};
    const double t_join = 0.86 * d;
    const double lap_t = t_join / 6.0;
    for (int lap = 0; lap < 6; ++lap) {
      for (std::size_t k = 0; k < ring.size(); ++k) {
        add(lap * lap_t + lap_t * static_cast<double>(k) / ring.size(), ring[k].x(),
            ring[k].y());
      }
    }
    add(t_join, -20, 0);
    add(0.96 * d, 20, 0);
    add(1.00 * d, 20, 8);
    paths.push_back(std::move(p));
  }
  return paths;
}

}  // namespace

int Mission::keyframeCount(int robot) const {
  return static_cast<int>(robots.at(robot).keyframe_indices.size());
}

double Mission::keyframeTime(int robot, int k) const {
  const auto& data = robots.at(robot);
  return data.pose_times.at(data.keyframe_indices.at(k));
}

const Pose3& Mission::keyframeGt(int robot, int k) const {
  const auto& data = robots.at(robot);
  return data.gt_poses.at(data.keyframe_indices.at(k));
}

Vector3 Mission::positionAt(int robot, double t) const {
  const auto& data = robots.at(robot);
  if (data.pose_times.empty()) {
    throw MissingPosition("robot " + std::to_string(robot) + " has no trajectory");
  }
  if (t <= data.pose_times.front()) return data.gt_poses.front().translation();
  if (t >= data.pose_times.back()) return data.gt_poses.back().translation();
  const double rate = params.pose_rate_hz;
  const std::size_t idx = std::min(data.pose_times.size() - 2,
                                   static_cast<std::size_t>(std::floor(t * rate)));
  const double u = (t - data.pose_times[idx]) /
                   (data.pose_times[idx + 1] - data.pose_times[idx]);
  return data.gt_poses[idx].translation() +
         u * (data.gt_poses[idx + 1].translation() - data.gt_poses[idx].translation());
}

std::map<NodeKey, Pose3> Mission::groundTruthKeyframes() const {
  std::map<NodeKey, Pose3> out;
  for (int r = 0; r < static_cast<int>(robots.size()); ++r) {
    for (int k = 0; k < keyframeCount(r); ++k) {
      out.emplace(NodeKey{r, k}, keyframeGt(r, k));
    }
  }
  return out;
}

int Mission::keyframesBefore(int robot, double t) const {
  const auto& data = robots.at(robot);
  int n = 0;
  for (int idx : data.keyframe_indices) {
    if (data.pose_times[idx] <= t) {
      ++n;
    } else {
      break;
    }
  }
  return n;
}

Mission generate_mission(const MissionParams& params) {
  if (params.n_robots < 1) {
    throw InvalidLayout("need at least one robot");
  }
  std::vector<TimedPath> paths;
  if (params.layout.type == "loops") {
    paths = build_loops_layout(params);
  } else if (params.layout.type == "rendezvous") {
    paths = build_rendezvous_layout(params);
  } else {
    throw InvalidLayout("unknown layout type: " + params.layout.type);
  }

  Mission mission;
  mission.params = params;
  std::mt19937_64 rng(mix(params.seed, 0x6d697373696f6eULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = 1.0 / params.pose_rate_hz;
  const int kf_stride =
      std::max(1, static_cast<int>(std::lround(params.keyframe_period_s / dt)));

  for (int r = 0; r < params.n_robots; ++r) {
    RobotData data;
    for (double t = 0.0; t <= params.duration_s + 1e-9; t += dt) {
      data.pose_times.push_back(t);
      data.gt_poses.push_back(paths[r].sample(t));
    }
    for (int idx = 0; idx < static_cast<int>(data.gt_poses.size()); idx += kf_stride) {
      data.keyframe_indices.push_back(idx);
    }
    const double sigma_rot = params.odometry.sigma_rot_deg * M_PI / 180.0;
    for (std::size_t k = 1; k < data.keyframe_indices.size(); ++k) {
      const Pose3& prev = data.gt_poses[data.keyframe_indices[k - 1]];
      const Pose3& curr = data.gt_poses[data.keyframe_indices[k]];
      const Pose3 gt_rel = between(prev, curr);
      const double step = gt_rel.translation().norm();
      const double sigma_trans = params.odometry.trans_frac * std::max(step, 1e-3);
      Twist noise;
      noise << sigma_rot * gauss(rng), sigma_rot * gauss(rng), sigma_rot * gauss(rng),
          sigma_trans * gauss(rng), sigma_trans * gauss(rng), sigma_trans * gauss(rng);
      data.odometry.push_back(gt_rel.compose(exp_map(noise)));
      data.odometry_step_m.push_back(step);
    }
    mission.robots.push_back(std::move(data));
  }
  return mission;
}

SyntheticBowGenerator::SyntheticBowGenerator(const BowGenParams& params, std::uint64_t seed)
    : params_(params), seed_(seed) {}

BowVector SyntheticBowGenerator::generate(int robot, int frame_index,
                                          const Pose3& gt_pose) const {
  const Vector3 p = gt_pose.translation();
  const Matrix3 rot = gt_pose.rotation().matrix();
  double yaw = std::atan2(rot(1, 0), rot(0, 0));
  if (yaw < 0) yaw += 2.0 * M_PI;
  const int sector =
      std::min(params_.heading_sectors - 1,
               static_cast<int>(yaw / (2.0 * M_PI) * params_.heading_sectors));

  std::map<int, double> weights;
  const double cell = params_.cell_m;
  const double radius = params_.neighborhood_m;
  const int lo_x = static_cast<int>(std::floor((p.x() - radius) / cell));
  const int hi_x = static_cast<int>(std::floor((p.x() + radius) / cell));
  const int lo_y = static_cast<int>(std::floor((p.y() - radius) / cell));
  const int hi_y = static_cast<int>(std::floor((p.y() + radius) / cell));
  for (int cx = lo_x; cx <= hi_x; ++cx) {
    for (int cy = lo_y; cy <= hi_y; ++cy) {
      const Eigen::Vector2d center((cx + 0.5) * cell, (cy + 0.5) * cell);
      const double dist = (p.head<2>() - center).norm();
      const double w = 1.0 - dist / radius;
      if (w <= 0.0) continue;
      const std::uint64_t cell_hash =
          mix(mix(seed_, static_cast<std::uint64_t>(static_cast<std::int64_t>(cx) + (1 << 20))),
              mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(cy) + (1 << 20)),
                  static_cast<std::uint64_t>(sector)));
      const std::uint64_t signature = cell_hash % static_cast<std::uint64_t>(
                                                      std::max(1, params_.signature_pool));
      for (int k = 0; k < params_.words_per_cell; ++k) {
        const int word = static_cast<int>(
            mix(mix(0x776f7264ULL, signature), static_cast<std::uint64_t>(k)) %
            static_cast<std::uint64_t>(params_.vocabulary_size));
        weights[word] += w / params_.words_per_cell;
      }
    }
  }
  // Per-observation noise: move a fraction of the mass to random words.
  std::mt19937_64 rng(mix(mix(seed_, 0x6f6273ULL),
                          mix(static_cast<std::uint64_t>(robot),
                              static_cast<std::uint64_t>(frame_index))));
  std::uniform_int_distribution<int> word_dist(0, params_.vocabulary_size - 1);
  double total = 0.0;
  for (auto& [word, w] : weights) {
    w *= 1.0 - params_.observation_noise;
    total += w;
  }
  const double noise_mass =
      total / std::max(1e-12, 1.0 - params_.observation_noise) * params_.observation_noise;
  for (int k = 0; k < 4; ++k) {
    weights[word_dist(rng)] += noise_mass / 4.0;
  }

  BowVector out;
  out.frame_index = frame_index;
  double sum = 0.0;
  for (const auto& [word, w] : weights) sum += w;
  for (const auto& [word, w] : weights) {
    if (w > 0.0) out.weights.emplace_back(word, w / sum);
  }
  return out;
}

double compute_ate(const std::map<NodeKey, Pose3>& estimate,
                   const std::map<NodeKey, Pose3>& reference) {
  std::vector<Vector3> est;
  std::vector<Vector3> ref;
  for (const auto& [key, pose] : estimate) {
    auto it = reference.find(key);
    if (it == reference.end()) continue;
    est.push_back(pose.translation());
    ref.push_back(it->second.translation());
  }
  const std::size_t n = est.size();
  if (n < 3) {
    throw DegenerateAlignment("fewer than 3 common keys");
  }
  Vector3 ce = Vector3::Zero();
  Vector3 cr = Vector3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    ce += est[k];
    cr += ref[k];
  }
  ce /= static_cast<double>(n);
  cr /= static_cast<double>(n);
  Matrix3 h = Matrix3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    h += (est[k] - ce) * (ref[k] - cr).transpose();
  }
  Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(1) <= 1e-9 * std::max(1.0, sv(0))) {
    throw DegenerateAlignment("reference positions are collinear");
  }
  Matrix3 d = Matrix3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Matrix3 rot = svd.matrixV() * d * svd.matrixU().transpose();
  double sq_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sq_sum += (rot * (est[k] - ce) + cr - ref[k]).squaredNorm();
  }
  return std::sqrt(sq_sum / static_cast<double>(n));
}

namespace {

void write_pose_row(std::ostream& out, double t, const Pose3& p) {
  const auto& tr = p.translation();
  const auto& r = p.rotation();
  out << t << " " << tr.x() << " " << tr.y() << " " << tr.z() << " " << r.x() << " "
      << r.y() << " " << r.z() << " " << r.w() << "\n";
}

Pose3 read_pose_fields(std::istringstream& in, double* t) {
  double tx, ty, tz, qx, qy, qz, qw;
  in >> *t >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
  return Pose3(Rotation3::fromQuaternion(qw, qx, qy, qz), Vector3(tx, ty, tz));
}

}  // namespace

std::string mission_to_string(const Mission& mission) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto& p = mission.params;
  out << "SWARMPGO_MISSION v1\n";
  out << "param n_robots " << p.n_robots << "\n";
  out << "param duration_s " << p.duration_s << "\n";
  out << "param keyframe_period_s " << p.keyframe_period_s << "\n";
  out << "param pose_rate_hz " << p.pose_rate_hz << "\n";
  out << "param seed " << p.seed << "\n";
  out << "param layout.type " << p.layout.type << "\n";
  out << "param layout.corridor_m " << p.layout.corridor_m << "\n";
  out << "param layout.separation_m " << p.layout.separation_m << "\n";
  out << "param layout.overlap_fraction " << p.layout.overlap_fraction << "\n";
  out << "param layout.speed_mps " << p.layout.speed_mps << "\n";
  out << "param layout.far_distance_m " << p.layout.far_distance_m << "\n";
  out << "param odometry.sigma_rot_deg " << p.odometry.sigma_rot_deg << "\n";
  out << "param odometry.trans_frac " << p.odometry.trans_frac << "\n";
  out << "param odometry.info_sigma_factor " << p.odometry.info_sigma_factor << "\n";
  out << "param bow.cell_m " << p.bow.cell_m << "\n";
  out << "param bow.neighborhood_m " << p.bow.neighborhood_m << "\n";
  out << "param bow.heading_sectors " << p.bow.heading_sectors << "\n";
  out << "param bow.words_per_cell " << p.bow.words_per_cell << "\n";
  out << "param bow.signature_pool " << p.bow.signature_pool << "\n";
  out << "param bow.vocabulary_size " << p.bow.vocabulary_size << "\n";
  out << "param bow.observation_noise " << p.bow.observation_noise << "\n";
  for (int r = 0; r < p.n_robots; ++r) {
    const auto& data = mission.robots[r];
    out << "ROBOT " << r << " POSES " << data.gt_poses.size() << "\n";
    for (std::size_t k = 0; k < data.gt_poses.size(); ++k) {
      write_pose_row(out, data.pose_times[k], data.gt_poses[k]);
    }
    out << "ROBOT " << r << " ODOM " << data.odometry.size() << "\n";
    for (std::size_t k = 0; k < data.odometry.size(); ++k) {
      write_pose_row(out, data.odometry_step_m[k], data.odometry[k]);
    }
  }
  return out.str();
}

void save_mission(const Mission& mission, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << mission_to_string(mission);
}

Mission load_mission(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  std::string line;
  std::getline(in, line);
  if (line != "SWARMPGO_MISSION v1") {
    throw ConfigMismatch("unrecognized mission file header: " + line);
  }
  Mission mission;
  auto& p = mission.params;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "param") {
      std::string name;
      row >> name;
      if (name == "n_robots") row >> p.n_robots;
      else if (name == "duration_s") row >> p.duration_s;
      else if (name == "keyframe_period_s") row >> p.keyframe_period_s;
      else if (name == "pose_rate_hz") row >> p.pose_rate_hz;
      else if (name == "seed") row >> p.seed;
      else if (name == "layout.type") row >> p.layout.type;
      else if (name == "layout.corridor_m") row >> p.layout.corridor_m;
      else if (name == "layout.separation_m") row >> p.layout.separation_m;
      else if (name == "layout.overlap_fraction") row >> p.layout.overlap_fraction;
      else if (name == "layout.speed_mps") row >> p.layout.speed_mps;
      else if (name == "layout.far_distance_m") row >> p.layout.far_distance_m;
      else if (name == "odometry.sigma_rot_deg") row >> p.odometry.sigma_rot_deg;
      else if (name == "odometry.trans_frac") row >> p.odometry.trans_frac;
      else if (name == "odometry.info_sigma_factor") row >> p.odometry.info_sigma_factor;
      else if (name == "bow.cell_m") row >> p.bow.cell_m;
      else if (name == "bow.neighborhood_m") row >> p.bow.neighborhood_m;
      else if (name == "bow.heading_sectors") row >> p.bow.heading_sectors;
      else if (name == "bow.words_per_cell") row >> p.bow.words_per_cell;
      else if (name == "bow.signature_pool") row >> p.bow.signature_pool;
      else if (name == "bow.vocabulary_size") row >> p.bow.vocabulary_size;
      else if (name == "bow.observation_noise") row >> p.bow.observation_noise;
    } else if (tag == "ROBOT") {
      int robot;
      std::string kind;
      std::size_t count;
      row >> robot >> kind >> count;
      if (static_cast<int>(mission.robots.size()) <= robot) {
        mission.robots.resize(robot + 1);
      }
      auto& data = mission.robots[robot];
      for (std::size_t k = 0; k < count; ++k) {
        std::getline(in, line);
        std::istringstream pose_row(line);
        double first;
        const Pose3 pose = read_pose_fields(pose_row, &first);
        if (kind == "POSES") {
          data.pose_times.push_back(first);
          data.gt_poses.push_back(pose);
        } else {
          data.odometry_step_m.push_back(first);
          data.odometry.push_back(pose);
        }
      }
    }
  }
  // Rebuild keyframe indices from the cadence parameters.
  const double dt = 1.0 / p.pose_rate_hz;
  const int kf_stride = std::max(1, static_cast<int>(std::lround(p.keyframe_period_s / dt)));
  for (auto& data : mission.robots) {
    for (int idx = 0; idx < static_cast<int>(data.gt_poses.size()); idx += kf_stride) {
      data.keyframe_indices.push_back(idx);
    }
  }
  return mission;
}

}  // namespace swarmpgo
