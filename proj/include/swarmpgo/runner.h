#pragma once

#include <optional>
#include <set>
#include <string>

#include "swarmpgo/distributed.h"
#include "swarmpgo/mission.h"
#include "swarmpgo/netsim.h"

namespace swarmpgo {

enum class SystemMode { Distributed, Centralized };

SystemMode mode_from_string(const std::string& name);
std::string to_string(SystemMode mode);

struct RunConfig {
  SystemMode mode = SystemMode::Distributed;
  Scenario scenario;
  LinkModel link;
  FrontendParams frontend;
  VerificationParams verification;
  SolverConfig solver;

  double coarsen_d_m = 2.0;
  double keyframe_payload_bytes = 50000.0;
  double bow_header_bytes = 16.0;
  double bow_entry_bytes = 12.0;
  double audit_period_s = 15.0;
  double backend_period_s = 10.0;
  double graph_sync_period_s = 5.0;  // centralized pose-graph upload cadence
  double ate_period_s = 10.0;
  double settle_factor = 2.0;        // settling period = factor * mission duration
  double compute_time_s = 0.02;      // virtual time per local optimization step
  double tick_s = 0.05;
  double alignment_barc_sq = 4.0;    // chordal threshold for frame alignment
  std::uint64_t seed = 1;
};

struct AteSample {
  double t = 0.0;
  bool subset = false;  // true while only a subset of robots is initialized
  int n_initialized = 0;
  double ate_m = 0.0;
};

struct LoopRecord {
  double t = 0.0;
  NodeKey src;
  NodeKey dst;
  EdgeKind kind = EdgeKind::InterRobotLoop;
  bool inlier = false;
  int owner = 0;
};

struct SessionRecord {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<int> members;
  int rounds = 0;
  int outer_iterations = 0;
  bool converged = false;
  bool aborted = false;
};

struct RunReport {
  std::vector<AteSample> ate_series;
  std::map<int, double> init_time;
  std::size_t candidates_total = 0;
  std::vector<LoopRecord> loops;
  double inlier_pct = 0.0;
  std::vector<SessionRecord> sessions;
  long total_rounds = 0;        // distributed inner cycles over the whole run
  long total_gn_iterations = 0; // damped steps over the whole run
  long total_outer_iterations = 0;
  int iterations_max = 0;
  double iterations_median = 0.0;
  CommStats comms;
  double final_ate_m = -1.0;
  int coarse_pose_count = 0;
  std::map<NodeKey, Pose3> final_estimates;  // fine keyframes, global frame
  PoseGraph final_graph;                     // coarse multi-robot graph
  std::set<std::pair<NodeKey, NodeKey>> candidate_pairs;
};

/// Virtual-time playback of one mission under one communication scenario.
RunReport run(const Mission& mission, const RunConfig& config);

struct SweepRow {
  double value = 0.0;
  double final_ate_m = 0.0;
  long inner_rounds = 0;
  long outer_iterations = 0;
  long gn_iterations = 0;
};

/// One run per value of "eps_g", "eps_rel", or "d"; the other parameters
/// stay at the base config. SWARMPGO_THREADS caps the fan-out.
std::vector<SweepRow> sweep(const Mission& mission, const RunConfig& base,
                            const std::string& parameter, const std::vector<double>& values);

void write_report_files(const RunReport& report, const Mission& mission,
                        const std::string& out_dir);

}  // namespace swarmpgo
