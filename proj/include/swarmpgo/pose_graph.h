#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmpgo/se3.h"

namespace swarmpgo {

/// Identifies one pose variable: (robot, position along that robot's chain).
struct NodeKey {
  int robot_id = 0;
  int index = 0;
  auto operator<=>(const NodeKey&) const = default;
};

std::string to_string(const NodeKey& key);

enum class EdgeKind { Odometry, PrivateLoop, InterRobotLoop, Prior };

bool is_loop(EdgeKind kind);

struct Edge {
  NodeKey src;
  NodeKey dst;
  EdgeKind kind = EdgeKind::Odometry;
  Pose3 measurement;
  Information6 information = Information6::Identity();
  double gnc_weight = 1.0;  // pinned to 1 for Odometry and Prior
};

/// Multi-robot pose graph: nodes with optional estimates plus measurement
/// edges. Per robot the node indices form a contiguous chain.
class PoseGraph {
 public:
  void addNode(const NodeKey& key);
  void addNode(const NodeKey& key, const Pose3& estimate);
  /// Validates endpoint existence and the per-kind structural invariants.
  void addEdge(const Edge& edge);

  bool hasNode(const NodeKey& key) const { return nodes_.count(key) > 0; }
  bool hasEstimate(const NodeKey& key) const;
  const Pose3& estimate(const NodeKey& key) const;  // throws MissingEstimate
  void setEstimate(const NodeKey& key, const Pose3& value);

  const std::map<NodeKey, std::optional<Pose3>>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<Edge>& edges() { return edges_; }

  std::size_t numNodes() const { return nodes_.size(); }
  std::size_t numEdges() const { return edges_.size(); }

  /// Estimates for all nodes that have one.
  std::map<NodeKey, Pose3> estimates() const;

 private:
  std::map<NodeKey, std::optional<Pose3>> nodes_;
  std::vector<Edge> edges_;
};

/// Residual in tangent coordinates: log(measurement^-1 * (xi^-1 * xj)), or
/// log(measurement^-1 * xi) for priors. Propagates AngleNearPi.
Twist residual(const Edge& edge, const Pose3& xi, const Pose3& xj);

/// Sum over edges of (w_e) * r^T * info * r. Requires every node estimated.
double graph_cost(const PoseGraph& graph, bool use_weights);

/// Fine node -> (coarse representative, offset), with
/// fine estimate = coarse estimate * offset.
struct CoarseMap {
  struct Entry {
    NodeKey representative;
    Pose3 offset;
  };
  std::map<NodeKey, Entry> fine_to_coarse;

  const Entry& at(const NodeKey& key) const { return fine_to_coarse.at(key); }
};

/// Aggregates pose variables along each robot's odometry chain: node 0 opens
/// a representative, and a new one opens at the first node whose cumulative
/// odometric translation since the current representative reaches d meters.
/// Loop and prior edges are retargeted to representatives with measurements
/// conjugated by the stored offsets; loops collapsing onto one representative
/// are dropped; information matrices are carried over unchanged.
std::pair<PoseGraph, CoarseMap> coarsen(const PoseGraph& graph, double distance_m);

/// True iff the measurement is within 0.10 m translation and 10 degrees
/// rotation of the ground-truth relative pose.
bool classify_inlier(const Edge& edge, const std::map<NodeKey, Pose3>& ground_truth);

/// Online version of the coarsening walk, fed one keyframe at a time.
/// Produces exactly the representatives, offsets, and coarse odometry that
/// the batch coarsen() would.
class IncrementalCoarsener {
 public:
  IncrementalCoarsener(int robot_id, double distance_m);

  struct Step {
    NodeKey representative;
    Pose3 offset;                 // representative -> this keyframe
    bool opened_representative = false;
    // Set when a representative opens (except the first): composed odometry
    // from the previous representative, for the coarse odometry edge.
    std::optional<Pose3> coarse_odometry;
    std::optional<NodeKey> previous_representative;
  };

  /// index must advance by one per call; odometry_step is the relative pose
  /// from the previous keyframe (ignored for the first).
  Step addKeyframe(int index, const Pose3& odometry_step);

  const CoarseMap::Entry& assignment(int index) const;
  int robotId() const { return robot_id_; }

 private:
  int robot_id_;
  double distance_m_;
  int next_index_ = 0;
  double accumulated_m_ = 0.0;
  NodeKey current_rep_{};
  Pose3 offset_;  // current representative -> last keyframe
  std::map<int, CoarseMap::Entry> assignments_;
};

}  // namespace swarmpgo
