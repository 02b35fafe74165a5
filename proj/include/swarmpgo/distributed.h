#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "swarmpgo/backend.h"

namespace swarmpgo {

/// Identifier both endpoints of an edge agree on: the ordered pair of
/// fine-grained node keys recorded when the loop closure was created.
struct EdgeId {
  NodeKey a;
  NodeKey b;
  auto operator<=>(const EdgeId&) const = default;
  static EdgeId canonical(const NodeKey& x, const NodeKey& y) {
    return x <= y ? EdgeId{x, y} : EdgeId{y, x};
  }
};

/// GNC weight updates for an edge are computed by one robot and broadcast;
/// ownership follows the front-end rule (smallest robot id of the pair).
int edge_owner(const NodeKey& a, const NodeKey& b);

struct SessionEdge {
  EdgeId id;
  Edge edge;
};

/// One robot's partition of the cluster problem: its own pose variables plus
/// fixed copies of neighbor public poses (separators). Inter-robot edges
/// appear in both endpoint blocks; costs are attributed to the owner so
/// summing ownedCost over blocks gives the global objective once.
class RobotBlock {
 public:
  RobotBlock() = default;
  RobotBlock(int robot_id, const SolverConfig& config);

  int robotId() const { return robot_id_; }
  void addOwnNode(const NodeKey& key, const Pose3& initial);
  void addEdge(const SessionEdge& edge);
  bool hasEdge(const EdgeId& id) const;
  void setSeparator(const NodeKey& key, const Pose3& value);
  void setWeight(const EdgeId& id, double weight);
  double weight(const EdgeId& id) const;
  bool ownsNode(const NodeKey& key) const { return own_.count(key) > 0; }

  const std::map<NodeKey, Pose3>& estimates() const { return own_; }
  void setEstimate(const NodeKey& key, const Pose3& value);

  /// Own poses incident to inter-robot edges.
  std::map<NodeKey, Pose3> publicPoses() const;

  /// Session anchor: a strong unary prior on one of this robot's nodes,
  /// replacing any previous anchor.
  void setAnchor(const NodeKey& key, const Pose3& value);
  void clearAnchor();

  /// Restricts the local problem to edges whose endpoints belong to the
  /// given robots (this robot is always included); an empty set lifts the
  /// restriction.
  void setActiveRobots(const std::set<int>& robots);

  struct UpdateResult {
    double translation_change = 0.0;
    int gn_iterations = 0;
  };
  /// Minimizes the weighted cost over this robot's poses with separators
  /// held fixed; reports the max translation change against the previous
  /// estimates. Edges whose separator value has not arrived yet are skipped.
  UpdateResult localUpdate();

  /// Information-weighted squared residuals of the loop edges this robot
  /// owns (evaluable ones only).
  std::map<EdgeId, double> ownedResidualSquares() const;

  /// Weighted cost of the edges this robot owns.
  double ownedCost() const;

  const std::vector<SessionEdge>& edges() const { return edges_; }

 private:
  bool edgeActive(const SessionEdge& e) const;
  bool evaluable(const SessionEdge& e, Pose3* xi, Pose3* xj) const;

  int robot_id_ = -1;
  SolverConfig config_;
  std::map<NodeKey, Pose3> own_;
  std::map<NodeKey, Pose3> separators_;
  std::vector<SessionEdge> edges_;
  std::map<EdgeId, double> weights_;
  std::set<NodeKey> public_keys_;
  std::optional<std::pair<NodeKey, Pose3>> anchor_;
  std::set<int> active_robots_;
};

struct DistributedResult {
  std::map<NodeKey, Pose3> estimates;
  std::map<EdgeId, double> weights;
  int rounds = 0;            // full round-robin cycles across the whole session
  int outer_iterations = 0;  // GNC continuation steps
  bool converged = false;
  // Global weighted cost after every single block update, for monotonicity
  // checks; filled only when trace_costs is set.
  std::vector<double> cost_trace;
};

/// In-memory cluster session: robots update in ascending-id round-robin
/// order with public poses exchanged instantly (the Full-communication
/// regime). The inner loop ends when every robot's last translation change
/// is below eps_rel; the outer loop applies owner-computed GNC weight
/// updates until the weights stabilize binary.
DistributedResult solve_distributed(const PoseGraph& global, const SolverConfig& config,
                                    bool trace_costs = false);

}  // namespace swarmpgo
