#include "swarmpgo/distributed.h"

#include <algorithm>
#include <cmath>

#include "gauss_newton.h"

namespace swarmpgo {

int edge_owner(const NodeKey& a, const NodeKey& b) {
  return std::min(a.robot_id, b.robot_id);
}

RobotBlock::RobotBlock(int robot_id, const SolverConfig& config)
    : robot_id_(robot_id), config_(config) {}

void RobotBlock::addOwnNode(const NodeKey& key, const Pose3& initial) {
  own_[key] = initial;
}

void RobotBlock::addEdge(const SessionEdge& edge) {
  edges_.push_back(edge);
  weights_.emplace(edge.id, edge.edge.gnc_weight);
  const bool src_own = edge.edge.src.robot_id == robot_id_;
  const bool dst_own = edge.edge.dst.robot_id == robot_id_;
  if (src_own != dst_own) {
    public_keys_.insert(src_own ? edge.edge.src : edge.edge.dst);
  }
}

bool RobotBlock::hasEdge(const EdgeId& id) const { return weights_.count(id) > 0; }

void RobotBlock::setSeparator(const NodeKey& key, const Pose3& value) {
  separators_[key] = value;
}

void RobotBlock::setWeight(const EdgeId& id, double weight) {
  auto it = weights_.find(id);
  if (it != weights_.end()) {
    it->second = weight;
  }
}

double RobotBlock::weight(const EdgeId& id) const {
  auto it = weights_.find(id);
  return it == weights_.end() ? 1.0 : it->second;
}

void RobotBlock::setEstimate(const NodeKey& key, const Pose3& value) {
  own_.at(key) = value;
}

std::map<NodeKey, Pose3> RobotBlock::publicPoses() const {
  std::map<NodeKey, Pose3> out;
  for (const NodeKey& key : public_keys_) {
    auto it = own_.find(key);
    if (it != own_.end()) {
      out.emplace(key, it->second);
    }
  }
  return out;
}

void RobotBlock::setAnchor(const NodeKey& key, const Pose3& value) {
  anchor_ = std::make_pair(key, value);
}

void RobotBlock::clearAnchor() { anchor_.reset(); }

void RobotBlock::setActiveRobots(const std::set<int>& robots) {
  active_robots_ = robots;
}

bool RobotBlock::edgeActive(const SessionEdge& e) const {
  if (active_robots_.empty()) return true;
  auto allowed = [&](int robot) {
    return robot == robot_id_ || active_robots_.count(robot) > 0;
  };
  return allowed(e.edge.src.robot_id) && allowed(e.edge.dst.robot_id);
}

bool RobotBlock::evaluable(const SessionEdge& e, Pose3* xi, Pose3* xj) const {
  auto value_of = [&](const NodeKey& key, Pose3* out) {
    auto own = own_.find(key);
    if (own != own_.end()) {
      *out = own->second;
      return true;
    }
    auto sep = separators_.find(key);
    if (sep != separators_.end()) {
      *out = sep->second;
      return true;
    }
    return false;
  };
  if (!value_of(e.edge.src, xi)) return false;
  if (e.edge.kind == EdgeKind::Prior) {
    *xj = *xi;
    return true;
  }
  return value_of(e.edge.dst, xj);
}

RobotBlock::UpdateResult RobotBlock::localUpdate() {
  internal::GaussNewtonProblem problem;
  std::map<NodeKey, int> free_index;
  for (const auto& [key, pose] : own_) {
    free_index.emplace(key, static_cast<int>(problem.poses.size()));
    problem.poses.push_back(pose);
  }
  problem.n_free = static_cast<int>(problem.poses.size());
  std::map<NodeKey, int> fixed_index;
  auto index_of = [&](const NodeKey& key) -> int {
    auto own = free_index.find(key);
    if (own != free_index.end()) return own->second;
    auto fixed = fixed_index.find(key);
    if (fixed != fixed_index.end()) return fixed->second;
    auto sep = separators_.find(key);
    if (sep == separators_.end()) return -1;
    const int idx = static_cast<int>(problem.poses.size());
    fixed_index.emplace(key, idx);
    problem.poses.push_back(sep->second);
    return idx;
  };
  for (const SessionEdge& e : edges_) {
    if (!edgeActive(e)) continue;
    const int i = index_of(e.edge.src);
    if (i < 0) continue;
    int j = i;
    if (e.edge.kind != EdgeKind::Prior) {
      j = index_of(e.edge.dst);
      if (j < 0) continue;
    }
    kernels::EdgeTerm term;
    term.i = i;
    term.j = j;
    term.measurement_inverse = e.edge.measurement.inverse();
    term.information = e.edge.information;
    term.weight = weights_.at(e.id);
    term.is_prior = e.edge.kind == EdgeKind::Prior;
    problem.terms.push_back(term);
  }
  if (anchor_.has_value() && free_index.count(anchor_->first)) {
    kernels::EdgeTerm term;
    term.i = free_index.at(anchor_->first);
    term.j = term.i;
    term.measurement_inverse = anchor_->second.inverse();
    term.information = diagonal_information(1e-3, 1e-3);
    term.weight = 1.0;
    term.is_prior = true;
    problem.terms.push_back(term);
  }

  UpdateResult result;
  const auto stats = problem.minimize(config_);
  result.gn_iterations = stats.iterations;
  for (const auto& [key, idx] : free_index) {
    const Pose3& updated = problem.poses[idx];
    result.translation_change = std::max(
        result.translation_change, (updated.translation() - own_.at(key).translation()).norm());
    own_.at(key) = updated;
  }
  return result;
}

std::map<EdgeId, double> RobotBlock::ownedResidualSquares() const {
  std::map<EdgeId, double> out;
  for (const SessionEdge& e : edges_) {
    if (!is_loop(e.edge.kind)) continue;
    if (!edgeActive(e)) continue;
    if (edge_owner(e.edge.src, e.edge.dst) != robot_id_) continue;
    Pose3 xi, xj;
    if (!evaluable(e, &xi, &xj)) continue;
    const Twist r = kernels::log_map_clamped(
        e.edge.measurement.inverse().compose(xi.inverse().compose(xj)));
    out[e.id] = r.dot(e.edge.information * r);
  }
  return out;
}

double RobotBlock::ownedCost() const {
  double cost = 0.0;
  if (anchor_.has_value()) {
    auto own = own_.find(anchor_->first);
    if (own != own_.end()) {
      const Twist r =
          kernels::log_map_clamped(anchor_->second.inverse().compose(own->second));
      cost += r.dot(diagonal_information(1e-3, 1e-3) * r);
    }
  }
  for (const SessionEdge& e : edges_) {
    if (!edgeActive(e)) continue;
    if (edge_owner(e.edge.src, e.edge.dst) != robot_id_) continue;
    Pose3 xi, xj;
    if (!evaluable(e, &xi, &xj)) continue;
    Twist r;
    if (e.edge.kind == EdgeKind::Prior) {
      r = kernels::log_map_clamped(e.edge.measurement.inverse().compose(xi));
    } else {
      r = kernels::log_map_clamped(
          e.edge.measurement.inverse().compose(xi.inverse().compose(xj)));
    }
    cost += weights_.at(e.id) * r.dot(e.edge.information * r);
  }
  return cost;
}

DistributedResult solve_distributed(const PoseGraph& global, const SolverConfig& config,
                                    bool trace_costs) {
  if (global.numNodes() == 0) {
    throw EmptyGraph();
  }
  std::set<int> member_set;
  for (const auto& [key, est] : global.nodes()) {
    member_set.insert(key.robot_id);
  }
  const std::vector<int> members(member_set.begin(), member_set.end());

  std::map<int, RobotBlock> blocks;
  for (int robot : members) {
    blocks.emplace(robot, RobotBlock(robot, config));
  }
  for (const auto& [key, est] : global.nodes()) {
    if (!est.has_value()) {
      throw MissingEstimate("solve_distributed needs an initial estimate for " +
                            to_string(key));
    }
    blocks.at(key.robot_id).addOwnNode(key, *est);
  }
  // Parallel edges between the same key pair get a disambiguating offset in
  // the id; blocks see the edges in the same global order, so the assignment
  // is consistent on both sides.
  std::map<EdgeId, int> dup_count;
  for (const Edge& e : global.edges()) {
    SessionEdge se{EdgeId::canonical(e.src, e.dst), e};
    const int bump = dup_count[se.id]++;
    if (bump > 0) {
      se.id.b.index += 1000000 * bump;
    }
    blocks.at(e.src.robot_id).addEdge(se);
    if (e.dst.robot_id != e.src.robot_id) {
      blocks.at(e.dst.robot_id).addEdge(se);
    }
  }
  // Seed separator copies from the global initial estimates.
  for (auto& [robot, block] : blocks) {
    for (const SessionEdge& se : block.edges()) {
      for (const NodeKey& key : {se.edge.src, se.edge.dst}) {
        if (!block.ownsNode(key)) {
          block.setSeparator(key, *global.nodes().at(key));
        }
      }
    }
  }

  DistributedResult result;
  const double barc_sq = config.barcSq();
  auto global_cost = [&]() {
    double total = 0.0;
    for (const auto& [robot, block] : blocks) total += block.ownedCost();
    return total;
  };
  auto broadcast = [&](int from) {
    const auto poses = blocks.at(from).publicPoses();
    for (auto& [robot, block] : blocks) {
      if (robot == from) continue;
      for (const auto& [key, pose] : poses) {
        block.setSeparator(key, pose);
      }
    }
  };
  auto run_inner_loop = [&]() {
    for (int cycle = 0; cycle < config.max_rounds_per_inner; ++cycle) {
      double max_change = 0.0;
      for (auto& [robot, block] : blocks) {
        const auto update = block.localUpdate();
        max_change = std::max(max_change, update.translation_change);
        broadcast(robot);
        if (trace_costs) {
          result.cost_trace.push_back(global_cost());
        }
      }
      ++result.rounds;
      if (max_change < config.eps_rel_translation) {
        return true;
      }
    }
    return false;
  };

  bool mu_ready = false;
  double mu = 1.0;
  std::map<EdgeId, double> weights;
  if (!config.use_gnc) {
    run_inner_loop();
    result.converged = true;
  } else {
    for (int outer = 0; outer < config.max_outer_iterations; ++outer) {
      run_inner_loop();
      std::map<EdgeId, double> residual_sq;
      for (const auto& [robot, block] : blocks) {
        for (const auto& [id, rsq] : block.ownedResidualSquares()) {
          residual_sq.emplace(id, rsq);
        }
      }
      if (residual_sq.empty()) {
        result.converged = true;
        break;
      }
      if (!mu_ready) {
        double max_rsq = 0.0;
        for (const auto& [id, rsq] : residual_sq) max_rsq = std::max(max_rsq, rsq);
        mu = gnc_init_mu(max_rsq, barc_sq);
        mu_ready = true;
        for (const auto& [id, rsq] : residual_sq) weights[id] = 1.0;
      }
      ++result.outer_iterations;
      double max_wchange = 0.0;
      bool binary = true;
      for (const auto& [id, rsq] : residual_sq) {
        const double w = gnc_weight(rsq, mu, barc_sq);
        max_wchange = std::max(max_wchange, std::abs(w - weights[id]));
        weights[id] = w;
        binary = binary && (w <= 1e-3 || w >= 1.0 - 1e-3);
        for (auto& [robot, block] : blocks) {
          block.setWeight(id, w);
        }
      }
      if (binary && max_wchange < 1e-3) {
        // One final inner pass at the settled weights.
        run_inner_loop();
        result.converged = true;
        break;
      }
      mu = std::min(mu * config.mu_factor, config.mu_cap);
    }
  }

  for (const auto& [robot, block] : blocks) {
    for (const auto& [key, pose] : block.estimates()) {
      result.estimates[key] = pose;
    }
  }
  result.weights = weights;
  return result;
}

}  // namespace swarmpgo
