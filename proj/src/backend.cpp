#include "swarmpgo/backend.h"

#include <Eigen/SVD>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>
#include <set>

#include "gauss_newton.h"
#include "swarmpgo/kernels.h"

namespace swarmpgo {

double chi_squared_quantile(double quantile, int dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, quantile);
}

double gnc_weight(double residual_sq, double mu, double barc_sq) {
  const double upper = (mu + 1.0) / mu * barc_sq;
  const double lower = mu / (mu + 1.0) * barc_sq;
  if (residual_sq >= upper) return 0.0;
  if (residual_sq <= lower) return 1.0;
  const double w = std::sqrt(barc_sq * mu * (mu + 1.0) / residual_sq) - mu;
  return std::clamp(w, 0.0, 1.0);
}

std::vector<double> gnc_weight_update(const std::vector<double>& residual_sq, double mu,
                                      double barc_sq) {
  std::vector<double> weights(residual_sq.size());
  for (std::size_t k = 0; k < residual_sq.size(); ++k) {
    weights[k] = gnc_weight(residual_sq[k], mu, barc_sq);
  }
  return weights;
}

double gnc_init_mu(double max_residual_sq, double barc_sq) {
  const double denom = 2.0 * max_residual_sq - barc_sq;
  if (denom <= 0.0) {
    return 1.0;  // no residual beyond barc_sq / 2: start fully non-convex
  }
  return std::clamp(barc_sq / denom, 1e-6, 1.0);
}

bool gnc_weights_binary(const std::vector<double>& weights, double tol) {
  return std::all_of(weights.begin(), weights.end(), [tol](double w) {
    return w <= tol || w >= 1.0 - tol;
  });
}

namespace {

// Chordal residual for single-pose averaging: ||R - R_i||_F^2 + ||t - t_i||^2.
double chordal_residual_sq(const Pose3& pose, const Pose3& candidate) {
  const double rot = (pose.rotation().matrix() - candidate.rotation().matrix()).squaredNorm();
  return rot + (pose.translation() - candidate.translation()).squaredNorm();
}

Pose3 weighted_pose_mean(const std::vector<Pose3>& candidates,
                         const std::vector<double>& weights) {
  Matrix3 rot_sum = Matrix3::Zero();
  Vector3 t_sum = Vector3::Zero();
  double w_sum = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    rot_sum += weights[k] * candidates[k].rotation().matrix();
    t_sum += weights[k] * candidates[k].translation();
    w_sum += weights[k];
  }
  if (w_sum <= 1e-12) {
    return Pose3();
  }
  return Pose3(Rotation3::fromMatrix(rot_sum), t_sum / w_sum);
}

}  // namespace

std::optional<PoseAverage> robust_single_pose_averaging(const std::vector<Pose3>& candidates,
                                                        double barc_sq, int min_inliers,
                                                        int max_outer, double mu_factor) {
  if (candidates.empty()) {
    return std::nullopt;
  }
  std::vector<double> weights(candidates.size(), 1.0);
  std::vector<double> residual_sq(candidates.size(), 0.0);
  Pose3 pose = weighted_pose_mean(candidates, weights);
  double mu = 0.0;
  for (int outer = 0; outer < max_outer; ++outer) {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      residual_sq[k] = chordal_residual_sq(pose, candidates[k]);
    }
    if (outer == 0) {
      mu = gnc_init_mu(*std::max_element(residual_sq.begin(), residual_sq.end()), barc_sq);
    }
    const std::vector<double> updated = gnc_weight_update(residual_sq, mu, barc_sq);
    double max_change = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      max_change = std::max(max_change, std::abs(updated[k] - weights[k]));
    }
    weights = updated;
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 1e-12; })) {
      return std::nullopt;  // nothing left to average
    }
    pose = weighted_pose_mean(candidates, weights);
    if (gnc_weights_binary(weights) && max_change < 1e-3) {
      break;
    }
    mu = std::min(mu * mu_factor, 1e8);
  }
  PoseAverage out;
  out.pose = pose;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.5) {
      out.inlier_indices.push_back(static_cast<int>(k));
    }
  }
  if (static_cast<int>(out.inlier_indices.size()) < min_inliers) {
    return std::nullopt;
  }
  return out;
}

namespace {

// Union-find over node keys for the anchoring check.
struct Components {
  std::map<NodeKey, NodeKey> parent;
  NodeKey find(const NodeKey& k) {
    auto it = parent.find(k);
    if (it == parent.end()) {
      parent[k] = k;
      return k;
    }
    if (it->second == k) return k;
    const NodeKey root = find(it->second);
    parent[k] = root;
    return root;
  }
  void unite(const NodeKey& a, const NodeKey& b) { parent[find(a)] = find(b); }
};

}  // namespace

SolveStats centralized_solve(PoseGraph& graph, const SolverConfig& config) {
  if (graph.numNodes() == 0) {
    throw EmptyGraph();
  }
  // Every connected component must carry a prior.
  Components comps;
  for (const auto& [key, est] : graph.nodes()) {
    comps.find(key);
  }
  for (const Edge& e : graph.edges()) {
    comps.unite(e.src, e.dst);
  }
  std::set<NodeKey> anchored_roots;
  for (const Edge& e : graph.edges()) {
    if (e.kind == EdgeKind::Prior) anchored_roots.insert(comps.find(e.src));
  }
  for (const auto& [key, est] : graph.nodes()) {
    if (!anchored_roots.count(comps.find(key))) {
      throw NotAnchored("component of node " + to_string(key) + " has no prior");
    }
  }

  internal::GaussNewtonProblem problem;
  std::map<NodeKey, int> index;
  for (const auto& [key, est] : graph.nodes()) {
    if (!est.has_value()) {
      throw MissingEstimate("centralized_solve needs an initial estimate for " +
                            to_string(key));
    }
    index.emplace(key, static_cast<int>(problem.poses.size()));
    problem.poses.push_back(*est);
  }
  problem.n_free = static_cast<int>(problem.poses.size());

  std::vector<std::size_t> loop_terms;  // term index -> graph edge index alignment
  std::vector<std::size_t> loop_edges;
  for (std::size_t e = 0; e < graph.edges().size(); ++e) {
    const Edge& edge = graph.edges()[e];
    kernels::EdgeTerm term;
    term.i = index.at(edge.src);
    term.j = index.at(edge.dst);
    term.measurement_inverse = edge.measurement.inverse();
    term.information = edge.information;
    term.is_prior = edge.kind == EdgeKind::Prior;
    term.weight = 1.0;
    if (is_loop(edge.kind) && config.use_gnc) {
      loop_terms.push_back(problem.terms.size());
      loop_edges.push_back(e);
    }
    problem.terms.push_back(term);
  }

  SolveStats stats;
  auto run_inner = [&]() {
    const auto r = problem.minimize(config);
    stats.gn_iterations += r.iterations;
    return r;
  };

  auto inner = run_inner();
  if (!config.use_gnc || loop_terms.empty()) {
    for (const auto& [key, idx] : index) {
      graph.setEstimate(key, problem.poses[idx]);
    }
    if (config.use_gnc) {
      for (std::size_t e = 0; e < graph.edges().size(); ++e) {
        if (is_loop(graph.edges()[e].kind)) graph.edges()[e].gnc_weight = 1.0;
      }
    }
    stats.final_cost = inner.cost;
    stats.converged = true;
    return stats;
  }

  const double barc_sq = config.barcSq();
  std::vector<double> residual_sq(loop_terms.size());
  std::vector<double> weights(loop_terms.size(), 1.0);
  auto refresh_residuals = [&]() {
    for (std::size_t k = 0; k < loop_terms.size(); ++k) {
      const auto& term = problem.terms[loop_terms[k]];
      const Twist r = kernels::edge_residual(term, problem.poses);
      residual_sq[k] = r.dot(term.information * r);
    }
  };
  refresh_residuals();
  double mu =
      gnc_init_mu(*std::max_element(residual_sq.begin(), residual_sq.end()), barc_sq);

  for (int outer = 0; outer < config.max_outer_iterations; ++outer) {
    const std::vector<double> updated = gnc_weight_update(residual_sq, mu, barc_sq);
    double max_change = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      max_change = std::max(max_change, std::abs(updated[k] - weights[k]));
    }
    weights = updated;
    ++stats.outer_iterations;
    if (gnc_weights_binary(weights) && max_change < 1e-3) {
      stats.converged = true;
      break;
    }
    for (std::size_t k = 0; k < loop_terms.size(); ++k) {
      problem.terms[loop_terms[k]].weight = weights[k];
    }
    inner = run_inner();
    refresh_residuals();
    mu = std::min(mu * config.mu_factor, config.mu_cap);
  }

  for (std::size_t k = 0; k < loop_terms.size(); ++k) {
    problem.terms[loop_terms[k]].weight = weights[k];
  }
  stats.final_cost = problem.cost();
  for (const auto& [key, idx] : index) {
    graph.setEstimate(key, problem.poses[idx]);
  }
  for (std::size_t k = 0; k < loop_edges.size(); ++k) {
    graph.edges()[loop_edges[k]].gnc_weight = weights[k];
  }
  return stats;
}

Edge make_anchor_prior(const NodeKey& node, const Pose3& value, double sigma_rot_rad,
                       double sigma_trans_m) {
  Edge prior;
  prior.src = node;
  prior.dst = node;
  prior.kind = EdgeKind::Prior;
  prior.measurement = value;
  prior.information = diagonal_information(sigma_rot_rad, sigma_trans_m);
  return prior;
}

}  // namespace swarmpgo
