#pragma once

#include <optional>
#include <vector>

#include "swarmpgo/pose_graph.h"

namespace swarmpgo {

double chi_squared_quantile(double quantile, int dof);

struct SolverConfig {
  double eps_gradient = 0.1;          // gradient-norm threshold for local solves
  double eps_rel_translation = 0.2;   // inner-loop termination, meters
  int max_gn_iterations = 50;         // damped Gauss-Newton steps per solve
  int max_outer_iterations = 100;     // GNC continuation steps
  int max_rounds_per_inner = 100;     // distributed round-robin cycles per inner loop
  double mu_factor = 1.4;
  double mu_cap = 1e8;
  double barc_quantile = 0.99;        // chi^2 quantile on 6-dof weighted residuals
  double lambda_init = 1e-4;
  bool use_gnc = true;

  double barcSq() const { return chi_squared_quantile(barc_quantile, 6); }
};

/// GNC-TLS weight for one edge given its information-weighted squared
/// residual. Zero above ((mu+1)/mu)*barc_sq, one below (mu/(mu+1))*barc_sq,
/// the TLS interpolation in between, clamped to [0, 1].
double gnc_weight(double residual_sq, double mu, double barc_sq);

std::vector<double> gnc_weight_update(const std::vector<double>& residual_sq, double mu,
                                      double barc_sq);

/// Continuation start: barc_sq / (2*max_residual_sq - barc_sq), clamped to
/// [1e-6, 1]; 1 when no residual exceeds barc_sq / 2.
double gnc_init_mu(double max_residual_sq, double barc_sq);

bool gnc_weights_binary(const std::vector<double>& weights, double tol = 1e-3);

/// Robot-to-global frame alignment estimated by single-pose averaging.
struct FrameAlignment {
  Pose3 world_from_local;
  bool accepted = false;
  int inlier_count = 0;
};

struct PoseAverage {
  Pose3 pose;
  std::vector<int> inlier_indices;  // weights > 0.5
};

/// GNC-TLS over a single SE(3) variable: the inner step is the weighted
/// chordal rotation mean (SVD projection with determinant correction) plus
/// the weighted translation mean. Returns the pose and inlier set only when
/// at least min_inliers candidates support it.
std::optional<PoseAverage> robust_single_pose_averaging(const std::vector<Pose3>& candidates,
                                                        double barc_sq, int min_inliers = 3,
                                                        int max_outer = 100,
                                                        double mu_factor = 1.4);

struct SolveStats {
  double final_cost = 0.0;
  int gn_iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
};

/// Full-graph GNC (damped Gauss-Newton inner loop). With use_gnc=false this
/// is a plain weights-fixed-at-1 least-squares solve. Updates node estimates
/// and loop-edge gnc_weights in place. Throws NotAnchored when a connected
/// component has no prior, Diverged when damping fails repeatedly.
SolveStats centralized_solve(PoseGraph& graph, const SolverConfig& config);

/// Unary anchor on a node, valued at the given pose.
Edge make_anchor_prior(const NodeKey& node, const Pose3& value,
                       double sigma_rot_rad = 1e-3, double sigma_trans_m = 1e-3);

}  // namespace swarmpgo
