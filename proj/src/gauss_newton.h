#pragma once

// Internal damped Gauss-Newton core shared by the centralized solver and the
// per-robot block updates. Not installed; include from src/ only.

#include <Eigen/Sparse>
#include <vector>

#include "swarmpgo/backend.h"
#include "swarmpgo/kernels.h"

namespace swarmpgo::internal {

/// Weighted nonlinear least squares over poses[0..n_free); the tail of the
/// pose array holds fixed separator values referenced by the terms.
struct GaussNewtonProblem {
  std::vector<Pose3> poses;
  int n_free = 0;
  std::vector<kernels::EdgeTerm> terms;

  struct Result {
    int iterations = 0;
    double cost = 0.0;
    bool gradient_converged = false;
  };

  double cost() const { return kernels::weighted_cost(terms, poses, true); }

  /// Levenberg-damped Gauss-Newton with accept-only steps: lambda times 10 on
  /// a cost increase, divided by 10 on a decrease; five consecutive rejected
  /// steps raise Diverged. Terminates on gradient norm <= eps_gradient.
  Result minimize(const SolverConfig& config);
};

}  // namespace swarmpgo::internal
