#include "gauss_newton.h"

#include <cmath>

namespace swarmpgo::internal {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

void add_block(std::vector<Triplet>& triplets, int row, int col, const Matrix6& block) {
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      triplets.emplace_back(row + r, col + c, block(r, c));
    }
  }
}

}  // namespace

GaussNewtonProblem::Result GaussNewtonProblem::minimize(const SolverConfig& config) {
  Result result;
  if (n_free == 0) {
    result.cost = cost();
    result.gradient_converged = true;
    return result;
  }
  const int dim = 6 * n_free;
  std::vector<kernels::EdgeLinearization> lin(terms.size());
  double lambda = config.lambda_init;
  double current_cost = cost();
  int consecutive_rejects = 0;

  for (int iter = 0; iter < config.max_gn_iterations; ++iter) {
    kernels::linearize(terms, poses, lin);

    std::vector<Triplet> triplets;
    triplets.reserve(terms.size() * 144 + dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& term = terms[k];
      if (term.weight <= 1e-12) continue;
      const Matrix6 w_info = term.weight * term.information;
      const bool i_free = term.i < n_free;
      const bool j_free = !term.is_prior && term.j < n_free;
      const auto& l = lin[k];
      if (i_free) {
        const Matrix6 jtw = l.jacobian_i.transpose() * w_info;
        add_block(triplets, 6 * term.i, 6 * term.i, jtw * l.jacobian_i);
        rhs.segment<6>(6 * term.i) -= jtw * l.residual;
        if (j_free) {
          const Matrix6 cross = jtw * l.jacobian_j;
          add_block(triplets, 6 * term.i, 6 * term.j, cross);
          add_block(triplets, 6 * term.j, 6 * term.i, cross.transpose());
        }
      }
      if (j_free) {
        const Matrix6 jtw = l.jacobian_j.transpose() * w_info;
        add_block(triplets, 6 * term.j, 6 * term.j, jtw * l.jacobian_j);
        rhs.segment<6>(6 * term.j) -= jtw * l.residual;
      }
    }

    // Gradient of the weighted cost is -2 * rhs.
    const double gradient_norm = 2.0 * rhs.norm();
    if (gradient_norm <= config.eps_gradient) {
      result.gradient_converged = true;
      break;
    }

    constexpr double kLambdaMax = 1e12;
    bool accepted = false;
    bool stalled = false;
    while (true) {
      std::vector<Triplet> damped = triplets;
      for (int d = 0; d < dim; ++d) {
        damped.emplace_back(d, d, lambda);
      }
      SparseMatrix h(dim, dim);
      h.setFromTriplets(damped.begin(), damped.end());
      Eigen::SimplicialLDLT<SparseMatrix> solver(h);
      bool step_ok = solver.info() == Eigen::Success;
      Eigen::VectorXd delta;
      if (step_ok) {
        delta = solver.solve(rhs);
        step_ok = solver.info() == Eigen::Success && delta.allFinite();
      }
      if (step_ok && delta.lpNorm<Eigen::Infinity>() < 1e-12) {
        stalled = true;
        consecutive_rejects = 0;
        break;
      }
      if (step_ok) {
        std::vector<Pose3> candidate = poses;
        for (int n = 0; n < n_free; ++n) {
          candidate[n] = poses[n].compose(exp_map(delta.segment<6>(6 * n)));
        }
        const double candidate_cost = kernels::weighted_cost(terms, candidate, true);
        if (candidate_cost < current_cost) {
          poses = std::move(candidate);
          current_cost = candidate_cost;
          lambda = std::max(lambda / 10.0, 1e-12);
          consecutive_rejects = 0;
          accepted = true;
          ++result.iterations;
          break;
        }
        if (candidate_cost - current_cost <= 1e-12 * std::max(1.0, current_cost)) {
          // Change below the numerical floor: stalled, not diverging.
          stalled = true;
          consecutive_rejects = 0;
          break;
        }
      }
      // Escalate the damping; cost increases only count toward divergence
      // once more damping cannot help.
      if (lambda >= kLambdaMax) {
        if (++consecutive_rejects >= 5) {
          throw Diverged("cost increased for 5 consecutive damped steps");
        }
      } else {
        lambda = std::min(lambda * 10.0, kLambdaMax);
      }
    }
    if (stalled || !accepted) {
      result.gradient_converged = result.gradient_converged || stalled;
      break;
    }
  }
  result.cost = current_cost;
  return result;
}

}  // namespace swarmpgo::internal
