#include "swarmpgo/kernels.h"

#include <cmath>

namespace swarmpgo::kernels {

namespace {

double term_cost(const EdgeTerm& term, std::span<const Pose3> poses, bool use_weights) {
  const Twist r = edge_residual(term, poses);
  const double c = r.dot(term.information * r);
  return use_weights ? term.weight * c : c;
}

EdgeLinearization linearize_term(const EdgeTerm& term, std::span<const Pose3> poses) {
  EdgeLinearization out;
  if (term.is_prior) {
    const Pose3 e = term.measurement_inverse.compose(poses[term.i]);
    out.residual = log_map_clamped(e);
    out.jacobian_i = se3_right_jacobian_inverse(out.residual);
    out.jacobian_j.setZero();
    return out;
  }
  const Pose3& xi = poses[term.i];
  const Pose3& xj = poses[term.j];
  const Pose3 rel = xi.inverse().compose(xj);
  const Pose3 e = term.measurement_inverse.compose(rel);
  out.residual = log_map_clamped(e);
  const Matrix6 jr_inv = se3_right_jacobian_inverse(out.residual);
  out.jacobian_j = jr_inv;
  out.jacobian_i = -jr_inv * adjoint(rel.inverse());
  return out;
}

}  // namespace

Twist log_map_clamped(const Pose3& p) {
  try {
    return log_map(p);
  } catch (const AngleNearPi&) {
    const auto& r = p.rotation();
    Vector3 axis(r.x(), r.y(), r.z());
    const double n = axis.norm();
    axis = n > 1e-12 ? Vector3(axis / n) : Vector3(1, 0, 0);
    const Pose3 clamped(Rotation3::axisAngle(axis, M_PI - 2e-6), p.translation());
    return log_map(clamped);
  }
}

Twist edge_residual(const EdgeTerm& term, std::span<const Pose3> poses) {
  if (term.is_prior) {
    return log_map_clamped(term.measurement_inverse.compose(poses[term.i]));
  }
  return log_map_clamped(
      term.measurement_inverse.compose(poses[term.i].inverse().compose(poses[term.j])));
}

double weighted_cost(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                     bool use_weights) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(terms.size());
  const std::ptrdiff_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::ptrdiff_t begin = b * static_cast<std::ptrdiff_t>(kReductionBlock);
    const std::ptrdiff_t end = std::min(n, begin + static_cast<std::ptrdiff_t>(kReductionBlock));
    double acc = 0.0;
    for (std::ptrdiff_t k = begin; k < end; ++k) {
      acc += term_cost(terms[k], poses, use_weights);
    }
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

double weighted_cost_serial(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                            bool use_weights) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(terms.size());
  double total = 0.0;
  for (std::ptrdiff_t b = 0; b < n; b += kReductionBlock) {
    double acc = 0.0;
    const std::ptrdiff_t end = std::min(n, b + static_cast<std::ptrdiff_t>(kReductionBlock));
    for (std::ptrdiff_t k = b; k < end; ++k) {
      acc += term_cost(terms[k], poses, use_weights);
    }
    total += acc;
  }
  return total;
}

void linearize(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
               std::span<EdgeLinearization> out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(terms.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = linearize_term(terms[k], poses);
  }
}

void linearize_serial(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                      std::span<EdgeLinearization> out) {
  for (std::size_t k = 0; k < terms.size(); ++k) {
    out[k] = linearize_term(terms[k], poses);
  }
}

void residual_squares(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                      std::span<double> out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(terms.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const Twist r = edge_residual(terms[k], poses);
    out[k] = r.dot(terms[k].information * r);
  }
}

double l1_similarity(const SparseVec& a, const SparseVec& b) {
  double l1 = 0.0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia].first == b[ib].first) {
      l1 += std::abs(a[ia].second - b[ib].second);
      ++ia;
      ++ib;
    } else if (a[ia].first < b[ib].first) {
      l1 += a[ia].second;
      ++ia;
    } else {
      l1 += b[ib].second;
      ++ib;
    }
  }
  for (; ia < a.size(); ++ia) l1 += a[ia].second;
  for (; ib < b.size(); ++ib) l1 += b[ib].second;
  return 1.0 - 0.5 * l1;
}

void batch_similarity(const SparseVec& query, std::span<const SparseVec* const> candidates,
                      std::span<double> out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = l1_similarity(query, *candidates[k]);
  }
}

void batch_similarity_serial(const SparseVec& query,
                             std::span<const SparseVec* const> candidates,
                             std::span<double> out) {
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    out[k] = l1_similarity(query, *candidates[k]);
  }
}

}  // namespace swarmpgo::kernels
