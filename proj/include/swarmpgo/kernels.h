#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "swarmpgo/se3.h"

namespace swarmpgo::kernels {

// Data-parallel inner loops used by the optimizer and the place-recognition
// engine. Each kernel has an OpenMP implementation and a serial reference
// used by the tests and the benchmark target.
//
// Reductions accumulate per fixed-size block and combine blocks in index
// order, so results are bit-identical for any thread count.

inline constexpr std::size_t kReductionBlock = 256;

/// Flattened residual term: log(measurement^-1 * (xi^-1 * xj)) for binary
/// edges, log(measurement^-1 * xi) for priors (is_prior).
struct EdgeTerm {
  int i = 0;
  int j = 0;
  Pose3 measurement_inverse;
  Information6 information;
  double weight = 1.0;
  bool is_prior = false;
};

/// log_map that never throws: at the cut locus the rotation angle is clamped
/// just inside pi with a deterministic axis. Solver-internal; the public
/// residual path keeps the AngleNearPi contract.
Twist log_map_clamped(const Pose3& p);

Twist edge_residual(const EdgeTerm& term, std::span<const Pose3> poses);

double weighted_cost(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                     bool use_weights);
double weighted_cost_serial(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                            bool use_weights);

struct EdgeLinearization {
  Twist residual;
  Matrix6 jacobian_i;  // d residual / d xi (right perturbation)
  Matrix6 jacobian_j;  // unused for priors
};

void linearize(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
               std::span<EdgeLinearization> out);
void linearize_serial(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                      std::span<EdgeLinearization> out);

/// Per-edge weighted squared residual r^T * info * r (unit GNC weight), used
/// by the GNC weight updates.
void residual_squares(std::span<const EdgeTerm> terms, std::span<const Pose3> poses,
                      std::span<double> out);

/// Sparse descriptor histogram, entries sorted by word id, weights > 0.
using SparseVec = std::vector<std::pair<int, double>>;

/// L1 BoW score on normalized histograms: 1 - 0.5 * sum_w |a_w - b_w|.
double l1_similarity(const SparseVec& a, const SparseVec& b);

void batch_similarity(const SparseVec& query, std::span<const SparseVec* const> candidates,
                      std::span<double> out);
void batch_similarity_serial(const SparseVec& query,
                             std::span<const SparseVec* const> candidates,
                             std::span<double> out);

}  // namespace swarmpgo::kernels
