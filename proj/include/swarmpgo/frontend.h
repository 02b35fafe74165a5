#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "swarmpgo/kernels.h"
#include "swarmpgo/pose_graph.h"

namespace swarmpgo {

/// Sparse L1-normalized descriptor histogram for one keyframe.
struct BowVector {
  int frame_index = 0;
  kernels::SparseVec weights;  // sorted by word id, entries > 0, sums to 1
};

/// L1 BoW score on normalized histograms: 1 - 0.5 * sum |a - b|, in [0, 1].
double bow_similarity(const BowVector& a, const BowVector& b);

/// Downsampled publication: only every n_b-th frame is transmitted.
bool should_publish_bow(int frame_index, int n_b);

/// For each robot pair, the smaller id runs the front-end.
int frontend_owner(int robot_a, int robot_b);

/// Score of (query, candidate) normalized by the query robot's temporally
/// previous vector. Throws DegenerateReference when the reference score
/// vanishes (the candidate is skipped).
double normalized_similarity(const BowVector& query, const BowVector& candidate,
                             const BowVector& query_prev);

struct LoopCandidate {
  NodeKey query;
  NodeKey match;
  double normalized_score = 0.0;
};

struct FrontendParams {
  double alpha = 0.5;        // normalized-similarity threshold
  int bow_skip = 3;          // n_b
  int min_temporal_gap = 10; // same-robot matches closer than this are skipped
};

/// Per-robot store of published BoW vectors with out-of-order-tolerant
/// candidate generation. A vector becomes queryable once its predecessor
/// (frame - n_b) is stored; its normalization reference is fixed by content,
/// so the candidate set after full delivery is a pure function of the stored
/// set, never of arrival order. Pairs are evaluated in both query/match role
/// assignments as the sides become queryable.
class BowDatabase {
 public:
  BowDatabase() = default;
  /// owner_robot < 0 disables the ownership filter (the centralized store).
  BowDatabase(int owner_robot, const FrontendParams& params);

  /// Stores the vector and returns the loop candidates that become
  /// decidable, including deferred queries this arrival unlocks.
  std::vector<LoopCandidate> ingest(int robot, const BowVector& vec);

  /// Pure place-recognition query against the stored vectors; the incoming
  /// vector is not stored. Empty when the query's normalization reference is
  /// missing or degenerate.
  std::vector<LoopCandidate> query(int robot, const BowVector& vec) const;

  void noteLatestPublished(int robot, int frame_index);
  bool contains(int robot, int frame_index) const;
  const BowVector* find(int robot, int frame_index) const;
  int knownMax(int robot) const;  // -1 before anything is heard
  /// Published indices (multiples of n_b up to the known max) not stored.
  std::vector<int> gaps(int robot) const;
  std::vector<int> robots() const;
  std::size_t storedCount() const;

 private:
  struct RobotStore {
    std::map<int, BowVector> frames;
    std::set<int> ready;  // queryable frames
    int known_max = -1;
  };

  bool candidateAllowed(int query_robot, int query_frame, int match_robot,
                        int match_frame) const;
  std::optional<LoopCandidate> evaluate(int query_robot, const BowVector& query,
                                        int match_robot, const BowVector& match) const;
  void collectQueryCandidates(int robot, const BowVector& vec,
                              std::vector<LoopCandidate>& out) const;

  int owner_robot_ = -1;
  FrontendParams params_;
  std::map<int, RobotStore> stores_;
};

/// Among connected peers, the one with the most missing published vectors
/// and its missing indices; nullopt when every gap set is empty. Ties go to
/// the smaller robot id.
std::optional<std::pair<int, std::vector<int>>> audit_missing_bow(
    const BowDatabase& db, const std::vector<int>& connected_peers);

/// Stand-in for descriptor matching and RANSAC: decides loop closures from
/// ground truth. Co-visible keyframe pairs (within the radius and viewing
/// angle) yield the true relative pose perturbed by the inlier noise; other
/// candidates become uniformly random outlier edges with probability p_fp.
/// Each candidate pair draws from its own seeded stream, so outcomes do not
/// depend on processing order.
struct VerificationParams {
  double covis_radius_m = 10.0;
  double covis_max_angle_deg = 45.0;
  double sigma_rot = 0.02;      // rad
  double sigma_trans = 0.03;    // m
  double false_positive_prob = 0.75;
  double outlier_box_m = 50.0;
  double info_sigma_factor = 2.0;  // conservative noise model on the edge
  std::uint64_t seed = 0;
};

class VerificationOracle {
 public:
  using GroundTruthFn = std::function<const Pose3*(const NodeKey&)>;

  VerificationOracle(const VerificationParams& params, GroundTruthFn ground_truth);

  /// Result is canonical in the unordered keyframe pair: the returned edge
  /// runs from the smaller key to the larger one regardless of which side
  /// was the query. Throws MissingGroundTruth if a pose is unknown.
  std::optional<Edge> verify(const LoopCandidate& candidate) const;

  const VerificationParams& params() const { return params_; }

 private:
  VerificationParams params_;
  GroundTruthFn ground_truth_;
};

}  // namespace swarmpgo
