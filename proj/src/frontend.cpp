#include "swarmpgo/frontend.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace swarmpgo {

double bow_similarity(const BowVector& a, const BowVector& b) {
  return kernels::l1_similarity(a.weights, b.weights);
}

bool should_publish_bow(int frame_index, int n_b) {
  if (n_b < 1) {
    throw std::invalid_argument("bow downsampling factor must be >= 1");
  }
  return frame_index % n_b == 0;
}

int frontend_owner(int robot_a, int robot_b) { return std::min(robot_a, robot_b); }

double normalized_similarity(const BowVector& query, const BowVector& candidate,
                             const BowVector& query_prev) {
  const double reference = bow_similarity(query, query_prev);
  if (reference <= 1e-6) {
    throw DegenerateReference();
  }
  return bow_similarity(query, candidate) / reference;
}

BowDatabase::BowDatabase(int owner_robot, const FrontendParams& params)
    : owner_robot_(owner_robot), params_(params) {}

void BowDatabase::noteLatestPublished(int robot, int frame_index) {
  auto& store = stores_[robot];
  store.known_max = std::max(store.known_max, frame_index);
}

bool BowDatabase::contains(int robot, int frame_index) const {
  auto it = stores_.find(robot);
  return it != stores_.end() && it->second.frames.count(frame_index) > 0;
}

const BowVector* BowDatabase::find(int robot, int frame_index) const {
  auto it = stores_.find(robot);
  if (it == stores_.end()) return nullptr;
  auto frame = it->second.frames.find(frame_index);
  return frame == it->second.frames.end() ? nullptr : &frame->second;
}

int BowDatabase::knownMax(int robot) const {
  auto it = stores_.find(robot);
  return it == stores_.end() ? -1 : it->second.known_max;
}

std::vector<int> BowDatabase::gaps(int robot) const {
  std::vector<int> out;
  auto it = stores_.find(robot);
  if (it == stores_.end()) return out;
  for (int f = 0; f <= it->second.known_max; f += params_.bow_skip) {
    if (!it->second.frames.count(f)) {
      out.push_back(f);
    }
  }
  return out;
}

std::vector<int> BowDatabase::robots() const {
  std::vector<int> out;
  for (const auto& [robot, store] : stores_) out.push_back(robot);
  return out;
}

std::size_t BowDatabase::storedCount() const {
  std::size_t n = 0;
  for (const auto& [robot, store] : stores_) n += store.frames.size();
  return n;
}

bool BowDatabase::candidateAllowed(int query_robot, int query_frame, int match_robot,
                                   int match_frame) const {
  if (query_robot == match_robot) {
    if (std::abs(query_frame - match_frame) < params_.min_temporal_gap) return false;
  }
  if (owner_robot_ >= 0 && frontend_owner(query_robot, match_robot) != owner_robot_) {
    return false;
  }
  return true;
}

std::optional<LoopCandidate> BowDatabase::evaluate(int query_robot, const BowVector& query,
                                                   int match_robot,
                                                   const BowVector& match) const {
  if (!candidateAllowed(query_robot, query.frame_index, match_robot, match.frame_index)) {
    return std::nullopt;
  }
  const BowVector* prev = find(query_robot, query.frame_index - params_.bow_skip);
  if (prev == nullptr) {
    return std::nullopt;
  }
  double score = 0.0;
  try {
    score = normalized_similarity(query, match, *prev);
  } catch (const DegenerateReference&) {
    return std::nullopt;
  }
  if (score < params_.alpha) {
    return std::nullopt;
  }
  return LoopCandidate{NodeKey{query_robot, query.frame_index},
                       NodeKey{match_robot, match.frame_index}, score};
}

void BowDatabase::collectQueryCandidates(int robot, const BowVector& vec,
                                         std::vector<LoopCandidate>& out) const {
  for (const auto& [match_robot, store] : stores_) {
    for (const auto& [frame, match] : store.frames) {
      if (match_robot == robot && frame == vec.frame_index) continue;
      if (auto candidate = evaluate(robot, vec, match_robot, match)) {
        out.push_back(*candidate);
      }
    }
  }
}

std::vector<LoopCandidate> BowDatabase::query(int robot, const BowVector& vec) const {
  std::vector<LoopCandidate> out;
  collectQueryCandidates(robot, vec, out);
  return out;
}

std::vector<LoopCandidate> BowDatabase::ingest(int robot, const BowVector& vec) {
  auto& store = stores_[robot];
  if (store.frames.count(vec.frame_index)) {
    return {};
  }
  store.frames.emplace(vec.frame_index, vec);
  store.known_max = std::max(store.known_max, vec.frame_index);

  std::vector<LoopCandidate> out;
  // The new vector is a potential match for every already-queryable vector.
  for (const auto& [query_robot, qstore] : stores_) {
    for (int query_frame : qstore.ready) {
      if (query_robot == robot && query_frame == vec.frame_index) continue;
      if (auto candidate =
              evaluate(query_robot, qstore.frames.at(query_frame), robot, vec)) {
        out.push_back(*candidate);
      }
    }
  }
  // Newly queryable vectors (this one, and any successor it unlocks) run
  // their full query against the store.
  std::vector<std::pair<int, int>> newly_ready;
  auto try_ready = [&](int r, int frame) {
    auto& s = stores_[r];
    if (!s.frames.count(frame) || s.ready.count(frame)) return;
    if (frame != 0 && !s.frames.count(frame - params_.bow_skip)) return;
    if (frame == 0) return;  // the first frame has no normalization reference
    s.ready.insert(frame);
    newly_ready.emplace_back(r, frame);
  };
  try_ready(robot, vec.frame_index);
  try_ready(robot, vec.frame_index + params_.bow_skip);
  for (const auto& [query_robot, query_frame] : newly_ready) {
    collectQueryCandidates(query_robot, stores_.at(query_robot).frames.at(query_frame),
                           out);
  }
  return out;
}

std::optional<std::pair<int, std::vector<int>>> audit_missing_bow(
    const BowDatabase& db, const std::vector<int>& connected_peers) {
  int best_peer = -1;
  std::vector<int> best_gaps;
  for (int peer : connected_peers) {
    std::vector<int> peer_gaps = db.gaps(peer);
    if (peer_gaps.size() > best_gaps.size() ||
        (peer_gaps.size() == best_gaps.size() && !peer_gaps.empty() && peer < best_peer)) {
      best_peer = peer;
      best_gaps = std::move(peer_gaps);
    }
  }
  if (best_peer < 0 || best_gaps.empty()) {
    return std::nullopt;
  }
  return std::make_pair(best_peer, best_gaps);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t candidate_seed(std::uint64_t base, const NodeKey& a, const NodeKey& b) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(a.robot_id) << 32 |
                      static_cast<std::uint32_t>(a.index)));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(b.robot_id) << 32 |
                      static_cast<std::uint32_t>(b.index)));
  return h;
}

}  // namespace

VerificationOracle::VerificationOracle(const VerificationParams& params,
                                       GroundTruthFn ground_truth)
    : params_(params), ground_truth_(std::move(ground_truth)) {}

std::optional<Edge> VerificationOracle::verify(const LoopCandidate& candidate) const {
  NodeKey src = candidate.query;
  NodeKey dst = candidate.match;
  if (dst < src) std::swap(src, dst);
  const Pose3* gt_src = ground_truth_(src);
  const Pose3* gt_dst = ground_truth_(dst);
  if (gt_src == nullptr || gt_dst == nullptr) {
    throw MissingGroundTruth("oracle has no pose for " + to_string(src) + " or " +
                             to_string(dst));
  }
  std::mt19937_64 rng(candidate_seed(params_.seed, src, dst));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Edge edge;
  edge.src = src;
  edge.dst = dst;
  edge.kind = src.robot_id == dst.robot_id ? EdgeKind::PrivateLoop
                                           : EdgeKind::InterRobotLoop;
  edge.information = diagonal_information(params_.info_sigma_factor * params_.sigma_rot,
                                          params_.info_sigma_factor * params_.sigma_trans);

  const bool covisible =
      translation_distance(*gt_src, *gt_dst) <= params_.covis_radius_m &&
      rotation_geodesic_deg(gt_src->rotation(), gt_dst->rotation()) <=
          params_.covis_max_angle_deg;
  if (covisible) {
    Twist noise;
    noise << params_.sigma_rot * gauss(rng), params_.sigma_rot * gauss(rng),
        params_.sigma_rot * gauss(rng), params_.sigma_trans * gauss(rng),
        params_.sigma_trans * gauss(rng), params_.sigma_trans * gauss(rng);
    edge.measurement = between(*gt_src, *gt_dst).compose(exp_map(noise));
    return edge;
  }
  if (unit(rng) >= params_.false_positive_prob) {
    return std::nullopt;
  }
  // Outlier: uniformly random rotation, translation uniform in the box.
  Vector3 axis(gauss(rng), gauss(rng), gauss(rng));
  while (axis.norm() < 1e-9) axis = Vector3(gauss(rng), gauss(rng), gauss(rng));
  const double angle = unit(rng) * (M_PI - 0.1);
  const double box = params_.outlier_box_m;
  edge.measurement =
      Pose3(Rotation3::axisAngle(axis, angle),
            Vector3(box * (2.0 * unit(rng) - 1.0), box * (2.0 * unit(rng) - 1.0),
                    box * (2.0 * unit(rng) - 1.0)));
  return edge;
}

}  // namespace swarmpgo
