#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.h"
#include "swarmpgo/g2o_io.h"
#include "swarmpgo/pose_graph.h"

using namespace swarmpgo;

namespace {

// Straight chain along +x with the given per-step length; returns the graph
// with ground-truth estimates and noiseless odometry edges.
PoseGraph make_chain(int robot, int n_nodes, double step_m) {
  PoseGraph g;
  const Pose3 step(Rotation3(), Vector3(step_m, 0, 0));
  Pose3 pose;
  for (int i = 0; i < n_nodes; ++i) {
    g.addNode(NodeKey{robot, i}, pose);
    pose = pose.compose(step);
  }
  for (int i = 0; i + 1 < n_nodes; ++i) {
    Edge e;
    e.src = NodeKey{robot, i};
    e.dst = NodeKey{robot, i + 1};
    e.kind = EdgeKind::Odometry;
    e.measurement = step;
    g.addEdge(e);
  }
  return g;
}

int coarse_count_prefix_oracle(const std::vector<double>& steps, double d) {
  // Scalar re-statement of the aggregation rule: node 0 is a representative,
  // and a new one opens whenever the running sum reaches d.
  int count = 1;
  double cum = 0.0;
  for (double s : steps) {
    cum += s;
    if (cum >= d) {
      ++count;
      cum = 0.0;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("residual is zero at exact estimates") {
  std::mt19937 rng(8);
  const Pose3 xi = oracle::random_pose(rng);
  Edge e;
  e.src = NodeKey{0, 0};
  e.dst = NodeKey{0, 5};
  e.kind = EdgeKind::PrivateLoop;
  e.measurement = oracle::random_pose(rng, 2.0);
  const Pose3 xj = xi.compose(e.measurement);
  CHECK(residual(e, xi, xj).norm() < 1e-12);

  Edge prior;
  prior.src = prior.dst = NodeKey{0, 0};
  prior.kind = EdgeKind::Prior;
  prior.measurement = xi;
  CHECK(residual(prior, xi, xi).norm() < 1e-12);
}

TEST_CASE("residual of a perturbed endpoint matches the matrix oracle") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose3 xi = oracle::random_pose(rng);
    Edge e;
    e.src = NodeKey{0, 0};
    e.dst = NodeKey{1, 0};
    e.kind = EdgeKind::InterRobotLoop;
    e.measurement = oracle::random_pose(rng, 2.0);
    const Pose3 delta = oracle::random_pose(rng, 1.0, 0.5);
    const Pose3 xj = xi.compose(e.measurement).compose(delta);
    // Error pose by independent 4x4 arithmetic.
    const Matrix4 err = e.measurement.matrix().inverse() * xi.matrix().inverse() * xj.matrix();
    const Twist r = residual(e, xi, xj);
    CHECK(std::abs(r.norm() - log_map(Pose3::fromMatrix(err)).norm()) < 1e-9);
    CHECK(std::abs(r.norm() - log_map(delta).norm()) < 1e-9);
  }
}

TEST_CASE("graph_cost on noiseless chain is zero") {
  const PoseGraph g = make_chain(0, 20, 0.5);
  CHECK(graph_cost(g, true) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("graph_cost single edge hand value") {
  PoseGraph g;
  g.addNode(NodeKey{0, 0}, Pose3());
  g.addNode(NodeKey{0, 1}, Pose3(Rotation3(), Vector3(0.3, 0, 0)));
  Edge e;
  e.src = NodeKey{0, 0};
  e.dst = NodeKey{0, 1};
  e.kind = EdgeKind::Odometry;
  e.measurement = Pose3();  // residual is the pure 0.3 m translation
  e.information = Information6::Identity();
  g.addEdge(e);
  CHECK(graph_cost(g, true) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("graph_cost matches brute-force per-edge summation") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    PoseGraph g;
    std::vector<NodeKey> keys;
    for (int i = 0; i < 50; ++i) {
      const NodeKey k{0, i};
      g.addNode(k, oracle::random_pose(rng, 2.0));
      keys.push_back(k);
    }
    std::uniform_int_distribution<int> pick(0, 49);
    std::uniform_real_distribution<double> wdist(0.0, 1.0);
    for (int i = 0; i + 1 < 50; ++i) {
      Edge e;
      e.src = keys[i];
      e.dst = keys[i + 1];
      e.kind = EdgeKind::Odometry;
      e.measurement = oracle::random_pose(rng, 1.0);
      e.information = diagonal_information(0.2, 0.5);
      g.addEdge(e);
    }
    for (int l = 0; l < 30; ++l) {
      int a = pick(rng), b = pick(rng);
      if (std::abs(a - b) <= 1) continue;
      Edge e;
      e.src = keys[std::min(a, b)];
      e.dst = keys[std::max(a, b)];
      e.kind = EdgeKind::PrivateLoop;
      e.measurement = oracle::random_pose(rng, 1.0);
      e.information = diagonal_information(0.3, 0.4);
      e.gnc_weight = wdist(rng);
      g.addEdge(e);
    }
    for (bool use_weights : {true, false}) {
      double expect = 0.0;
      for (const Edge& e : g.edges()) {
        const Twist r = residual(e, g.estimate(e.src), g.estimate(e.dst));
        expect += (use_weights ? e.gnc_weight : 1.0) * r.dot(e.information * r);
      }
      CHECK(graph_cost(g, use_weights) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("graph_cost requires estimates") {
  PoseGraph g;
  g.addNode(NodeKey{0, 0});
  CHECK_THROWS_AS(graph_cost(g, true), MissingEstimate);
}

TEST_CASE("coarsen 11-node chain at d=2 keeps nodes 0 and 10") {
  const PoseGraph g = make_chain(0, 11, 0.2);
  auto [coarse, cmap] = coarsen(g, 2.0);
  CHECK(coarse.numNodes() == 2);
  CHECK(coarse.hasNode(NodeKey{0, 0}));
  CHECK(coarse.hasNode(NodeKey{0, 10}));
  // The coarse odometry edge composes the ten fine steps.
  REQUIRE(coarse.numEdges() == 1);
  CHECK(coarse.edges()[0].measurement.translation().x() == doctest::Approx(2.0));
}

TEST_CASE("coarsen with d below the step size keeps every node") {
  const PoseGraph g = make_chain(0, 25, 0.5);
  auto [coarse, cmap] = coarsen(g, 0.4);
  CHECK(coarse.numNodes() == g.numNodes());
  CHECK(coarse.numEdges() == g.numEdges());
  for (const auto& [fine, entry] : cmap.fine_to_coarse) {
    CHECK(entry.representative == fine);
    CHECK(entry.offset.isApprox(Pose3(), 1e-12));
  }
}

TEST_CASE("coarsen 1000-node chain at d=2 gives 100 coarse nodes") {
  const PoseGraph g = make_chain(0, 1000, 0.2);
  auto [coarse, cmap] = coarsen(g, 2.0);
  CHECK(coarse.numNodes() == 100);
}

TEST_CASE("coarse node count matches the scalar prefix-sum oracle") {
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> len(0.05, 1.3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 200);
    std::vector<double> steps;
    PoseGraph g;
    Pose3 pose;
    g.addNode(NodeKey{0, 0}, pose);
    for (int i = 1; i < n; ++i) {
      const double s = len(rng);
      steps.push_back(s);
      const Pose3 m(Rotation3::exp(Vector3(0, 0, 0.01 * s)), Vector3(s, 0, 0));
      pose = pose.compose(m);
      g.addNode(NodeKey{0, i}, pose);
      Edge e;
      e.src = NodeKey{0, i - 1};
      e.dst = NodeKey{0, i};
      e.kind = EdgeKind::Odometry;
      e.measurement = m;
      g.addEdge(e);
    }
    const double d = 2.0;
    auto [coarse, cmap] = coarsen(g, d);
    CHECK(static_cast<int>(coarse.numNodes()) == coarse_count_prefix_oracle(steps, d));
  }
}

TEST_CASE("coarsening reconstructs the fine chain and keeps zero cost at truth") {
  std::mt19937 rng(44);
  // Wiggly chain with loop edges.
  PoseGraph g;
  Pose3 pose;
  std::vector<Pose3> gt;
  const int n = 60;
  for (int i = 0; i < n; ++i) {
    gt.push_back(pose);
    g.addNode(NodeKey{0, i}, pose);
    const Pose3 m(Rotation3::exp(Vector3(0.0, 0.0, 0.15)), Vector3(0.4, 0.05, 0));
    if (i + 1 < n) {
      pose = pose.compose(m);
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    Edge e;
    e.src = NodeKey{0, i};
    e.dst = NodeKey{0, i + 1};
    e.kind = EdgeKind::Odometry;
    e.measurement = between(gt[i], gt[i + 1]);
    g.addEdge(e);
  }
  for (int i = 0; i + 25 < n; i += 7) {
    Edge e;
    e.src = NodeKey{0, i};
    e.dst = NodeKey{0, i + 25};
    e.kind = EdgeKind::PrivateLoop;
    e.measurement = between(gt[i], gt[i + 25]);
    g.addEdge(e);
  }
  Edge prior;
  prior.src = prior.dst = NodeKey{0, 3};
  prior.kind = EdgeKind::Prior;
  prior.measurement = gt[3];
  g.addEdge(prior);

  auto [coarse, cmap] = coarsen(g, 2.0);
  // Reconstruction with identity corrections reproduces the odometry chain.
  for (int i = 0; i < n; ++i) {
    const auto& entry = cmap.at(NodeKey{0, i});
    const Pose3 rebuilt = coarse.estimate(entry.representative).compose(entry.offset);
    CHECK(rebuilt.isApprox(gt[i], 1e-9));
  }
  // Noiseless edges: coarse cost at coarse ground truth is zero.
  CHECK(graph_cost(coarse, true) < 1e-16);
}

TEST_CASE("loops collapsing onto one representative are dropped") {
  PoseGraph g = make_chain(0, 12, 0.2);
  Edge loop;
  loop.src = NodeKey{0, 1};
  loop.dst = NodeKey{0, 4};
  loop.kind = EdgeKind::PrivateLoop;
  loop.measurement = Pose3(Rotation3(), Vector3(0.6, 0, 0));
  g.addEdge(loop);
  auto [coarse, cmap] = coarsen(g, 5.0);  // whole chain collapses to node 0
  CHECK(coarse.numNodes() == 1);
  CHECK(coarse.numEdges() == 0);
}

TEST_CASE("coarsen rejects an empty graph") {
  PoseGraph g;
  CHECK_THROWS_AS(coarsen(g, 2.0), EmptyGraph);
}

TEST_CASE("incremental coarsener matches the batch walk") {
  std::mt19937 rng(55);
  std::uniform_real_distribution<double> len(0.05, 0.9);
  PoseGraph g;
  IncrementalCoarsener inc(3, 2.0);
  Pose3 pose;
  g.addNode(NodeKey{3, 0}, pose);
  inc.addKeyframe(0, Pose3());
  for (int i = 1; i < 150; ++i) {
    const double s = len(rng);
    const Pose3 m(Rotation3::exp(Vector3(0, 0.02, 0.05)), Vector3(s, 0.01, 0));
    pose = pose.compose(m);
    g.addNode(NodeKey{3, i}, pose);
    Edge e;
    e.src = NodeKey{3, i - 1};
    e.dst = NodeKey{3, i};
    e.kind = EdgeKind::Odometry;
    e.measurement = m;
    g.addEdge(e);
    inc.addKeyframe(i, m);
  }
  auto [coarse, cmap] = coarsen(g, 2.0);
  for (int i = 0; i < 150; ++i) {
    const auto& batch = cmap.at(NodeKey{3, i});
    const auto& online = inc.assignment(i);
    CHECK(batch.representative == online.representative);
    CHECK(batch.offset.isApprox(online.offset, 1e-12));
  }
}

TEST_CASE("classify_inlier applies the 10 cm / 10 degree thresholds") {
  std::map<NodeKey, Pose3> gt;
  gt[NodeKey{0, 0}] = Pose3();
  gt[NodeKey{1, 0}] = Pose3(Rotation3::axisAngle(Vector3(0, 0, 1), 0.3), Vector3(2, 1, 0));
  Edge e;
  e.src = NodeKey{0, 0};
  e.dst = NodeKey{1, 0};
  e.kind = EdgeKind::InterRobotLoop;
  e.measurement = between(gt[e.src], gt[e.dst]);
  CHECK(classify_inlier(e, gt));

  Edge off = e;
  off.measurement =
      e.measurement.compose(Pose3(Rotation3(), Vector3(0.15, 0, 0)));  // 15 cm off
  CHECK_FALSE(classify_inlier(off, gt));

  Edge close = e;
  close.measurement = e.measurement.compose(
      Pose3(Rotation3::axisAngle(Vector3(0, 0, 1), 5.0 * M_PI / 180.0), Vector3(0.05, 0, 0)));
  CHECK(classify_inlier(close, gt));

  Edge unknown = e;
  unknown.dst = NodeKey{7, 7};
  CHECK_THROWS_AS(classify_inlier(unknown, gt), MissingGroundTruth);
}

TEST_CASE("edge invariants are validated") {
  PoseGraph g;
  g.addNode(NodeKey{0, 0}, Pose3());
  g.addNode(NodeKey{0, 2}, Pose3());
  g.addNode(NodeKey{1, 0}, Pose3());
  Edge bad;
  bad.src = NodeKey{0, 0};
  bad.dst = NodeKey{0, 2};
  bad.kind = EdgeKind::Odometry;  // skips index 1
  CHECK_THROWS(g.addEdge(bad));
  bad.kind = EdgeKind::InterRobotLoop;  // same robot
  CHECK_THROWS(g.addEdge(bad));
  Edge prior;
  prior.src = NodeKey{0, 0};
  prior.dst = NodeKey{1, 0};
  prior.kind = EdgeKind::Prior;
  CHECK_THROWS(g.addEdge(prior));
  // Odometry weight is pinned to 1.
  Edge odom;
  odom.src = NodeKey{0, 0};
  odom.dst = NodeKey{1, 0};
  odom.kind = EdgeKind::InterRobotLoop;
  odom.gnc_weight = 0.25;
  g.addEdge(odom);
  CHECK(g.edges().back().gnc_weight == 0.25);
  Edge pinned;
  pinned.src = prior.src;
  pinned.dst = prior.src;
  pinned.kind = EdgeKind::Prior;
  pinned.gnc_weight = 0.3;
  g.addEdge(pinned);
  CHECK(g.edges().back().gnc_weight == 1.0);
}

TEST_CASE("g2o round trip preserves the graph") {
  std::mt19937 rng(66);
  PoseGraph g;
  for (int r = 0; r < 2; ++r) {
    for (int i = 0; i < 8; ++i) {
      g.addNode(NodeKey{r, i}, oracle::random_pose(rng, 2.0));
    }
    for (int i = 0; i + 1 < 8; ++i) {
      Edge e;
      e.src = NodeKey{r, i};
      e.dst = NodeKey{r, i + 1};
      e.kind = EdgeKind::Odometry;
      e.measurement = oracle::random_pose(rng, 1.0);
      e.information = diagonal_information(0.1, 0.2);
      g.addEdge(e);
    }
  }
  Edge inter;
  inter.src = NodeKey{0, 2};
  inter.dst = NodeKey{1, 5};
  inter.kind = EdgeKind::InterRobotLoop;
  inter.measurement = oracle::random_pose(rng, 1.0);
  inter.information = diagonal_information(0.05, 0.1);
  g.addEdge(inter);
  Edge prior;
  prior.src = prior.dst = NodeKey{0, 0};
  prior.kind = EdgeKind::Prior;
  prior.measurement = oracle::random_pose(rng, 1.0);
  g.addEdge(prior);

  std::stringstream buf;
  write_g2o(g, buf);
  const PoseGraph back = read_g2o(buf);
  REQUIRE(back.numNodes() == g.numNodes());
  REQUIRE(back.numEdges() == g.numEdges());
  for (const auto& [key, est] : g.nodes()) {
    CHECK(back.estimate(key).isApprox(*est, 1e-12));
  }
  for (std::size_t k = 0; k < g.numEdges(); ++k) {
    const Edge& a = g.edges()[k];
    const Edge& b = back.edges()[k];
    CHECK(a.src == b.src);
    CHECK(a.dst == b.dst);
    CHECK(a.kind == b.kind);
    CHECK(a.measurement.isApprox(b.measurement, 1e-12));
    CHECK((a.information - b.information).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("node key packing uses the 10^6 stride") {
  CHECK(pack_node_key(NodeKey{3, 17}) == 3000017);
  const NodeKey k = unpack_node_key(3000017);
  CHECK(k.robot_id == 3);
  CHECK(k.index == 17);
}
