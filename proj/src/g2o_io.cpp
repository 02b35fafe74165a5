#include "swarmpgo/g2o_io.h"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace swarmpgo {

namespace {

constexpr std::int64_t kRobotStride = 1000000;

// Our tangent ordering is rotation-first; the g2o wire format orders
// translation first. This permutation converts between the two.
Information6 to_g2o_order(const Information6& info) {
  Information6 out;
  out.topLeftCorner<3, 3>() = info.bottomRightCorner<3, 3>();
  out.bottomRightCorner<3, 3>() = info.topLeftCorner<3, 3>();
  out.topRightCorner<3, 3>() = info.bottomLeftCorner<3, 3>();
  out.bottomLeftCorner<3, 3>() = info.topRightCorner<3, 3>();
  return out;
}

void write_pose_fields(std::ostream& out, const Pose3& p) {
  const auto& t = p.translation();
  const auto& r = p.rotation();
  out << t.x() << " " << t.y() << " " << t.z() << " " << r.x() << " " << r.y() << " "
      << r.z() << " " << r.w();
}

void write_information_fields(std::ostream& out, const Information6& info) {
  const Information6 g = to_g2o_order(info);
  for (int row = 0; row < 6; ++row) {
    for (int col = row; col < 6; ++col) {
      out << " " << g(row, col);
    }
  }
}

Information6 read_information_fields(std::istream& in) {
  Information6 g;
  for (int row = 0; row < 6; ++row) {
    for (int col = row; col < 6; ++col) {
      double v;
      in >> v;
      g(row, col) = v;
      g(col, row) = v;
    }
  }
  return to_g2o_order(g);  // the permutation is its own inverse
}

Pose3 read_pose_fields(std::istream& in) {
  double tx, ty, tz, qx, qy, qz, qw;
  in >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
  return Pose3(Rotation3::fromQuaternion(qw, qx, qy, qz), Vector3(tx, ty, tz));
}

}  // namespace

std::int64_t pack_node_key(const NodeKey& key) {
  return static_cast<std::int64_t>(key.robot_id) * kRobotStride + key.index;
}

NodeKey unpack_node_key(std::int64_t id) {
  return NodeKey{static_cast<int>(id / kRobotStride), static_cast<int>(id % kRobotStride)};
}

void write_g2o(const PoseGraph& graph, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& [key, est] : graph.nodes()) {
    if (!est.has_value()) continue;
    out << "VERTEX_SE3:QUAT " << pack_node_key(key) << " ";
    write_pose_fields(out, *est);
    out << "\n";
  }
  for (const Edge& e : graph.edges()) {
    if (e.kind == EdgeKind::Prior) {
      out << "EDGE_SE3_PRIOR " << pack_node_key(e.src) << " ";
      write_pose_fields(out, e.measurement);
      write_information_fields(out, e.information);
      out << "\n";
      continue;
    }
    out << "EDGE_SE3:QUAT " << pack_node_key(e.src) << " " << pack_node_key(e.dst) << " ";
    write_pose_fields(out, e.measurement);
    write_information_fields(out, e.information);
    out << "\n";
  }
}

void write_g2o_file(const PoseGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  write_g2o(graph, out);
}

PoseGraph read_g2o(std::istream& in) {
  PoseGraph graph;
  std::vector<Edge> pending;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "VERTEX_SE3:QUAT") {
      std::int64_t id;
      row >> id;
      graph.addNode(unpack_node_key(id), read_pose_fields(row));
    } else if (tag == "EDGE_SE3:QUAT") {
      std::int64_t id1, id2;
      row >> id1 >> id2;
      Edge e;
      e.src = unpack_node_key(id1);
      e.dst = unpack_node_key(id2);
      e.measurement = read_pose_fields(row);
      e.information = read_information_fields(row);
      if (e.src.robot_id != e.dst.robot_id) {
        e.kind = EdgeKind::InterRobotLoop;
      } else if (e.dst.index == e.src.index + 1) {
        e.kind = EdgeKind::Odometry;
      } else {
        e.kind = EdgeKind::PrivateLoop;
      }
      pending.push_back(e);
    } else if (tag == "EDGE_SE3_PRIOR") {
      std::int64_t id;
      row >> id;
      Edge e;
      e.src = unpack_node_key(id);
      e.dst = e.src;
      e.kind = EdgeKind::Prior;
      e.measurement = read_pose_fields(row);
      e.information = read_information_fields(row);
      pending.push_back(e);
    } else if (tag == "FIX") {
      continue;  // anchoring hint; priors carry our anchors
    }
  }
  // Nodes referenced by edges but missing a vertex row still need to exist.
  for (const Edge& e : pending) {
    if (!graph.hasNode(e.src)) graph.addNode(e.src);
    if (!graph.hasNode(e.dst)) graph.addNode(e.dst);
  }
  for (const Edge& e : pending) {
    graph.addEdge(e);
  }
  return graph;
}

PoseGraph read_g2o_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  return read_g2o(in);
}

}  // namespace swarmpgo
