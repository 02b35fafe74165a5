#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "swarmpgo/pose_graph.h"

namespace swarmpgo {

/// g2o vertex ids pack (robot, index) as robot_id * 10^6 + index.
std::int64_t pack_node_key(const NodeKey& key);
NodeKey unpack_node_key(std::int64_t id);

/// Text g2o: VERTEX_SE3:QUAT and EDGE_SE3:QUAT rows (information written as
/// the 21 upper-triangular values in g2o's translation-first ordering).
/// Priors are written as EDGE_SE3_PRIOR rows with a single vertex id.
void write_g2o(const PoseGraph& graph, std::ostream& out);
void write_g2o_file(const PoseGraph& graph, const std::string& path);

PoseGraph read_g2o(std::istream& in);
PoseGraph read_g2o_file(const std::string& path);

}  // namespace swarmpgo
