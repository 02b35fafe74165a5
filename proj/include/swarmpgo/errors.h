#pragma once

#include <stdexcept>
#include <string>

namespace swarmpgo {

// Base class for recoverable failures raised by the library. Callers that
// want to distinguish causes catch the derived types below.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AngleNearPi : Error {
  AngleNearPi() : Error("log map evaluated within 1e-6 of the rotation cut locus") {}
};

struct MissingEstimate : Error {
  explicit MissingEstimate(const std::string& what) : Error(what) {}
};

struct EmptyGraph : Error {
  EmptyGraph() : Error("operation requires a non-empty pose graph") {}
};

struct MissingGroundTruth : Error {
  explicit MissingGroundTruth(const std::string& what) : Error(what) {}
};

struct NotAnchored : Error {
  explicit NotAnchored(const std::string& what) : Error(what) {}
};

struct Diverged : Error {
  explicit Diverged(const std::string& what) : Error(what) {}
};

struct MemberLost : Error {
  explicit MemberLost(int robot)
      : Error("cluster member " + std::to_string(robot) + " disconnected mid-session"),
        robot_id(robot) {}
  int robot_id;
};

struct MissingPosition : Error {
  explicit MissingPosition(const std::string& what) : Error(what) {}
};

struct DegenerateAlignment : Error {
  explicit DegenerateAlignment(const std::string& what) : Error(what) {}
};

struct DegenerateReference : Error {
  DegenerateReference() : Error("reference similarity too small to normalize against") {}
};

struct InvalidLayout : Error {
  explicit InvalidLayout(const std::string& what) : Error(what) {}
};

struct ConfigMismatch : Error {
  explicit ConfigMismatch(const std::string& what) : Error(what) {}
};

}  // namespace swarmpgo
