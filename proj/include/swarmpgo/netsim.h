#pragma once

#include <any>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "swarmpgo/se3.h"

namespace swarmpgo {

enum class Channel { Reliable, Unreliable };

struct Envelope {
  int src = 0;
  int dst = 0;
  std::string topic;
  Channel channel = Channel::Unreliable;
  std::size_t size_bytes = 0;
  double enqueue_time = 0.0;
  std::any payload;
  // Filled by the simulator.
  std::uint64_t seq = 0;
  double deliver_time = 0.0;
};

struct LinkModel {
  double base_delay_s = 0.02;
  double jitter_s = 0.01;       // uniform in [0, jitter]
  double drop_prob = 0.0;
  double bandwidth_Bps = 0.0;   // 0 = uncapped, else per directed pair
  double rto_s = 0.2;           // reliable retransmission timeout
  double rto_max_s = 5.0;       // exponential backoff cap
};

enum class ScenarioVariant { Full, Random, Distance, Base };

struct Scenario {
  ScenarioVariant variant = ScenarioVariant::Full;
  double threshold_m = 75.0;  // Distance threshold, also the Base radius
  int random_events_per_node = 3;
  double random_duration_s = 90.0;
  std::uint64_t seed = 0;
  int base_node = -1;         // node id of the base station, -1 when absent
  bool disrupt_base = false;  // apply Random windows to the base node too
};

ScenarioVariant scenario_from_string(const std::string& name);
std::string to_string(ScenarioVariant variant);

using PositionFn = std::function<Vector3(int node, double t)>;

using Adjacency = std::vector<std::vector<bool>>;

/// Time-varying connectivity law. Random-scenario disconnection windows are
/// sampled once from the seed: per node, events_per_node non-overlapping
/// windows of duration_s drawn uniformly inside the mission.
class ScenarioModel {
 public:
  ScenarioModel(const Scenario& scenario, int n_nodes, double mission_duration,
                PositionFn positions);

  Adjacency connectivityAt(double t) const;
  bool sameCluster(int a, int b, double t) const;
  const std::vector<std::pair<double, double>>& windows(int node) const;
  int nodeCount() const { return n_nodes_; }

 private:
  Scenario scenario_;
  int n_nodes_;
  PositionFn positions_;
  std::vector<std::vector<std::pair<double, double>>> windows_;
};

/// Connected components of an adjacency matrix, each sorted, ordered by
/// smallest member.
std::vector<std::vector<int>> connected_clusters(const Adjacency& adjacency);

struct PairStats {
  double max_delay_s = 0.0;
  double avg_delay_s = 0.0;
  double max_bandwidth_Bps = 0.0;
  double avg_bandwidth_Bps = 0.0;
  double drop_pct = 0.0;
  std::uint64_t delivered = 0;
  std::uint64_t attempts = 0;
  std::uint64_t dropped_attempts = 0;
};

struct CommStats {
  std::map<std::pair<int, int>, PairStats> pairs;
};

/// Discrete-event peer-to-peer network on a virtual clock. Unreliable sends
/// are dropped independently with the link drop probability and delivered
/// only if the endpoints share a cluster at delivery time. Reliable sends
/// are per-pair FIFO with retransmission until delivery succeeds, preserving
/// order. A bandwidth cap serializes transmissions per directed pair.
class Netsim {
 public:
  Netsim(int n_nodes, const Scenario& scenario, const LinkModel& link,
         double mission_duration, PositionFn positions, std::uint64_t link_seed);

  void send(Envelope env);
  /// Processes all events up to to_time (monotone across calls) and returns
  /// the delivered envelopes in delivery order.
  std::vector<Envelope> step(double to_time);

  double now() const { return now_; }
  const ScenarioModel& scenario() const { return scenario_model_; }
  Adjacency connectivityAt(double t) const { return scenario_model_.connectivityAt(t); }
  std::vector<std::vector<int>> clustersAt(double t) const {
    return connected_clusters(scenario_model_.connectivityAt(t));
  }

  CommStats stats() const;

  std::uint64_t messagesSent() const { return sent_; }
  std::uint64_t messagesDelivered() const { return delivered_count_; }
  std::uint64_t messagesDropped() const { return dropped_messages_; }
  std::uint64_t messagesInFlight() const {
    return sent_ - delivered_count_ - dropped_messages_;
  }

 private:
  struct Event {
    double time = 0.0;
    std::uint64_t order = 0;
    enum class Kind { UnreliableSend, UnreliableArrival, ReliableAttempt, ReliableArrival } kind;
    Envelope env;                  // Unreliable* events
    std::pair<int, int> pair;      // Reliable* events
    double rto = 0.0;              // pending retransmission timeout
    bool operator>(const Event& other) const {
      if (time != other.time) return time > other.time;
      return order > other.order;
    }
  };

  struct ReliableQueue {
    std::deque<Envelope> pending;
    double rto = 0.0;
    bool head_active = false;  // an attempt or arrival event is in the heap
  };

  void push(Event event);
  void process(Event& event, std::vector<Envelope>& delivered);
  double occupyLink(const std::pair<int, int>& pair, double start, std::size_t bytes);
  void recordDelivery(const Envelope& env, double deliver_time);
  void startHead(const std::pair<int, int>& pair, double t);

  ScenarioModel scenario_model_;
  LinkModel link_;
  std::mt19937_64 rng_;
  double now_ = 0.0;
  std::uint64_t next_order_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::map<std::pair<int, int>, ReliableQueue> reliable_;
  std::map<std::pair<int, int>, double> busy_until_;

  std::uint64_t sent_ = 0;
  std::uint64_t delivered_count_ = 0;
  std::uint64_t dropped_messages_ = 0;

  struct PairAccumulator {
    std::uint64_t attempts = 0;
    std::uint64_t dropped_attempts = 0;
    std::uint64_t delivered = 0;
    double delay_sum = 0.0;
    double delay_max = 0.0;
    std::map<std::int64_t, double> window_bytes;  // 1 s windows
  };
  std::map<std::pair<int, int>, PairAccumulator> accum_;
};

}  // namespace swarmpgo
