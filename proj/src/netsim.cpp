#include "swarmpgo/netsim.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "swarmpgo/errors.h"

namespace swarmpgo {

ScenarioVariant scenario_from_string(const std::string& name) {
  if (name == "full") return ScenarioVariant::Full;
  if (name == "random") return ScenarioVariant::Random;
  if (name == "distance") return ScenarioVariant::Distance;
  if (name == "base") return ScenarioVariant::Base;
  throw ConfigMismatch("unknown scenario: " + name);
}

std::string to_string(ScenarioVariant variant) {
  switch (variant) {
    case ScenarioVariant::Full: return "full";
    case ScenarioVariant::Random: return "random";
    case ScenarioVariant::Distance: return "distance";
    case ScenarioVariant::Base: return "base";
  }
  return "full";
}

ScenarioModel::ScenarioModel(const Scenario& scenario, int n_nodes,
                             double mission_duration, PositionFn positions)
    : scenario_(scenario), n_nodes_(n_nodes), positions_(std::move(positions)) {
  if (scenario_.variant == ScenarioVariant::Base && scenario_.base_node < 0) {
    throw ConfigMismatch("Base scenario requires a base station node");
  }
  windows_.resize(n_nodes_);
  if (scenario_.variant != ScenarioVariant::Random) {
    return;
  }
  const double dur = scenario_.random_duration_s;
  const int events = scenario_.random_events_per_node;
  if (mission_duration < events * dur) {
    throw InvalidLayout("mission too short for the Random disconnection windows");
  }
  std::mt19937_64 rng(scenario_.seed);
  std::uniform_real_distribution<double> start_dist(0.0, mission_duration - dur);
  for (int node = 0; node < n_nodes_; ++node) {
    auto& windows = windows_[node];
    int guard = 0;
    while (static_cast<int>(windows.size()) < events) {
      if (++guard > 100000) {
        throw InvalidLayout("cannot place non-overlapping disconnection windows");
      }
      const double start = start_dist(rng);
      const bool overlaps = std::any_of(
          windows.begin(), windows.end(), [&](const std::pair<double, double>& w) {
            return start < w.second && w.first < start + dur;
          });
      if (!overlaps) {
        windows.emplace_back(start, start + dur);
      }
    }
    std::sort(windows.begin(), windows.end());
  }
}

const std::vector<std::pair<double, double>>& ScenarioModel::windows(int node) const {
  return windows_.at(node);
}

Adjacency ScenarioModel::connectivityAt(double t) const {
  Adjacency adj(n_nodes_, std::vector<bool>(n_nodes_, false));
  auto connect = [&](int a, int b) {
    adj[a][b] = true;
    adj[b][a] = true;
  };
  switch (scenario_.variant) {
    case ScenarioVariant::Full: {
      for (int a = 0; a < n_nodes_; ++a)
        for (int b = a + 1; b < n_nodes_; ++b) connect(a, b);
      break;
    }
    case ScenarioVariant::Random: {
      std::vector<bool> up(n_nodes_, true);
      for (int node = 0; node < n_nodes_; ++node) {
        if (node == scenario_.base_node && !scenario_.disrupt_base) continue;
        for (const auto& w : windows_[node]) {
          if (t >= w.first && t < w.second) {
            up[node] = false;
            break;
          }
        }
      }
      for (int a = 0; a < n_nodes_; ++a)
        for (int b = a + 1; b < n_nodes_; ++b)
          if (up[a] && up[b]) connect(a, b);
      break;
    }
    case ScenarioVariant::Distance: {
      std::vector<Vector3> pos(n_nodes_);
      for (int n = 0; n < n_nodes_; ++n) pos[n] = positions_(n, t);
      for (int a = 0; a < n_nodes_; ++a)
        for (int b = a + 1; b < n_nodes_; ++b)
          if ((pos[a].head<2>() - pos[b].head<2>()).norm() <= scenario_.threshold_m)
            connect(a, b);
      break;
    }
    case ScenarioVariant::Base: {
      const Vector3 base = positions_(scenario_.base_node, t);
      std::vector<bool> in_range(n_nodes_, false);
      for (int n = 0; n < n_nodes_; ++n) {
        in_range[n] =
            (positions_(n, t).head<2>() - base.head<2>()).norm() <= scenario_.threshold_m;
      }
      for (int a = 0; a < n_nodes_; ++a)
        for (int b = a + 1; b < n_nodes_; ++b)
          if (in_range[a] && in_range[b]) connect(a, b);
      break;
    }
  }
  return adj;
}

bool ScenarioModel::sameCluster(int a, int b, double t) const {
  if (a == b) return true;
  const Adjacency adj = connectivityAt(t);
  // BFS from a.
  std::vector<bool> seen(n_nodes_, false);
  std::vector<int> stack{a};
  seen[a] = true;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    if (n == b) return true;
    for (int m = 0; m < n_nodes_; ++m) {
      if (adj[n][m] && !seen[m]) {
        seen[m] = true;
        stack.push_back(m);
      }
    }
  }
  return false;
}

std::vector<std::vector<int>> connected_clusters(const Adjacency& adjacency) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<std::vector<int>> clusters;
  std::vector<bool> seen(n, false);
  for (int start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<int> cluster;
    std::vector<int> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      cluster.push_back(a);
      for (int b = 0; b < n; ++b) {
        if (adjacency[a][b] && !seen[b]) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    std::sort(cluster.begin(), cluster.end());
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

Netsim::Netsim(int n_nodes, const Scenario& scenario, const LinkModel& link,
               double mission_duration, PositionFn positions, std::uint64_t link_seed)
    : scenario_model_(scenario, n_nodes, mission_duration, std::move(positions)),
      link_(link),
      rng_(link_seed) {}

void Netsim::push(Event event) {
  event.order = next_order_++;
  events_.push(std::move(event));
}

void Netsim::send(Envelope env) {
  if (env.src == env.dst) {
    throw std::invalid_argument("envelope src == dst");
  }
  if (env.size_bytes == 0) {
    throw std::invalid_argument("envelope size must be positive");
  }
  if (env.enqueue_time < now_) {
    env.enqueue_time = now_;
  }
  env.seq = next_seq_++;
  ++sent_;
  if (env.channel == Channel::Unreliable) {
    Event ev;
    ev.kind = Event::Kind::UnreliableSend;
    ev.time = env.enqueue_time;
    ev.env = std::move(env);
    push(std::move(ev));
    return;
  }
  const std::pair<int, int> pair{env.src, env.dst};
  auto& queue = reliable_[pair];
  const double t = env.enqueue_time;
  queue.pending.push_back(std::move(env));
  if (!queue.head_active) {
    startHead(pair, t);
  }
}

void Netsim::startHead(const std::pair<int, int>& pair, double t) {
  auto& queue = reliable_[pair];
  if (queue.pending.empty()) {
    queue.head_active = false;
    return;
  }
  queue.head_active = true;
  queue.rto = link_.rto_s;
  Event ev;
  ev.kind = Event::Kind::ReliableAttempt;
  ev.time = std::max(t, queue.pending.front().enqueue_time);
  ev.pair = pair;
  push(std::move(ev));
}

double Netsim::occupyLink(const std::pair<int, int>& pair, double start,
                          std::size_t bytes) {
  double& busy = busy_until_[pair];
  const double begin = std::max(start, busy);
  const double occupancy =
      link_.bandwidth_Bps > 0.0 ? static_cast<double>(bytes) / link_.bandwidth_Bps : 0.0;
  busy = begin + occupancy;
  return busy;
}

void Netsim::recordDelivery(const Envelope& env, double deliver_time) {
  auto& acc = accum_[{env.src, env.dst}];
  ++acc.delivered;
  const double delay = deliver_time - env.enqueue_time;
  acc.delay_sum += delay;
  acc.delay_max = std::max(acc.delay_max, delay);
  acc.window_bytes[static_cast<std::int64_t>(std::floor(deliver_time))] +=
      static_cast<double>(env.size_bytes);
  ++delivered_count_;
}

void Netsim::process(Event& event, std::vector<Envelope>& delivered) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (event.kind) {
    case Event::Kind::UnreliableSend: {
      auto& acc = accum_[{event.env.src, event.env.dst}];
      ++acc.attempts;
      const double tx_end = occupyLink({event.env.src, event.env.dst}, event.time,
                                       event.env.size_bytes);
      if (unit(rng_) < link_.drop_prob) {
        ++acc.dropped_attempts;
        ++dropped_messages_;
        return;
      }
      Event arrival;
      arrival.kind = Event::Kind::UnreliableArrival;
      arrival.time = tx_end + link_.base_delay_s + link_.jitter_s * unit(rng_);
      arrival.env = std::move(event.env);
      push(std::move(arrival));
      return;
    }
    case Event::Kind::UnreliableArrival: {
      auto& acc = accum_[{event.env.src, event.env.dst}];
      if (!scenario_model_.sameCluster(event.env.src, event.env.dst, event.time)) {
        ++acc.dropped_attempts;
        ++dropped_messages_;
        return;
      }
      event.env.deliver_time = event.time;
      recordDelivery(event.env, event.time);
      delivered.push_back(std::move(event.env));
      return;
    }
    case Event::Kind::ReliableAttempt: {
      auto& queue = reliable_[event.pair];
      if (queue.pending.empty()) {
        queue.head_active = false;
        return;
      }
      auto& acc = accum_[event.pair];
      ++acc.attempts;
      const double tx_end =
          occupyLink(event.pair, event.time, queue.pending.front().size_bytes);
      if (unit(rng_) < link_.drop_prob) {
        ++acc.dropped_attempts;
        Event retry;
        retry.kind = Event::Kind::ReliableAttempt;
        retry.time = event.time + queue.rto;
        retry.pair = event.pair;
        queue.rto = std::min(queue.rto * 2.0, link_.rto_max_s);
        push(std::move(retry));
        return;
      }
      Event arrival;
      arrival.kind = Event::Kind::ReliableArrival;
      arrival.time = tx_end + link_.base_delay_s + link_.jitter_s * unit(rng_);
      arrival.pair = event.pair;
      push(std::move(arrival));
      return;
    }
    case Event::Kind::ReliableArrival: {
      auto& queue = reliable_[event.pair];
      if (queue.pending.empty()) {
        queue.head_active = false;
        return;
      }
      auto& acc = accum_[event.pair];
      if (!scenario_model_.sameCluster(event.pair.first, event.pair.second, event.time)) {
        ++acc.dropped_attempts;
        Event retry;
        retry.kind = Event::Kind::ReliableAttempt;
        retry.time = event.time + queue.rto;
        retry.pair = event.pair;
        queue.rto = std::min(queue.rto * 2.0, link_.rto_max_s);
        push(std::move(retry));
        return;
      }
      Envelope env = std::move(queue.pending.front());
      queue.pending.pop_front();
      env.deliver_time = event.time;
      recordDelivery(env, event.time);
      delivered.push_back(std::move(env));
      startHead(event.pair, event.time);
      return;
    }
  }
}

std::vector<Envelope> Netsim::step(double to_time) {
  if (to_time < now_) {
    throw std::invalid_argument("step times must be monotone");
  }
  std::vector<Envelope> delivered;
  while (!events_.empty() && events_.top().time <= to_time) {
    Event event = events_.top();
    events_.pop();
    now_ = std::max(now_, event.time);
    process(event, delivered);
  }
  now_ = to_time;
  return delivered;
}

CommStats Netsim::stats() const {
  CommStats out;
  for (const auto& [pair, acc] : accum_) {
    PairStats s;
    s.delivered = acc.delivered;
    s.attempts = acc.attempts;
    s.dropped_attempts = acc.dropped_attempts;
    if (acc.delivered > 0) {
      s.avg_delay_s = acc.delay_sum / static_cast<double>(acc.delivered);
      s.max_delay_s = acc.delay_max;
    }
    if (!acc.window_bytes.empty()) {
      double total = 0.0;
      for (const auto& [window, bytes] : acc.window_bytes) {
        total += bytes;
        s.max_bandwidth_Bps = std::max(s.max_bandwidth_Bps, bytes);
      }
      const auto span = acc.window_bytes.rbegin()->first - acc.window_bytes.begin()->first + 1;
      s.avg_bandwidth_Bps = total / static_cast<double>(span);
    }
    if (acc.attempts > 0) {
      s.drop_pct =
          100.0 * static_cast<double>(acc.dropped_attempts) / static_cast<double>(acc.attempts);
    }
    out.pairs.emplace(pair, s);
  }
  return out;
}

}  // namespace swarmpgo
