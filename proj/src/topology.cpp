#include "pncmac/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace pncmac::sim {

double link_threshold_dbm(const phy::PhyParams& phy, const frames::TimingParams& timing, int payload) {
  const auto bits = std::llround(static_cast<double>(frames::data_airtime(payload, timing)) *
                                 timing.bits_per_us);
  return phy::per_threshold_dbm(0.01, bits, phy);
}

double link_range_m(const phy::PhyParams& phy, double threshold_dbm) {
  return std::pow(10.0, (phy.tx_power_dbm - threshold_dbm) / (10.0 * phy.path_loss_exp));
}

Topology build_wheel(int pairs, double max_radius, double range_m, double chord_margin_m) {
  if (pairs < 1) throw ConfigError("topology.pairs must be >= 1");
  double r = max_radius;
  if (pairs > 1) {
    // Longest non-opposite chord spans pairs-1 steps of pi/pairs.
    const double longest = 2.0 * std::cos(std::numbers::pi / (2.0 * pairs));
    r = std::min(r, (range_m - chord_margin_m) / longest);
  }
  if (2.0 * r <= range_m) {
    std::ostringstream msg;
    msg << "topology.pairs=" << pairs << " infeasible: neighbour chords need radius <= " << r
        << " m but opposite nodes need radius > " << range_m / 2.0 << " m";
    throw ConfigError(msg.str());
  }
  Topology t;
  t.kind = "wheel";
  t.radius = r;
  t.relay = 0;
  t.positions.push_back({0.0, 0.0});
  for (int k = 0; k < 2 * pairs; ++k) {
    const double angle = std::numbers::pi * k / pairs;
    t.positions.push_back({r * std::cos(angle), r * std::sin(angle)});
  }
  for (int k = 1; k <= pairs; ++k) t.flows.push_back({k, k + pairs});
  return t;
}

Topology build_line(int n, double spacing) {
  if (n < 2) throw ConfigError("topology.n must be >= 2");
  if (!(spacing > 0.0)) throw ConfigError("topology.spacing must be positive");
  Topology t;
  t.kind = "line";
  for (int k = 0; k < n; ++k) t.positions.push_back({spacing * k, 0.0});
  t.flows.push_back({0, n - 1});
  return t;
}

Topology build_random(int nodes, double side, int flow_count, double range_m, Rng& rng,
                      int max_tries) {
  if (nodes < 2 * flow_count) throw ConfigError("topology.nodes must be >= 2 * topology.flows");
  std::uniform_real_distribution<double> coord(0.0, side);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Topology t;
    t.kind = "random";
    for (int k = 0; k < nodes; ++k) {
      const double x = coord(rng);
      t.positions.push_back({x, coord(rng)});
    }
    std::vector<NodeId> ids(static_cast<std::size_t>(nodes));
    for (int k = 0; k < nodes; ++k) ids[static_cast<std::size_t>(k)] = k;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (int f = 0; f < flow_count; ++f) {
      t.flows.push_back({ids[static_cast<std::size_t>(2 * f)], ids[static_cast<std::size_t>(2 * f + 1)]});
    }
    const Routing routing(t.positions, range_m);
    if (std::all_of(t.flows.begin(), t.flows.end(),
                    [&](const Flow& f) { return routing.hops(f.a, f.b) > 0; })) {
      return t;
    }
  }
  throw ConfigError("topology: no routable random placement found");
}

Routing::Routing(const std::vector<Position>& positions, double range_m)
    : n_(positions.size()), adj_(n_), dist_(n_ * n_, -1) {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (i != j && distance(positions[i], positions[j]) <= range_m) {
        adj_[i].push_back(static_cast<NodeId>(j));
      }
    }
  }
  for (std::size_t d = 0; d < n_; ++d) {
    int* dist = &dist_[d * n_];
    dist[d] = 0;
    std::queue<std::size_t> q;
    q.push(d);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (const auto u : adj_[v]) {
        if (dist[u] < 0) {
          dist[u] = dist[v] + 1;
          q.push(static_cast<std::size_t>(u));
        }
      }
    }
  }
}

bool Routing::linked(NodeId a, NodeId b) const {
  const auto& v = adj_[static_cast<std::size_t>(a)];
  return std::find(v.begin(), v.end(), b) != v.end();
}

int Routing::hops(NodeId from, NodeId to) const {
  return dist_[static_cast<std::size_t>(to) * n_ + static_cast<std::size_t>(from)];
}

NodeId Routing::next_hop(NodeId at, NodeId dest) const {
  const int h = hops(at, dest);
  if (h <= 0) return kNoNode;
  for (const auto u : adj_[static_cast<std::size_t>(at)]) {  // ascending ids
    if (hops(u, dest) == h - 1) return u;
  }
  return kNoNode;
}

NodeId Routing::second_hop(NodeId at, NodeId dest) const {
  const NodeId next = next_hop(at, dest);
  if (next == kNoNode || next == dest) return kNoNode;
  return next_hop(next, dest);
}

std::vector<NodeId> Routing::path(NodeId from, NodeId to) const {
  std::vector<NodeId> p{from};
  if (hops(from, to) < 0) return {};
  while (p.back() != to) p.push_back(next_hop(p.back(), to));
  return p;
}

}  // namespace pncmac::sim
