#pragma once

#include <string>
#include <vector>

#include "pncmac/frames.hpp"
#include "pncmac/medium.hpp"
#include "pncmac/phy.hpp"
#include "pncmac/random.hpp"

namespace pncmac::sim {

/// Bidirectional flow between two endpoints.
struct Flow {
  NodeId a = kNoNode;
  NodeId b = kNoNode;
};

struct Topology {
  std::string kind;
  std::vector<Position> positions;
  std::vector<Flow> flows;
  double radius = 0.0;  // wheel only
  NodeId relay = kNoNode;  // wheel only
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RSS at which a full DATA frame of `payload` bytes sees 1% PER without interference.
double link_threshold_dbm(const phy::PhyParams& phy, const frames::TimingParams& timing, int payload);
/// Distance at which the received power equals `threshold_dbm`.
double link_range_m(const phy::PhyParams& phy, double threshold_dbm);

/// Relay (node 0) at the centre, 2*pairs nodes on a circle, opposite nodes paired.
/// Throws ConfigError when no radius keeps neighbours linked and opposites apart.
Topology build_wheel(int pairs, double max_radius, double range_m, double chord_margin_m = 10.0);
Topology build_line(int n, double spacing);
/// Uniform placement, regenerated until every flow is routable.
Topology build_random(int nodes, double side, int flow_count, double range_m, Rng& rng,
                      int max_tries = 1000);

/// Hop-count shortest paths over links with distance <= range; ties go to the
/// smallest next-hop id.
class Routing {
 public:
  Routing(const std::vector<Position>& positions, double range_m);

  bool linked(NodeId a, NodeId b) const;
  int hops(NodeId from, NodeId to) const;  // -1 if unreachable
  NodeId next_hop(NodeId at, NodeId dest) const;
  /// Next hop of next_hop, or kNoNode when next_hop is the destination.
  NodeId second_hop(NodeId at, NodeId dest) const;
  std::vector<NodeId> path(NodeId from, NodeId to) const;

 private:
  std::size_t n_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<int> dist_;  // dist_[dest * n + v]
};

}  // namespace pncmac::sim
