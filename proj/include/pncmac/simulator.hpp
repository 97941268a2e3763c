#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pncmac/frames.hpp"
#include "pncmac/metrics.hpp"
#include "pncmac/phy.hpp"
#include "pncmac/pnc_mac.hpp"
#include "pncmac/topology.hpp"

namespace pncmac::sim {

enum class Protocol { kPnc, kCnc, kDot11 };

std::string_view to_string(Protocol p);
/// Throws ConfigError on an unknown name.
Protocol parse_protocol(std::string_view name);

struct TopologySpec {
  std::string kind;  // wheel | line | random
  int pairs = 1;
  double max_radius = 150.0;
  int n = 3;
  double spacing = 150.0;
  int nodes = 40;
  double side = 1000.0;
  int flows = 10;
  std::uint64_t seed_base = 0;
};

struct TrafficSpec {
  std::string model = "backlogged";  // backlogged | poisson
  double rate = 5.0;                 // packets/s per flow direction (poisson)
  int payload = 1000;
  int backlog = 2;                   // packets kept waiting at a backlogged source
};

struct RunConfig {
  TopologySpec topology;
  Protocol protocol = Protocol::kPnc;
  /// Replaces the protocol preset with PncMac and these features.
  std::optional<mac::MacFeatures> features;
  TrafficSpec traffic;
  SimTime duration = 50 * kSecond;
  SimTime warmup = 0;
  std::uint64_t seed = 1;
  phy::PhyParams phy;
  frames::TimingParams timing;
  std::size_t queue_capacity = queueing::kDefaultCapacity;
  bool trace = false;
};

struct RunResult {
  Summary summary;
  std::vector<std::string> trace;
  Topology topology;
  double link_threshold_dbm = 0.0;
  double range_m = 0.0;
  std::uint64_t events = 0;
  std::uint64_t queued = 0;  // packets still waiting in some queue at the end
  std::uint64_t overflow_drops = 0;
  std::uint64_t retry_drops = 0;
};

/// Checks a config without running it. Throws ConfigError.
void validate(const RunConfig& config);
/// Builds the topology a config describes.
Topology make_topology(const RunConfig& config, double range_m);

/// One isolated, deterministic run.
RunResult run(const RunConfig& config);

}  // namespace pncmac::sim
