#pragma once

#include <compare>
#include <cstdint>
#include <limits>

namespace pncmac {

/// Simulated time in integer microseconds.
using SimTime = std::int64_t;

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

inline constexpr SimTime kSecond = 1'000'000;

/// A data payload travelling through the network.
struct Packet {
  std::uint64_t id = 0;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  std::uint16_t seq = 0;
  int length_bytes = 0;
  SimTime created_at = 0;
  int flow = -1;  // index into the scenario's flow list
};

/// (next hop, second hop) pair that keys queue adverts and wait-for-PNC flags.
struct HopKey {
  NodeId next_hop = kNoNode;
  NodeId second_hop = kNoNode;
  auto operator<=>(const HopKey&) const = default;
};

}  // namespace pncmac
