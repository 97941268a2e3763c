#pragma once

#include "pncmac/node.hpp"

namespace pncmac::mac {

/// Plain IEEE 802.11 DCF with RTS/CTS: the conventional-relaying baseline.
class DcfMac final : public Station {
 public:
  DcfMac(NodeId id, SimContext& ctx) : Station(id, ctx) {}

 protected:
  void handle_frame(const sim::Transmission& tx) override;
  void access_granted() override;
  bool wants_access() const override { return !queue_.empty(); }

 private:
  enum class Phase { kIdle, kWaitCts, kWaitAck };

  void fail();

  Phase phase_ = Phase::kIdle;
  std::uint64_t packet_ = 0;
  NodeId peer_ = kNoNode;
  sim::EventId timeout_ = sim::kNoEvent;
};

}  // namespace pncmac::mac
