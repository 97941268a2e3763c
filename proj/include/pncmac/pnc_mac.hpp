#pragma once

#include "pncmac/node.hpp"

namespace pncmac::mac {

struct MacFeatures {
  bool pnc = true;
  bool cnc = true;
};

/// Relay-initiated PNC-MAC. With both features off it is plain DCF relaying;
/// with only CNC on it is the CNC-MAC baseline.
class PncMac final : public Station {
 public:
  PncMac(NodeId id, SimContext& ctx, MacFeatures features);

  const queueing::VirtualQueue& virtual_queue() const { return vq_; }
  const queueing::WaitFlagTable& wait_flags() const { return waits_; }

 protected:
  void handle_frame(const sim::Transmission& tx) override;
  void access_granted() override;
  bool wants_access() const override;
  bool nav_exempt(const sim::Transmission& tx) const override;
  void on_packet_removed(const queueing::ActualQueueEntry& e) override;

 private:
  enum class Phase {
    kIdle,
    kUnicastWaitCts,
    kUnicastWaitAck,
    kCncWaitCts,
    kCncWaitAck,
    kRelayWaitCts,
    kRelayWaitData,
    kRelayWaitAcks,
    kSourceWaitCoPnc,
    kSourceSession,
  };

  struct RelaySession {
    NodeId a = kNoNode;  // shorter packet, answers first
    NodeId b = kNoNode;
    SimTime t0 = 0;  // RTS-PNC end
    SimTime t1 = 0;  // CO-PNC end
    bool cts_a = false;
    bool cts_b = false;
    SimTime nav_a = 0;
    SimTime nav_b = 0;
    NodeId single = kNoNode;  // sole sender in a one-source exchange
    bool single_got = false;
    bool ack_a = false;
    bool ack_b = false;
    std::size_t queue_len = 0;
    std::uint64_t packet_a = 0;  // payloads of the coded frame
    std::uint64_t packet_b = 0;
  };

  struct SourceSession {
    NodeId relay = kNoNode;
    NodeId partner = kNoNode;
    frames::CtsRole role = frames::CtsRole::kA;
    std::uint64_t packet = 0;
    bool both = false;
  };

  struct CncSession {
    std::uint64_t p = 0;  // toward receivers[0]
    std::uint64_t q = 0;  // toward receivers[1]
    NodeId y = kNoNode;
    NodeId x = kNoNode;
    SimTime rts_end = 0;
    bool cts_y = false;
    bool cts_x = false;
    bool ack_y = false;
    bool ack_x = false;
  };

  // unicast
  void start_unicast(std::uint64_t id, bool after_rts_pnc_slot = false);
  void send_unicast_data();
  void unicast_fail();
  // relay
  void start_pnc(const queueing::TxAction& action);
  void relay_decide();
  void relay_collect();
  void relay_finish();
  void relay_fail();
  void relay_close(std::optional<bool> success);
  // source
  void source_rts_pnc(const sim::Transmission& tx);
  void source_co_pnc(const sim::Transmission& tx);
  void source_coded(const sim::Transmission& tx);
  void source_finish(bool acked);
  void source_abandon();
  // cnc
  void start_cnc(const queueing::TxAction& action);
  void cnc_decide();
  void cnc_finish();
  // receivers
  void on_data(const sim::Transmission& tx);
  void on_ack(const sim::Transmission& tx);
  void respond_cnc_rts(const sim::Transmission& tx);
  void respond_cnc_data(const sim::Transmission& tx);

  frames::QueueAdvert onward_advert(const Packet& p) const;
  void apply_wait_bit(HopKey key, bool bit);
  bool wait_bit_for(const queueing::ActualQueueEntry& e) const;
  void set_wait(HopKey key, queueing::WaitEvent event);
  void arm_wait_check(HopKey key);
  queueing::SelectOptions options() const { return {features_.pnc, features_.cnc}; }
  SimTime ack_time() const;

  MacFeatures features_;
  queueing::VirtualQueue vq_;
  queueing::WaitFlagTable waits_;
  Phase phase_ = Phase::kIdle;
  sim::EventId timeout_ = sim::kNoEvent;

  std::uint64_t packet_ = 0;
  NodeId peer_ = kNoNode;
  RelaySession relay_;
  SourceSession src_;
  CncSession cnc_;
  std::pair<NodeId, NodeId> retry_pair_{kNoNode, kNoNode};
  int pnc_retries_ = 0;
};

}  // namespace pncmac::mac
