#include "pncmac/dcf_mac.hpp"

namespace pncmac::mac {

using frames::FrameKind;

void DcfMac::access_granted() {
  if (queue_.empty()) {
    reevaluate();
    return;
  }
  const auto& head = queue_.entries().front();
  packet_ = head.packet.id;
  peer_ = head.next_hop;
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime ack = frames::control_airtime(FrameKind::kAck, t_);
  const SimTime data = frames::data_airtime(head.packet.length_bytes, t_);
  begin_exchange();
  const auto* rts = send(make_frame(FrameKind::kRts, 3 * t_.sifs + cts + data + ack, {peer_}));
  phase_ = Phase::kWaitCts;
  timeout_ = at(rts->end + t_.sifs + cts + 1, [this] {
    timeout_ = sim::kNoEvent;
    fail();
  });
}

void DcfMac::fail() {
  phase_ = Phase::kIdle;
  settle(packet_, queueing::AttemptOutcome::kFailed);
  end_exchange(false);
}

void DcfMac::handle_frame(const sim::Transmission& tx) {
  const auto& f = tx.frame;
  const SimTime cts_time = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime ack_time = frames::control_airtime(FrameKind::kAck, t_);
  switch (f.kind) {
    case FrameKind::kRts:
      if (f.receiver() != id_ || phase_ != Phase::kIdle || now() < nav_until()) return;
      at(now() + t_.sifs, [this, to = tx.transmitter, dur = f.duration - t_.sifs - cts_time] {
        send(make_frame(FrameKind::kCts, dur, {to}));
      });
      return;
    case FrameKind::kCts: {
      if (f.receiver() != id_ || phase_ != Phase::kWaitCts || tx.transmitter != peer_) return;
      cancel(timeout_);
      const auto* entry = queue_.find(packet_);
      at(now() + t_.sifs, [this, p = entry->packet, ack_time] {
        auto data = make_frame(FrameKind::kData, t_.sifs + ack_time, {peer_});
        data.source = p.source;
        data.seq = p.seq;
        data.payload_len = p.length_bytes;
        const auto* sent = send(std::move(data), {p});
        if (!sent) {
          fail();
          return;
        }
        phase_ = Phase::kWaitAck;
        timeout_ = at(sent->end + t_.sifs + ack_time + 1, [this] {
          timeout_ = sim::kNoEvent;
          fail();
        });
      });
      return;
    }
    case FrameKind::kData:
      if (f.receiver() != id_) return;
      at(now() + t_.sifs, [this] { send(make_frame(FrameKind::kAck, 0, {})); });
      for (const auto& p : tx.packets) accept_packet(p, tx.transmitter, 0);
      return;
    case FrameKind::kAck:
      if (phase_ != Phase::kWaitAck || tx.transmitter != peer_) return;
      cancel(timeout_);
      phase_ = Phase::kIdle;
      ++ctx_.metrics.unicast_exchanges;
      settle(packet_, queueing::AttemptOutcome::kAcked);
      end_exchange(true);
      return;
    default:
      return;
  }
}

}  // namespace pncmac::mac
