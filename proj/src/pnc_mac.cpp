#include "pncmac/pnc_mac.hpp"

#include <algorithm>

namespace pncmac::mac {

using frames::FrameKind;
using queueing::AttemptOutcome;
using queueing::WaitEvent;

namespace {

std::size_t index_of(const frames::Frame& f, NodeId node) {
  return static_cast<std::size_t>(std::find(f.receivers.begin(), f.receivers.end(), node) -
                                  f.receivers.begin());
}

}  // namespace

PncMac::PncMac(NodeId id, SimContext& ctx, MacFeatures features)
    : Station(id, ctx), features_(features), vq_(ctx.queue_capacity) {}

SimTime PncMac::ack_time() const { return frames::control_airtime(FrameKind::kAck, t_); }

bool PncMac::wants_access() const {
  return queueing::select_action(queue_, vq_, now(), options()).kind !=
         queueing::TxAction::Kind::kNone;
}

bool PncMac::nav_exempt(const sim::Transmission& tx) const {
  const NodeId from = tx.transmitter;
  switch (phase_) {
    case Phase::kSourceWaitCoPnc:
    case Phase::kSourceSession:
      return from == src_.relay || from == src_.partner;
    case Phase::kRelayWaitCts:
    case Phase::kRelayWaitData:
    case Phase::kRelayWaitAcks:
      return from == relay_.a || from == relay_.b;
    case Phase::kCncWaitCts:
    case Phase::kCncWaitAck:
      return from == cnc_.x || from == cnc_.y;
    default:
      return false;
  }
}

void PncMac::access_granted() {
  const auto action = queueing::select_action(queue_, vq_, now(), options());
  switch (action.kind) {
    case queueing::TxAction::Kind::kNone:
      reevaluate();
      return;
    case queueing::TxAction::Kind::kPnc:
      start_pnc(action);
      return;
    case queueing::TxAction::Kind::kCnc:
      start_cnc(action);
      return;
    case queueing::TxAction::Kind::kUnicast:
      start_unicast(action.packet);
      return;
  }
}

// ---- wait-for-PNC flags ----

void PncMac::set_wait(HopKey key, WaitEvent event) {
  waits_.update(queue_, key, event, now(), t_.pnc_wait_timeout);
  if (event == WaitEvent::kPncNotifySet) arm_wait_check(key);
  reevaluate();
}

void PncMac::arm_wait_check(HopKey key) {
  const auto deadline = waits_.deadline(key);
  if (!deadline) return;
  at(*deadline, [this, key] {
    const auto d = waits_.deadline(key);
    if (d && *d <= now()) set_wait(key, WaitEvent::kTimeout);
  });
}

void PncMac::on_packet_removed(const queueing::ActualQueueEntry& e) {
  const HopKey key = e.key();
  if (waits_.deadline(key) && queue_.count_with_key(key) == 0) {
    waits_.update(queue_, key, WaitEvent::kNoMatchingPacket, now(), t_.pnc_wait_timeout);
  }
}

void PncMac::apply_wait_bit(HopKey key, bool bit) {
  if (!features_.pnc) return;
  if (bit) {
    set_wait(key, WaitEvent::kPncNotifySet);
  } else if (waits_.deadline(key)) {
    set_wait(key, WaitEvent::kRelayClear);
  }
}

bool PncMac::wait_bit_for(const queueing::ActualQueueEntry& e) const {
  return features_.pnc && e.prev_hop != kNoNode && vq_.has_pair(e.prev_hop, e.next_hop);
}

frames::QueueAdvert PncMac::onward_advert(const Packet& p) const {
  if (p.destination == id_) return {};
  const HopKey key{ctx_.routing.next_hop(id_, p.destination),
                   ctx_.routing.second_hop(id_, p.destination)};
  return frames::quantize(queueing::advert_for_key(queue_, key, now()));
}

// ---- unicast (RTS/CTS/DATA/ACK) ----

void PncMac::start_unicast(std::uint64_t id, bool) {
  const auto* head = queue_.find(id);
  packet_ = id;
  peer_ = head->next_hop;
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime data = frames::data_airtime(head->packet.length_bytes, t_);
  begin_exchange();
  const auto* rts = send(make_frame(FrameKind::kRts, 3 * t_.sifs + cts + data + ack_time(), {peer_}));
  phase_ = Phase::kUnicastWaitCts;
  timeout_ = at(rts->end + t_.sifs + cts + 1, [this] {
    timeout_ = sim::kNoEvent;
    unicast_fail();
  });
}

void PncMac::send_unicast_data() {
  const auto* entry = queue_.find(packet_);
  if (!entry) {
    unicast_fail();
    return;
  }
  auto data = make_frame(FrameKind::kData, t_.sifs + ack_time(), {peer_});
  data.source = entry->packet.source;
  data.seq = entry->packet.seq;
  data.payload_len = entry->packet.length_bytes;
  data.prev_hop = entry->prev_hop;
  data.second_hop = entry->second_hop;
  data.wait_for_pnc_set = wait_bit_for(*entry);
  data.advert = frames::quantize(queueing::advert_after(queue_, *entry, now()));
  const auto* sent = send(std::move(data), {entry->packet});
  if (!sent) {
    unicast_fail();
    return;
  }
  phase_ = Phase::kUnicastWaitAck;
  timeout_ = at(sent->end + t_.sifs + ack_time() + 1, [this] {
    timeout_ = sim::kNoEvent;
    unicast_fail();
  });
}

void PncMac::unicast_fail() {
  phase_ = Phase::kIdle;
  settle(packet_, AttemptOutcome::kFailed);
  end_exchange(false);
}

// ---- frame dispatch ----

void PncMac::handle_frame(const sim::Transmission& tx) {
  const auto& f = tx.frame;
  const SimTime cts_time = frames::control_airtime(FrameKind::kCts, t_);
  switch (f.kind) {
    case FrameKind::kRts:
      if (f.receiver() != id_ || phase_ != Phase::kIdle || now() < nav_until()) return;
      at(now() + t_.sifs, [this, to = tx.transmitter, dur = f.duration - t_.sifs - cts_time] {
        send(make_frame(FrameKind::kCts, dur, {to}));
      });
      return;
    case FrameKind::kCts:
      if (f.receiver() != id_) return;
      if (phase_ == Phase::kUnicastWaitCts && tx.transmitter == peer_) {
        cancel(timeout_);
        at(now() + t_.sifs, [this] { send_unicast_data(); });
      } else if (phase_ == Phase::kRelayWaitCts) {
        if (tx.transmitter == relay_.a) {
          relay_.cts_a = true;
          relay_.nav_a = f.duration;
        } else if (tx.transmitter == relay_.b) {
          relay_.cts_b = true;
          relay_.nav_b = f.duration;
        }
      } else if (phase_ == Phase::kCncWaitCts) {
        if (tx.transmitter == cnc_.y) cnc_.cts_y = true;
        if (tx.transmitter == cnc_.x) cnc_.cts_x = true;
      }
      return;
    case FrameKind::kRtsPnc:
      if (f.addressed_to(id_)) source_rts_pnc(tx);
      return;
    case FrameKind::kCoPnc:
      if (phase_ == Phase::kSourceWaitCoPnc && tx.transmitter == src_.relay) source_co_pnc(tx);
      return;
    case FrameKind::kData:
      if (f.coded) {
        if (f.addressed_to(id_) && phase_ == Phase::kSourceSession && tx.transmitter == src_.relay) {
          source_coded(tx);
        }
      } else if (f.receiver() == id_) {
        on_data(tx);
      }
      return;
    case FrameKind::kCncRts:
      if (f.addressed_to(id_)) respond_cnc_rts(tx);
      return;
    case FrameKind::kCncData:
      if (f.addressed_to(id_)) respond_cnc_data(tx);
      return;
    case FrameKind::kAck:
      on_ack(tx);
      return;
    case FrameKind::kAckPnc:
      if (phase_ == Phase::kSourceSession && tx.transmitter == src_.relay && src_.both) {
        source_finish(f.addressed_to(id_));
      }
      return;
  }
}

void PncMac::on_data(const sim::Transmission& tx) {
  const auto& f = tx.frame;
  const Packet p = tx.packets.empty() ? Packet{} : tx.packets.front();
  at(now() + t_.sifs, [this, p] {
    auto ack = make_frame(FrameKind::kAck, 0, {});
    ack.advert = onward_advert(p);
    send(std::move(ack));
  });
  if (f.advert.next_hop == id_) queueing::ingest_advert(vq_, id_, f.advert, tx.transmitter, now());
  if (f.prev_hop != kNoNode) apply_wait_bit({tx.transmitter, f.prev_hop}, f.wait_for_pnc_set);
  if (!tx.packets.empty()) accept_packet(p, tx.transmitter, f.advert.t_q_cur);
  if (phase_ == Phase::kRelayWaitData && tx.transmitter == relay_.single) relay_.single_got = true;
}

void PncMac::on_ack(const sim::Transmission& tx) {
  const auto& f = tx.frame;
  if (f.advert.next_hop == id_) queueing::ingest_advert(vq_, id_, f.advert, tx.transmitter, now());
  const NodeId from = tx.transmitter;
  switch (phase_) {
    case Phase::kUnicastWaitAck:
      if (from != peer_) return;
      cancel(timeout_);
      phase_ = Phase::kIdle;
      ++ctx_.metrics.unicast_exchanges;
      settle(packet_, AttemptOutcome::kAcked);
      end_exchange(true);
      return;
    case Phase::kCncWaitAck:
      if (from == cnc_.y) cnc_.ack_y = true;
      if (from == cnc_.x) cnc_.ack_x = true;
      return;
    case Phase::kRelayWaitAcks:
      if (from == relay_.a) relay_.ack_a = true;
      if (from == relay_.b) relay_.ack_b = true;
      return;
    case Phase::kSourceSession:
      if (!src_.both && from == src_.relay) source_finish(true);
      return;
    default:
      return;
  }
}

// ---- PNC relay ----

void PncMac::start_pnc(const queueing::TxAction& action) {
  const auto& fwd = action.forward;
  const auto& rev = action.reverse;
  relay_ = RelaySession{};
  if (fwd.length <= rev.length) {
    relay_.a = fwd.prev_hop;
    relay_.b = rev.prev_hop;
  } else {
    relay_.a = rev.prev_hop;
    relay_.b = fwd.prev_hop;
  }
  const std::pair pair{std::min(relay_.a, relay_.b), std::max(relay_.a, relay_.b)};
  if (pair != retry_pair_) {
    retry_pair_ = pair;
    pnc_retries_ = 0;
  }
  relay_.queue_len = queue_.size();
  begin_exchange();
  const auto* rts =
      send(make_frame(FrameKind::kRtsPnc, frames::nav_rts_pnc(t_), {relay_.a, relay_.b}));
  relay_.t0 = rts->end;
  phase_ = Phase::kRelayWaitCts;
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  timeout_ = at(relay_.t0 + 2 * t_.sifs + 2 * cts + 1, [this] {
    timeout_ = sim::kNoEvent;
    relay_decide();
  });
}

void PncMac::relay_decide() {
  auto& r = relay_;
  if (r.cts_a && r.nav_a == 0) vq_.remove(r.a, r.b);
  if (r.cts_b && r.nav_b == 0) vq_.remove(r.b, r.a);
  const bool has_a = r.cts_a && r.nav_a > 0;
  const bool has_b = r.cts_b && r.nav_b > 0;
  if (!has_a && !has_b) {
    if (r.cts_a && r.cts_b) {
      relay_close(std::nullopt);  // both sources had nothing: stale adverts, now removed
    } else {
      relay_fail();
    }
    return;
  }
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime co = frames::control_airtime(FrameKind::kCoPnc, t_);
  const SimTime k = ack_time();
  const SimTime hdr = t_.phy_hdr + t_.mac_hdr_time();
  const SimTime d_a = r.nav_a - (4 * t_.sifs + cts + co + k);
  const SimTime d_b = r.nav_b - (4 * t_.sifs + co + hdr + k);
  const SimTime co_at = r.t0 + 3 * t_.sifs + 2 * cts;

  frames::PncMode mode = frames::PncMode::kBoth;
  if (has_a && has_b) {
    if (d_a > d_b) {
      relay_fail();  // roles would break the stagger; retry with fresh adverts
      return;
    }
  } else {
    mode = has_a ? frames::PncMode::kAOnly : frames::PncMode::kBOnly;
    r.single = has_a ? r.a : r.b;
  }
  const SimTime dur = frames::nav_co_pnc(mode, has_a ? std::optional(r.nav_a) : std::nullopt,
                                         has_b ? std::optional(r.nav_b) : std::nullopt, t_);
  at(co_at, [this, has_a, has_b, dur, d_a, d_b, hdr] {
    auto f = make_frame(FrameKind::kCoPnc, dur, {});
    f.control.a_has_data = has_a;
    f.control.b_has_data = has_b;
    f.control.clear_wait_flags = !(has_a && has_b);
    const auto* sent = send(std::move(f));
    if (!sent) {
      relay_fail();
      return;
    }
    relay_.t1 = sent->end;
    phase_ = Phase::kRelayWaitData;
    if (has_a && has_b) {
      ctx_.medium.suppress_lock(id_, true);
      timeout_ = at(relay_.t1 + 2 * t_.sifs + hdr + d_b, [this] {
        timeout_ = sim::kNoEvent;
        relay_collect();
      });
      return;
    }
    const bool is_a = relay_.single == relay_.a;
    const SimTime start = is_a ? relay_.t1 + t_.sifs : relay_.t1 + 2 * t_.sifs + hdr;
    timeout_ = at(start + (is_a ? d_a : d_b) + 1, [this] {
      timeout_ = sim::kNoEvent;
      if (!relay_.single_got) {
        relay_fail();
        return;
      }
      ++ctx_.metrics.pnc_single;
      pnc_retries_ = 0;
      relay_close(true);
    });
  });
}

void PncMac::relay_collect() {
  auto& r = relay_;
  ctx_.medium.suppress_lock(id_, false);
  const SimTime hdr = t_.phy_hdr + t_.mac_hdr_time();
  const auto* ta = ctx_.medium.last_transmission(r.a);
  const auto* tb = ctx_.medium.last_transmission(r.b);
  const auto valid = [this](const sim::Transmission* tx, SimTime start) {
    return tx && tx->start == start && tx->frame.kind == FrameKind::kData &&
           tx->frame.receiver() == id_ && !tx->packets.empty();
  };
  if (!valid(ta, r.t1 + t_.sifs) || !valid(tb, r.t1 + 2 * t_.sifs + hdr)) {
    ctx_.trace.note(now(), id_, "pnc", "missing-data");
    relay_fail();
    return;
  }
  auto result = ctx_.medium.evaluate_superposed(id_, *ta, *tb, hdr);
  if (!result.header_a_ok || !result.header_b_ok) {
    ctx_.trace.note(now(), id_, "pnc", "header-fail");
    relay_fail();
    return;
  }
  queueing::ingest_advert(vq_, id_, ta->frame.advert, r.a, now());
  queueing::ingest_advert(vq_, id_, tb->frame.advert, r.b, now());
  std::vector<Packet> packets{ta->packets.front(), tb->packets.front()};
  r.packet_a = packets[0].id;
  r.packet_b = packets[1].id;
  const int len = std::max(ta->frame.payload_len, tb->frame.payload_len);
  at(now() + t_.sifs, [this, packets = std::move(packets), len, chips = std::move(result.coded_chips)] {
    auto f = make_frame(FrameKind::kData,
                        3 * t_.sifs + 2 * ack_time() + frames::control_airtime(FrameKind::kAckPnc, t_),
                        {relay_.a, relay_.b});
    f.coded = true;
    f.wait_for_pnc_set = features_.pnc && vq_.has_pair(relay_.a, relay_.b);
    f.payload_len = len;
    f.source = packets.front().source;
    f.seq = packets.front().seq;
    const auto* sent = send(std::move(f), packets, chips);
    if (!sent) {
      relay_fail();
      return;
    }
    const SimTime t3 = sent->end;
    phase_ = Phase::kRelayWaitAcks;
    timeout_ = at(t3 + 2 * t_.sifs + 2 * ack_time() + 1, [this, t3] {
      timeout_ = sim::kNoEvent;
      (void)t3;
      relay_finish();
    });
  });
}

void PncMac::relay_finish() {
  std::vector<NodeId> named;
  if (relay_.ack_b) named.push_back(relay_.a);  // B decoded A's packet
  if (relay_.ack_a) named.push_back(relay_.b);
  if (named.empty()) {
    relay_fail();
    return;
  }
  // A source that misses the ACK-PNC resends; the copy must not enter the queue.
  if (relay_.ack_b) mark_seen(relay_.packet_a);
  if (relay_.ack_a) mark_seen(relay_.packet_b);
  at(now() + t_.sifs - 1, [this, named = std::move(named)] {
    send(make_frame(FrameKind::kAckPnc, 0, named));
    ++ctx_.metrics.pnc_exchanges;
    pnc_retries_ = 0;
    ctx_.trace.note(now(), id_, "pnc",
                    "ok queue=" + std::to_string(relay_.queue_len) + "/" + std::to_string(queue_.size()));
    relay_close(true);
  });
}

void PncMac::relay_fail() {
  if (++pnc_retries_ > t_.retry_limit) {
    queueing::VirtualPacket ab{relay_.a, relay_.b};
    queueing::VirtualPacket ba{relay_.b, relay_.a};
    queueing::flush_pnc_pair(vq_, ab, ba);
    pnc_retries_ = 0;
  }
  relay_close(false);
}

void PncMac::relay_close(std::optional<bool> success) {
  ctx_.medium.suppress_lock(id_, false);
  phase_ = Phase::kIdle;
  end_exchange(success);
}

// ---- PNC source ----

void PncMac::source_rts_pnc(const sim::Transmission& tx) {
  const auto& f = tx.frame;
  if (phase_ != Phase::kIdle || now() < nav_until() || f.receivers.size() != 2) return;
  const std::size_t idx = index_of(f, id_);
  const NodeId relay = tx.transmitter;
  const NodeId partner = f.receivers[1 - idx];
  const HopKey key{relay, partner};
  waits_.rearm(key, now(), t_.pnc_wait_timeout);
  arm_wait_check(key);

  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime co = frames::control_airtime(FrameKind::kCoPnc, t_);
  const SimTime send_at = idx == 0 ? tx.end + t_.sifs : tx.end + 2 * t_.sifs + cts;
  const auto* entry = queue_.first_with_key(key);
  if (!entry) {
    at(send_at, [this, relay] { send(make_frame(FrameKind::kCts, 0, {relay})); });
    return;
  }
  const auto role = idx == 0 ? frames::CtsRole::kA : frames::CtsRole::kB;
  const SimTime dur =
      frames::nav_cts(role, frames::data_airtime(entry->packet.length_bytes, t_), t_);
  src_ = SourceSession{relay, partner, role, entry->packet.id, false};
  phase_ = Phase::kSourceWaitCoPnc;
  begin_exchange();
  at(send_at, [this, relay, dur] { send(make_frame(FrameKind::kCts, dur, {relay})); });
  timeout_ = at(tx.end + 3 * t_.sifs + 2 * cts + co + 1, [this] {
    timeout_ = sim::kNoEvent;
    source_abandon();
  });
}

void PncMac::source_abandon() {
  phase_ = Phase::kIdle;
  end_exchange(std::nullopt);
}

void PncMac::source_co_pnc(const sim::Transmission& tx) {
  cancel(timeout_);
  const auto& c = tx.frame.control;
  const HopKey key{src_.relay, src_.partner};
  if (c.clear_wait_flags && waits_.deadline(key)) set_wait(key, WaitEvent::kRelayClear);
  const bool is_a = src_.role == frames::CtsRole::kA;
  const bool mine = is_a ? c.a_has_data : c.b_has_data;
  const auto* entry = queue_.find(src_.packet);
  if (!mine || !entry) {
    phase_ = Phase::kIdle;
    extend_nav(tx.end + tx.frame.duration);
    end_exchange(std::nullopt);
    return;
  }
  src_.both = c.a_has_data && c.b_has_data;
  const SimTime t1 = tx.end;
  const SimTime hdr = t_.phy_hdr + t_.mac_hdr_time();
  const SimTime d = frames::data_airtime(entry->packet.length_bytes, t_);
  const SimTime start = is_a ? t1 + t_.sifs : t1 + 2 * t_.sifs + hdr;
  const SimTime dur = src_.both ? frames::nav_data(is_a ? frames::DataRole::kA : frames::DataRole::kB,
                                                   tx.frame.duration, d, t_)
                                : 0;
  phase_ = Phase::kSourceSession;
  at(start, [this, dur] {
    const auto* e = queue_.find(src_.packet);
    if (!e) return;
    auto f = make_frame(FrameKind::kData, dur, {src_.relay});
    f.source = e->packet.source;
    f.seq = e->packet.seq;
    f.payload_len = e->packet.length_bytes;
    f.prev_hop = e->prev_hop;
    f.second_hop = e->second_hop;
    f.superposed = src_.both;
    f.bit_reversed = src_.both && src_.role == frames::CtsRole::kB;
    f.advert = frames::quantize(queueing::advert_after(queue_, *e, now()));
    send(std::move(f), {e->packet});
  });
  const SimTime end = src_.both ? t1 + tx.frame.duration : start + d + t_.sifs + ack_time() + 1;
  timeout_ = at(end, [this] {
    timeout_ = sim::kNoEvent;
    source_finish(false);
  });
}

void PncMac::source_coded(const sim::Transmission& tx) {
  if (!src_.both) return;
  const auto it = std::find_if(tx.packets.begin(), tx.packets.end(),
                               [this](const Packet& p) { return p.id != src_.packet; });
  if (it == tx.packets.end()) return;
  const Packet q = *it;
  apply_wait_bit({src_.relay, src_.partner}, tx.frame.wait_for_pnc_set);
  accept_packet(q, tx.transmitter, 0);
  const SimTime k = ack_time();
  const SimTime p = frames::control_airtime(FrameKind::kAckPnc, t_);
  const bool is_a = src_.role == frames::CtsRole::kA;
  const SimTime send_at = is_a ? tx.end + t_.sifs : tx.end + 2 * t_.sifs + k;
  const SimTime dur = is_a ? 2 * t_.sifs + k + p : t_.sifs + p;
  at(send_at, [this, q, dur] {
    auto ack = make_frame(FrameKind::kAck, dur, {});
    ack.advert = onward_advert(q);
    send(std::move(ack));
  });
}

void PncMac::source_finish(bool acked) {
  cancel(timeout_);
  phase_ = Phase::kIdle;
  settle(src_.packet, acked ? AttemptOutcome::kAcked : AttemptOutcome::kFailed);
  end_exchange(acked);
}

// ---- CNC ----

void PncMac::start_cnc(const queueing::TxAction& action) {
  const auto* p = queue_.find(action.packet);
  const auto* q = queue_.find(action.partners.front());
  cnc_ = CncSession{};
  cnc_.p = p->packet.id;
  cnc_.q = q->packet.id;
  cnc_.y = p->next_hop;
  cnc_.x = q->next_hop;
  auto probe = make_frame(FrameKind::kCncData, 0, {cnc_.y, cnc_.x});
  probe.payload_len = std::max(p->packet.length_bytes, q->packet.length_bytes);
  const SimTime d = frames::frame_airtime(probe, t_);
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime dur = 5 * t_.sifs + 2 * cts + d + 2 * ack_time();
  begin_exchange();
  const auto* rts = send(make_frame(FrameKind::kCncRts, dur, {cnc_.y, cnc_.x}));
  cnc_.rts_end = rts->end;
  phase_ = Phase::kCncWaitCts;
  timeout_ = at(cnc_.rts_end + 2 * t_.sifs + 2 * cts + 1, [this] {
    timeout_ = sim::kNoEvent;
    cnc_decide();
  });
}

void PncMac::cnc_decide() {
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime send_at = cnc_.rts_end + 3 * t_.sifs + 2 * cts;
  if (!cnc_.cts_y) {
    packet_ = cnc_.p;
    unicast_fail();
    return;
  }
  if (!cnc_.cts_x) {
    // Partner missing: the exchange degrades to a unicast of p.
    packet_ = cnc_.p;
    peer_ = cnc_.y;
    phase_ = Phase::kUnicastWaitCts;
    at(send_at, [this] { send_unicast_data(); });
    return;
  }
  at(send_at, [this] {
    const auto* p = queue_.find(cnc_.p);
    const auto* q = queue_.find(cnc_.q);
    if (!p || !q) {
      phase_ = Phase::kIdle;
      end_exchange(std::nullopt);
      return;
    }
    auto f = make_frame(FrameKind::kCncData, 2 * t_.sifs + 2 * ack_time(), {cnc_.y, cnc_.x});
    f.payload_len = std::max(p->packet.length_bytes, q->packet.length_bytes);
    f.source = p->packet.source;
    f.seq = p->packet.seq;
    f.seq2 = q->packet.seq;
    f.prev_hop = p->prev_hop;
    f.wait_for_pnc_set = wait_bit_for(*p);
    const auto* sent = send(std::move(f), {p->packet, q->packet});
    phase_ = Phase::kCncWaitAck;
    timeout_ = at(sent->end + 2 * t_.sifs + 2 * ack_time() + 1, [this] {
      timeout_ = sim::kNoEvent;
      cnc_finish();
    });
  });
}

void PncMac::cnc_finish() {
  phase_ = Phase::kIdle;
  if (cnc_.ack_y && cnc_.ack_x) {
    ++ctx_.metrics.cnc_exchanges;
    settle(cnc_.p, AttemptOutcome::kAcked);
    settle(cnc_.q, AttemptOutcome::kAcked);
    end_exchange(true);
    return;
  }
  if (cnc_.ack_y || cnc_.ack_x) {
    const auto acked = cnc_.ack_y ? cnc_.p : cnc_.q;
    const auto missed = cnc_.ack_y ? cnc_.q : cnc_.p;
    if (auto* e = queue_.find(missed)) e->no_recode = true;
    settle(acked, AttemptOutcome::kAcked);
    end_exchange(true);
    return;
  }
  settle(cnc_.p, AttemptOutcome::kFailed);
  end_exchange(false);
}

void PncMac::respond_cnc_rts(const sim::Transmission& tx) {
  if (phase_ != Phase::kIdle || now() < nav_until()) return;
  const auto i = static_cast<SimTime>(index_of(tx.frame, id_));
  const SimTime cts = frames::control_airtime(FrameKind::kCts, t_);
  const SimTime dur = tx.frame.duration - (i + 1) * (t_.sifs + cts);
  at(tx.end + t_.sifs + i * (t_.sifs + cts),
     [this, to = tx.transmitter, dur] { send(make_frame(FrameKind::kCts, dur, {to})); });
}

void PncMac::respond_cnc_data(const sim::Transmission& tx) {
  const auto idx = index_of(tx.frame, id_);
  if (idx >= tx.packets.size()) return;
  const auto i = static_cast<SimTime>(idx);
  const Packet p = tx.packets[idx];
  const SimTime k = ack_time();
  if (tx.frame.receivers.size() == 2) {
    apply_wait_bit({tx.transmitter, tx.frame.receivers[1 - idx]}, tx.frame.wait_for_pnc_set);
  }
  at(tx.end + t_.sifs + i * (t_.sifs + k), [this, p, dur = (1 - i) * (t_.sifs + k)] {
    auto ack = make_frame(FrameKind::kAck, dur, {});
    ack.advert = onward_advert(p);
    send(std::move(ack));
  });
  accept_packet(p, tx.transmitter, 0);
}

}  // namespace pncmac::mac
