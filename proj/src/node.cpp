#include "pncmac/node.hpp"

namespace pncmac::mac {

Station::Station(NodeId id, SimContext& ctx)
    : id_(id),
      ctx_(ctx),
      t_(ctx.timing),
      queue_(ctx.queue_capacity),
      contention_(ctx.events, ctx.timing, ctx.backoff_rng,
                  Contention::Hooks{[this] { return channel_idle(); },
                                    [this] { return wants_access(); },
                                    [this] {
                                      if (ctx_.medium.transmitting(id_)) {
                                        reevaluate();
                                        return;
                                      }
                                      access_granted();
                                    }}) {}

bool Station::channel_idle() const {
  return !exchange_ && now() >= nav_until_ && !ctx_.medium.transmitting(id_) &&
         !ctx_.medium.busy(id_);
}

void Station::cancel(sim::EventId& ev) {
  if (ev != sim::kNoEvent) ctx_.events.cancel(ev);
  ev = sim::kNoEvent;
}

const sim::Transmission* Station::send(frames::Frame f, std::vector<Packet> packets,
                                       std::vector<sim::ChipRun> upstream) {
  if (ctx_.medium.transmitting(id_)) return nullptr;
  f.transmitter = id_;
  const auto& tx = ctx_.medium.transmit(id_, std::move(f), std::move(packets), std::move(upstream));
  ctx_.trace.frame_tx(now(), tx);
  return &tx;
}

frames::Frame Station::make_frame(frames::FrameKind kind, SimTime duration,
                                  std::vector<NodeId> receivers) const {
  frames::Frame f;
  f.kind = kind;
  f.duration = duration;
  f.transmitter = id_;
  f.receivers = std::move(receivers);
  return f;
}

void Station::extend_nav(SimTime until) {
  if (until <= nav_until_) return;
  nav_until_ = until;
  cancel(nav_ev_);
  nav_ev_ = at(until, [this] {
    nav_ev_ = sim::kNoEvent;
    reevaluate();
  });
}

void Station::end_exchange(std::optional<bool> success) {
  exchange_ = false;
  if (success.has_value()) {
    if (*success) {
      contention_.on_success();
    } else {
      contention_.on_failure();
    }
  }
  reevaluate();
}

void Station::on_receive(const sim::Transmission& tx, bool ok) {
  const bool addressed = tx.frame.addressed_to(id_);
  if (addressed) ctx_.trace.frame_rx(now(), id_, tx, ok);
  if (!ok) return;
  if (!addressed && !nav_exempt(tx) && tx.frame.duration > 0) {
    extend_nav(frames::nav_anchor(tx.frame, tx.start, tx.end, t_) + tx.frame.duration);
  }
  handle_frame(tx);
}

void Station::inject(const Packet& p) {
  ctx_.metrics.on_generated(p);
  seen_.insert(p.id);
  queueing::ActualQueueEntry e;
  e.packet = p;
  e.next_hop = ctx_.routing.next_hop(id_, p.destination);
  e.second_hop = ctx_.routing.second_hop(id_, p.destination);
  e.enqueued_at = now();
  if (!queue_.enqueue(e)) {
    ctx_.metrics.on_drop(p, sim::DropCause::kOverflow);
    ctx_.trace.note(now(), id_, "drop", "overflow id=" + std::to_string(p.id));
    return;
  }
  reevaluate();
}

void Station::accept_packet(const Packet& p, NodeId from, SimTime t_q_prev) {
  if (!seen_.insert(p.id).second) {
    ++ctx_.metrics.duplicates;
    return;
  }
  if (p.destination == id_) {
    ctx_.metrics.on_delivered(p, now());
    return;
  }
  queueing::ActualQueueEntry e;
  e.packet = p;
  e.prev_hop = from;
  e.next_hop = ctx_.routing.next_hop(id_, p.destination);
  e.second_hop = ctx_.routing.second_hop(id_, p.destination);
  e.enqueued_at = now();
  e.t_q_prev = t_q_prev;
  if (!queue_.enqueue(e)) {
    ctx_.metrics.on_drop(p, sim::DropCause::kOverflow);
    ctx_.trace.note(now(), id_, "drop", "overflow id=" + std::to_string(p.id));
    return;
  }
  ctx_.trace.note(now(), id_, "enq", "id=" + std::to_string(p.id) + " from=" + std::to_string(from));
  reevaluate();
}

queueing::CommitResult Station::settle(std::uint64_t id, queueing::AttemptOutcome outcome) {
  const auto* entry = queue_.find(id);
  if (!entry) return queueing::CommitResult::kMissing;
  const queueing::ActualQueueEntry copy = *entry;
  const auto result = queueing::commit_or_release(queue_, id, outcome, t_.retry_limit);
  if (result == queueing::CommitResult::kDropped) {
    ctx_.metrics.on_drop(copy.packet, sim::DropCause::kRetry);
    ctx_.trace.note(now(), id_, "drop", "retry id=" + std::to_string(copy.packet.id));
  }
  if (result == queueing::CommitResult::kRemoved || result == queueing::CommitResult::kDropped) {
    on_packet_removed(copy);
    if (copy.prev_hop == kNoNode && ctx_.on_local_packet_left) ctx_.on_local_packet_left(id_, copy.packet);
  }
  return result;
}

}  // namespace pncmac::mac
