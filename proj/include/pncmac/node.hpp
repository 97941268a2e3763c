#pragma once

#include <functional>
#include <memory>
#include <unordered_set>

#include "pncmac/contention.hpp"
#include "pncmac/medium.hpp"
#include "pncmac/metrics.hpp"
#include "pncmac/queueing.hpp"
#include "pncmac/topology.hpp"
#include "pncmac/trace.hpp"

namespace pncmac::mac {

/// Shared services of one run, owned by the simulator.
struct SimContext {
  sim::EventQueue& events;
  sim::Medium& medium;
  const frames::TimingParams& timing;
  const sim::Routing& routing;
  sim::Metrics& metrics;
  sim::Trace& trace;
  Rng& backoff_rng;
  std::size_t queue_capacity = queueing::kDefaultCapacity;
  /// A locally generated packet left its source queue (delivered onward or dropped).
  std::function<void(NodeId, const Packet&)> on_local_packet_left;
};

/// Common node plumbing: queue, NAV, carrier sense and channel access.
class Station : public sim::MediumListener {
 public:
  Station(NodeId id, SimContext& ctx);
  ~Station() override = default;

  NodeId id() const { return id_; }
  const queueing::ActualQueue& queue() const { return queue_; }
  SimTime nav_until() const { return nav_until_; }
  bool in_exchange() const { return exchange_; }
  const Contention& contention() const { return contention_; }

  /// Adds a locally generated packet.
  void inject(const Packet& p);

  void on_receive(const sim::Transmission& tx, bool ok) final;
  void on_medium_change() final { contention_.update(); }

 protected:
  virtual void handle_frame(const sim::Transmission& tx) = 0;
  virtual void access_granted() = 0;
  virtual bool wants_access() const = 0;
  /// Frames of an exchange this node takes part in never set its NAV.
  virtual bool nav_exempt(const sim::Transmission&) const { return false; }

  SimTime now() const { return ctx_.events.now(); }
  sim::EventId at(SimTime t, std::function<void()> fn) { return ctx_.events.schedule(t, std::move(fn)); }
  void cancel(sim::EventId& ev);
  /// Starts a frame unless the radio is already busy sending; returns the record.
  const sim::Transmission* send(frames::Frame f, std::vector<Packet> packets = {},
                                std::vector<sim::ChipRun> upstream = {});
  void extend_nav(SimTime until);
  void begin_exchange() { exchange_ = true; }
  /// Closes an exchange; `success` resets or doubles the contention window.
  void end_exchange(std::optional<bool> success);
  void reevaluate() { contention_.update(); }

  /// Handles a packet decoded from `from`: delivered here or queued onward.
  void accept_packet(const Packet& p, NodeId from, SimTime t_q_prev);
  /// Removes or retries packet `id` after an attempt.
  queueing::CommitResult settle(std::uint64_t id, queueing::AttemptOutcome outcome);
  virtual void on_packet_removed(const queueing::ActualQueueEntry&) {}
  /// Later copies of `id` are acknowledged but treated as duplicates.
  void mark_seen(std::uint64_t id) { seen_.insert(id); }

  frames::Frame make_frame(frames::FrameKind kind, SimTime duration, std::vector<NodeId> receivers) const;

  NodeId id_;
  SimContext& ctx_;
  const frames::TimingParams& t_;
  queueing::ActualQueue queue_;
  Contention contention_;

 private:
  bool channel_idle() const;

  SimTime nav_until_ = 0;
  sim::EventId nav_ev_ = sim::kNoEvent;
  bool exchange_ = false;
  std::unordered_set<std::uint64_t> seen_;
};

}  // namespace pncmac::mac
