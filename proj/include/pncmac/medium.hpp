#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "pncmac/event_queue.hpp"
#include "pncmac/frames.hpp"
#include "pncmac/phy.hpp"
#include "pncmac/random.hpp"
#include "pncmac/types.hpp"

namespace pncmac::sim {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Position& a, const Position& b);

/// Chip error probability over a run of consecutive microseconds.
struct ChipRun {
  SimTime duration = 0;
  double p_chip = 0.0;
};

/// An on-air signal interval.
struct Transmission {
  std::uint64_t id = 0;
  NodeId transmitter = kNoNode;
  frames::Frame frame;
  SimTime start = 0;
  SimTime end = 0;
  std::vector<Packet> packets;  // payloads carried (DATA kinds)
  // Relay-side chip errors of a coded forward, frame-relative from start.
  std::vector<ChipRun> upstream_chips;

  bool active_at(SimTime t) const { return start <= t && t < end; }
  bool overlaps(SimTime s, SimTime e) const { return start < e && s < end; }
};

class MediumListener {
 public:
  virtual ~MediumListener() = default;
  /// A frame this node was locked onto finished; `ok` is the sampled outcome.
  virtual void on_receive(const Transmission& tx, bool ok) = 0;
  /// Some transmission started or ended.
  virtual void on_medium_change() = 0;
};

struct SuperposedResult {
  bool header_a_ok = false;
  bool header_b_ok = false;
  /// Chip errors of the coded frame, frame-relative, covering B's airtime.
  std::vector<ChipRun> coded_chips;
};

/// Shared channel: who is on air, what each node senses, and reception outcomes.
class Medium {
 public:
  Medium(EventQueue& events, std::vector<Position> positions, const phy::PhyParams& phy,
         const frames::TimingParams& timing, double lock_threshold_dbm, Rng reception, Rng phase);

  void attach(NodeId node, MediumListener* listener);
  std::size_t node_count() const { return positions_.size(); }

  /// Starts `frame` now. A node that transmits drops any reception in progress.
  const Transmission& transmit(NodeId node, frames::Frame frame, std::vector<Packet> packets = {},
                               std::vector<ChipRun> upstream_chips = {});

  bool transmitting(NodeId node) const;
  bool receiving(NodeId node) const { return locked_[static_cast<std::size_t>(node)] != 0; }
  /// Physical carrier sense at `node` (own signal excluded).
  bool busy(NodeId node) const;
  double sensed_power_w(NodeId node) const;
  double rx_power_w(NodeId from, NodeId to) const;
  double rss_dbm(NodeId from, NodeId to) const;
  const phy::ChannelGain& gain(NodeId from, NodeId to) const;
  const phy::PhyParams& phy() const { return phy_; }

  /// While set, the node locks onto nothing (relay collecting a superposed signal).
  void suppress_lock(NodeId node, bool on) { suppressed_[static_cast<std::size_t>(node)] = on; }

  /// Most recent transmission started by `node`, or nullptr.
  const Transmission* last_transmission(NodeId node) const;

  /// Partition of [start, end) at `rx` into constant-interference slices; signal
  /// energy from `intended[0]`, interference from everyone outside `intended`.
  std::vector<phy::SignalSegment> interference_segments(NodeId rx, SimTime start, SimTime end,
                                                        std::span<const NodeId> intended) const;

  /// Relay view of staggered DATA frames a (header first) and b (header last).
  SuperposedResult evaluate_superposed(NodeId relay, const Transmission& a,
                                       const Transmission& b, SimTime header_time);

  /// Bernoulli draw from the reception stream.
  bool draw_ok(double per) { return phy::sample_reception(per, reception_rng_) == phy::Reception::kOk; }
  /// Packet error of a normal reception of `tx` at `rx`.
  double reception_per(NodeId rx, const Transmission& tx) const;

 private:
  std::vector<ChipRun> link_chips(NodeId rx, const Transmission& tx) const;
  double per_of(std::span<const ChipRun> chips) const;
  void finish(std::uint64_t id);
  void notify_all();
  const Transmission* find(std::uint64_t id) const;
  void purge();

  EventQueue& events_;
  std::vector<Position> positions_;
  phy::PhyParams phy_;
  frames::TimingParams timing_;
  double lock_threshold_dbm_;
  double n0_;
  double chip_s_;
  Rng reception_rng_;

  std::vector<phy::ChannelGain> gains_;
  std::vector<double> rx_w_;
  std::vector<MediumListener*> listeners_;
  std::vector<std::uint64_t> locked_;
  std::vector<std::uint64_t> last_tx_;
  std::vector<bool> suppressed_;
  std::deque<Transmission> log_;  // ordered by start
  std::vector<std::uint64_t> active_;
  std::uint64_t next_id_ = 1;
};

/// Composes two independent chip error profiles position by position.
std::vector<ChipRun> compose_chips(std::span<const ChipRun> a, std::span<const ChipRun> b);

}  // namespace pncmac::sim
