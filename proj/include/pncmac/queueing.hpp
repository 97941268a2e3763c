#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "pncmac/frames.hpp"
#include "pncmac/types.hpp"

namespace pncmac::queueing {

inline constexpr std::size_t kDefaultCapacity = 50;

struct ActualQueueEntry {
  Packet packet;
  NodeId prev_hop = kNoNode;  // kNoNode for locally generated packets
  NodeId next_hop = kNoNode;
  NodeId second_hop = kNoNode;  // kNoNode on the last hop
  SimTime enqueued_at = 0;
  SimTime t_q_prev = 0;  // frozen residence at the previous hop
  bool wait_for_pnc = false;
  int retry_count = 0;
  bool no_recode = false;  // partially acknowledged CNC packet, resend natively

  HopKey key() const { return {next_hop, second_hop}; }
  SimTime t_q(SimTime now) const { return now - enqueued_at; }
};

/// FIFO of packets this node still has to send.
class ActualQueue {
 public:
  explicit ActualQueue(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  /// Appends at the tail; a full queue rejects and counts the drop.
  bool enqueue(ActualQueueEntry entry);

  const std::deque<ActualQueueEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t overflow_drops() const { return overflow_drops_; }

  const ActualQueueEntry* find(std::uint64_t id) const;
  ActualQueueEntry* find(std::uint64_t id);
  std::optional<ActualQueueEntry> remove(std::uint64_t id);

  /// First entry with `key`, skipping packet `excluding`.
  const ActualQueueEntry* first_with_key(HopKey key, std::uint64_t excluding = 0) const;
  std::size_t count_with_key(HopKey key) const;

  /// Sets or clears wait_for_pnc on every entry with `key`; later arrivals inherit it.
  void set_wait(HopKey key, bool on);
  bool waiting(HopKey key) const { return waiting_keys_.contains(key); }

 private:
  std::size_t capacity_;
  std::deque<ActualQueueEntry> entries_;
  std::set<HopKey> waiting_keys_;
  std::uint64_t overflow_drops_ = 0;
};

/// Advert describing the packet queued after `sent` with the same hop key.
frames::QueueAdvert advert_after(const ActualQueue& queue, const ActualQueueEntry& sent,
                                 SimTime now);
/// Advert describing the first queued packet with `key` (ACK piggyback).
frames::QueueAdvert advert_for_key(const ActualQueue& queue, HopKey key, SimTime now);

struct VirtualPacket {
  NodeId prev_hop = kNoNode;
  NodeId next_hop = kNoNode;
  int length = 0;
  SimTime prev_enqueued_at = 0;

  SimTime t_vq_prev(SimTime now) const { return now - prev_enqueued_at; }
  bool operator==(const VirtualPacket&) const = default;
};

/// Neighbor-queue summaries, oldest (largest T_vq-prev) first, one per
/// (prev hop, next hop).
class VirtualQueue {
 public:
  explicit VirtualQueue(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  /// Inserts or replaces the (prev_hop, next_hop) entry. When full, the youngest
  /// entry is evicted.
  void upsert(const VirtualPacket& vp);
  bool remove(NodeId prev_hop, NodeId next_hop);
  const VirtualPacket* find(NodeId prev_hop, NodeId next_hop) const;
  bool has_pair(NodeId a, NodeId b) const { return find(a, b) && find(b, a); }

  const std::vector<VirtualPacket>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::size_t capacity_;
  std::vector<VirtualPacket> entries_;
};

/// Applies a piggybacked advert from `sender`. Adverts for another next hop or
/// without a second hop are ignored. Returns true if the queue changed.
bool ingest_advert(VirtualQueue& vq, NodeId me, const frames::QueueAdvert& advert, NodeId sender,
                   SimTime now);

/// Indices of the first entry (in queue order) that has a reverse entry, and
/// the front-most such reverse.
std::optional<std::pair<std::size_t, std::size_t>> find_reverse_pair(const VirtualQueue& vq);

struct TxAction {
  enum class Kind { kNone, kPnc, kCnc, kUnicast };
  Kind kind = Kind::kNone;
  VirtualPacket forward;  // PNC
  VirtualPacket reverse;  // PNC
  std::uint64_t packet = 0;             // CNC / unicast head packet
  std::vector<std::uint64_t> partners;  // CNC
};

struct SelectOptions {
  bool pnc = true;
  bool cnc = true;
};

/// First packet that can be XOR-coded with `p`: it came from p's next hop and
/// goes back to p's previous hop.
std::optional<std::uint64_t> cnc_partner(const ActualQueue& queue, const ActualQueueEntry& p);

/// Picks the packet to send and its relaying method (PNC > CNC > unicast),
/// keeping first-come first-served order across actual and virtual queues.
TxAction select_action(const ActualQueue& actual, const VirtualQueue& virt, SimTime now,
                       SelectOptions options = {});

enum class WaitEvent { kPncNotifySet, kTimeout, kPartnerExhausted, kRelayClear, kNoMatchingPacket };

/// Deadlines of armed wait-for-PNC flags.
class WaitFlagTable {
 public:
  /// Applies `event` to the flag of `key` and the matching queue entries.
  void update(ActualQueue& queue, HopKey key, WaitEvent event, SimTime now, SimTime timeout);
  /// A PNC request for `key` restarts its timeout.
  void rearm(HopKey key, SimTime now, SimTime timeout);
  std::optional<SimTime> deadline(HopKey key) const;
  const std::map<HopKey, SimTime>& armed() const { return deadlines_; }

 private:
  std::map<HopKey, SimTime> deadlines_;
};

enum class AttemptOutcome { kAcked, kFailed };
enum class CommitResult { kRemoved, kRetained, kDropped, kMissing };

/// Settles a transmission attempt of packet `id`. A failure with the retry
/// counter already at `retry_limit` drops the packet.
CommitResult commit_or_release(ActualQueue& queue, std::uint64_t id, AttemptOutcome outcome,
                               int retry_limit);

/// Flushes both pending virtual entries after a PNC request exhausted its retries.
void flush_pnc_pair(VirtualQueue& vq, const VirtualPacket& forward, const VirtualPacket& reverse);

}  // namespace pncmac::queueing
