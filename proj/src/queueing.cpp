#include "pncmac/queueing.hpp"

#include <algorithm>

namespace pncmac::queueing {

bool ActualQueue::enqueue(ActualQueueEntry entry) {
  if (entries_.size() >= capacity_) {
    ++overflow_drops_;
    return false;
  }
  entry.wait_for_pnc = waiting_keys_.contains(entry.key());
  entries_.push_back(std::move(entry));
  return true;
}

const ActualQueueEntry* ActualQueue::find(std::uint64_t id) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(),
                               [id](const auto& e) { return e.packet.id == id; });
  return it == entries_.end() ? nullptr : &*it;
}

ActualQueueEntry* ActualQueue::find(std::uint64_t id) {
  return const_cast<ActualQueueEntry*>(std::as_const(*this).find(id));
}

std::optional<ActualQueueEntry> ActualQueue::remove(std::uint64_t id) {
  const auto it = std::find_if(entries_.begin(), entries_.end(),
                               [id](const auto& e) { return e.packet.id == id; });
  if (it == entries_.end()) return std::nullopt;
  ActualQueueEntry out = std::move(*it);
  entries_.erase(it);
  return out;
}

const ActualQueueEntry* ActualQueue::first_with_key(HopKey key, std::uint64_t excluding) const {
  for (const auto& e : entries_) {
    if (e.key() == key && e.packet.id != excluding) return &e;
  }
  return nullptr;
}

std::size_t ActualQueue::count_with_key(HopKey key) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [key](const auto& e) { return e.key() == key; }));
}

void ActualQueue::set_wait(HopKey key, bool on) {
  if (on) {
    waiting_keys_.insert(key);
  } else {
    waiting_keys_.erase(key);
  }
  for (auto& e : entries_) {
    if (e.key() == key) e.wait_for_pnc = on;
  }
}

frames::QueueAdvert advert_after(const ActualQueue& queue, const ActualQueueEntry& sent,
                                 SimTime now) {
  frames::QueueAdvert a;
  a.next_hop = sent.next_hop;
  a.second_hop = sent.second_hop;
  a.t_q_cur = sent.t_q(now);
  if (sent.second_hop == kNoNode) return a;
  if (const auto* next = queue.first_with_key(sent.key(), sent.packet.id)) {
    a.len_next = next->packet.length_bytes;
    a.t_q_next_offset = std::max<SimTime>(0, a.t_q_cur - next->t_q(now));
  }
  return a;
}

frames::QueueAdvert advert_for_key(const ActualQueue& queue, HopKey key, SimTime now) {
  frames::QueueAdvert a;
  a.next_hop = key.next_hop;
  a.second_hop = key.second_hop;
  if (key.second_hop == kNoNode) return a;
  if (const auto* first = queue.first_with_key(key)) {
    a.t_q_cur = first->t_q(now);
    a.len_next = first->packet.length_bytes;
  }
  return a;
}

void VirtualQueue::upsert(const VirtualPacket& vp) {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) {
    return e.prev_hop == vp.prev_hop && e.next_hop == vp.next_hop;
  });
  if (it != entries_.end()) {
    *it = vp;
  } else {
    entries_.push_back(vp);
  }
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    if (a.prev_enqueued_at != b.prev_enqueued_at) return a.prev_enqueued_at < b.prev_enqueued_at;
    if (a.prev_hop != b.prev_hop) return a.prev_hop < b.prev_hop;
    return a.next_hop < b.next_hop;
  });
  if (entries_.size() > capacity_) entries_.resize(capacity_);
}

bool VirtualQueue::remove(NodeId prev_hop, NodeId next_hop) {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) {
    return e.prev_hop == prev_hop && e.next_hop == next_hop;
  });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

const VirtualPacket* VirtualQueue::find(NodeId prev_hop, NodeId next_hop) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) {
    return e.prev_hop == prev_hop && e.next_hop == next_hop;
  });
  return it == entries_.end() ? nullptr : &*it;
}

bool ingest_advert(VirtualQueue& vq, NodeId me, const frames::QueueAdvert& advert, NodeId sender,
                   SimTime now) {
  if (advert.next_hop != me || advert.second_hop == kNoNode || sender == kNoNode) return false;
  if (advert.len_next == 0) return vq.remove(sender, advert.second_hop);
  VirtualPacket vp{sender, advert.second_hop, advert.len_next, now - advert.t_q_next()};
  if (const auto* existing = vq.find(sender, advert.second_hop); existing && *existing == vp) {
    return false;
  }
  vq.upsert(vp);
  return true;
}

std::optional<std::pair<std::size_t, std::size_t>> find_reverse_pair(const VirtualQueue& vq) {
  const auto& e = vq.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (j != i && e[j].prev_hop == e[i].next_hop && e[j].next_hop == e[i].prev_hop) {
        return std::pair{i, j};
      }
    }
  }
  return std::nullopt;
}

std::optional<std::uint64_t> cnc_partner(const ActualQueue& queue, const ActualQueueEntry& p) {
  if (p.prev_hop == kNoNode || p.no_recode) return std::nullopt;
  for (const auto& q : queue.entries()) {
    if (q.packet.id == p.packet.id || q.wait_for_pnc || q.no_recode) continue;
    if (q.prev_hop == p.next_hop && q.next_hop == p.prev_hop) return q.packet.id;
  }
  return std::nullopt;
}

TxAction select_action(const ActualQueue& actual, const VirtualQueue& virt, SimTime now,
                       SelectOptions options) {
  const ActualQueueEntry* p = nullptr;
  for (const auto& e : actual.entries()) {
    if (!e.wait_for_pnc) {
      p = &e;
      break;
    }
  }

  TxAction action;
  if (options.pnc) {
    const auto& v = virt.entries();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (p && v[i].t_vq_prev(now) < p->t_q(now) + p->t_q_prev) break;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (j != i && v[j].prev_hop == v[i].next_hop && v[j].next_hop == v[i].prev_hop) {
          action.kind = TxAction::Kind::kPnc;
          action.forward = v[i];
          action.reverse = v[j];
          return action;
        }
      }
    }
  }
  if (!p) return action;
  action.packet = p->packet.id;
  if (options.cnc) {
    if (auto q = cnc_partner(actual, *p)) {
      action.kind = TxAction::Kind::kCnc;
      action.partners.push_back(*q);
      return action;
    }
  }
  action.kind = TxAction::Kind::kUnicast;
  return action;
}

void WaitFlagTable::update(ActualQueue& queue, HopKey key, WaitEvent event, SimTime now,
                           SimTime timeout) {
  if (event == WaitEvent::kPncNotifySet && queue.count_with_key(key) > 0) {
    queue.set_wait(key, true);
    deadlines_[key] = now + timeout;
    return;
  }
  queue.set_wait(key, false);
  deadlines_.erase(key);
}

void WaitFlagTable::rearm(HopKey key, SimTime now, SimTime timeout) {
  if (auto it = deadlines_.find(key); it != deadlines_.end()) it->second = now + timeout;
}

std::optional<SimTime> WaitFlagTable::deadline(HopKey key) const {
  if (auto it = deadlines_.find(key); it != deadlines_.end()) return it->second;
  return std::nullopt;
}

CommitResult commit_or_release(ActualQueue& queue, std::uint64_t id, AttemptOutcome outcome,
                               int retry_limit) {
  auto* entry = queue.find(id);
  if (!entry) return CommitResult::kMissing;
  if (outcome == AttemptOutcome::kAcked) {
    queue.remove(id);
    return CommitResult::kRemoved;
  }
  if (entry->retry_count >= retry_limit) {
    queue.remove(id);
    return CommitResult::kDropped;
  }
  ++entry->retry_count;
  return CommitResult::kRetained;
}

void flush_pnc_pair(VirtualQueue& vq, const VirtualPacket& forward, const VirtualPacket& reverse) {
  vq.remove(forward.prev_hop, forward.next_hop);
  vq.remove(reverse.prev_hop, reverse.next_hop);
}

}  // namespace pncmac::queueing
