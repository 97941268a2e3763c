#include <random>

#include "doctest.h"
#include "pncmac/queueing.hpp"

using namespace pncmac;
using namespace pncmac::queueing;

namespace {

constexpr NodeId A = 1, R = 0, B = 2, C = 3;

ActualQueueEntry entry(std::uint64_t id, NodeId prev, NodeId next, NodeId second, SimTime at,
                       SimTime t_q_prev = 0) {
  ActualQueueEntry e;
  e.packet.id = id;
  e.packet.length_bytes = 1000;
  e.prev_hop = prev;
  e.next_hop = next;
  e.second_hop = second;
  e.enqueued_at = at;
  e.t_q_prev = t_q_prev;
  return e;
}

// Rules 4 and 5 restated over sets: the oldest virtual packet that has a
// reverse and is at least as old as the first eligible actual packet.
TxAction rule_oracle(const ActualQueue& aq, const VirtualQueue& vq, SimTime now) {
  const auto& a = aq.entries();
  const auto& v = vq.entries();
  std::optional<std::size_t> p;
  for (std::size_t i = 0; i < a.size() && !p; ++i) {
    if (!a[i].wait_for_pnc) p = i;
  }
  const auto has_reverse = [&](std::size_t i) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j].prev_hop == v[i].next_hop && v[j].next_hop == v[i].prev_hop) return j;
    }
    return std::nullopt;
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (p && v[i].t_vq_prev(now) < a[*p].t_q(now) + a[*p].t_q_prev) continue;
    if (!has_reverse(i)) continue;
    if (!best || v[i].t_vq_prev(now) > v[*best].t_vq_prev(now)) best = i;
  }
  TxAction out;
  if (best) {
    out.kind = TxAction::Kind::kPnc;
    out.forward = v[*best];
    out.reverse = v[*has_reverse(*best)];
    return out;
  }
  if (!p) return out;
  const auto& head = a[*p];
  out.packet = head.packet.id;
  out.kind = TxAction::Kind::kUnicast;
  if (head.prev_hop == kNoNode || head.no_recode) return out;
  for (const auto& q : a) {
    if (&q == &head || q.wait_for_pnc || q.no_recode) continue;
    if (q.prev_hop == head.next_hop && q.next_hop == head.prev_hop) {
      out.kind = TxAction::Kind::kCnc;
      out.partners = {q.packet.id};
      return out;
    }
  }
  return out;
}

bool same(const TxAction& x, const TxAction& y) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case TxAction::Kind::kNone: return true;
    case TxAction::Kind::kPnc: return x.forward == y.forward && x.reverse == y.reverse;
    case TxAction::Kind::kUnicast: return x.packet == y.packet;
    case TxAction::Kind::kCnc: return x.packet == y.packet && x.partners == y.partners;
  }
  return false;
}

}  // namespace

TEST_CASE("actual queue admission") {
  ActualQueue q;
  CHECK(q.enqueue(entry(1, kNoNode, R, B, 0)));
  CHECK(q.size() == 1);
  CHECK(q.entries().front().t_q_prev == 0);
  for (std::uint64_t i = 2; i <= 50; ++i) CHECK(q.enqueue(entry(i, kNoNode, R, B, 0)));
  CHECK(q.size() == 50);
  CHECK_FALSE(q.enqueue(entry(51, kNoNode, R, B, 0)));
  CHECK(q.overflow_drops() == 1);
  CHECK(q.size() == 50);
}

TEST_CASE("adverts build the virtual queue") {
  VirtualQueue vq;
  // A advertises a packet for R with second hop B.
  CHECK(ingest_advert(vq, R, {R, B, 4000, 1000, 1}, A, 10000));
  REQUIRE(vq.size() == 1);
  CHECK(vq.entries()[0].prev_hop == A);
  CHECK(vq.entries()[0].next_hop == B);
  CHECK(vq.entries()[0].t_vq_prev(10000) == 3000);

  ingest_advert(vq, R, {R, B, 6000, 500, 2}, A, 20000);
  CHECK(vq.size() == 1);
  CHECK(vq.entries()[0].length == 2);

  CHECK_FALSE(ingest_advert(vq, R, {C, B, 1, 0, 1}, A, 20000));  // not for me
  CHECK(vq.size() == 1);

  CHECK(ingest_advert(vq, R, {R, B, 0, 0, 0}, A, 30000));
  CHECK(vq.empty());
}

TEST_CASE("virtual queue keeps oldest first") {
  VirtualQueue vq;
  vq.upsert({A, B, 1, 500});
  vq.upsert({B, A, 1, 100});
  vq.upsert({C, A, 1, 300});
  CHECK(vq.entries()[0].prev_enqueued_at == 100);
  CHECK(vq.entries()[1].prev_enqueued_at == 300);
  CHECK(vq.entries()[2].prev_enqueued_at == 500);
}

TEST_CASE("reverse pairs") {
  VirtualQueue vq;
  CHECK_FALSE(find_reverse_pair(vq));
  vq.upsert({A, B, 1, 0});
  vq.upsert({A, C, 1, 5});
  CHECK_FALSE(find_reverse_pair(vq));
  vq.upsert({B, A, 1, 10});
  auto pair = find_reverse_pair(vq);
  REQUIRE(pair);
  CHECK(vq.entries()[pair->first].prev_hop == A);
  CHECK(vq.entries()[pair->second].prev_hop == B);
}

TEST_CASE("selector examples") {
  ActualQueue aq;
  VirtualQueue vq;
  CHECK(select_action(aq, vq, 0).kind == TxAction::Kind::kNone);

  const SimTime now = 10 * kSecond;
  vq.upsert({A, B, 1, now - 5 * kSecond});
  vq.upsert({B, A, 1, now - 1 * kSecond});
  aq.enqueue(entry(7, C, A, kNoNode, now - 2 * kSecond, 1 * kSecond));
  auto act = select_action(aq, vq, now);
  CHECK(act.kind == TxAction::Kind::kPnc);
  CHECK(act.forward.prev_hop == A);
  CHECK(act.reverse.prev_hop == B);

  VirtualQueue young;
  young.upsert({A, B, 1, now - 2 * kSecond});
  young.upsert({B, A, 1, now - 1 * kSecond});
  act = select_action(aq, young, now);
  CHECK(act.kind == TxAction::Kind::kUnicast);
  CHECK(act.packet == 7);

  CHECK(select_action(aq, vq, now, {false, true}).kind == TxAction::Kind::kUnicast);
}

TEST_CASE("coding partner") {
  ActualQueue aq;
  aq.enqueue(entry(1, A, B, kNoNode, 0));
  aq.enqueue(entry(2, B, A, kNoNode, 5));
  auto act = select_action(aq, VirtualQueue{}, 10);
  CHECK(act.kind == TxAction::Kind::kCnc);
  CHECK(act.packet == 1);
  CHECK(act.partners == std::vector<std::uint64_t>{2});
  CHECK(select_action(aq, VirtualQueue{}, 10, {true, false}).kind == TxAction::Kind::kUnicast);
}

TEST_CASE("selector agrees with the rule oracle") {
  std::mt19937_64 rng(99);
  const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const SimTime now = 1000;
  int mismatches = 0, pnc = 0, cnc = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    ActualQueue aq;
    VirtualQueue vq;
    const int na = pick(0, 5), nv = pick(0, 6);
    for (int i = 0; i < na; ++i) {
      const NodeId prev = pick(0, 4) == 0 ? kNoNode : pick(1, 4);
      NodeId next = pick(1, 4);
      if (next == prev) next = next % 4 + 1;
      auto e = entry(static_cast<std::uint64_t>(i + 1), prev, next, kNoNode, pick(0, 20) * 50, pick(0, 10) * 50);
      e.no_recode = pick(0, 9) == 0;
      aq.enqueue(e);
    }
    if (na > 0 && pick(0, 2) == 0) aq.set_wait({aq.entries()[0].next_hop, kNoNode}, true);
    for (int i = 0; i < nv; ++i) {
      const NodeId prev = pick(1, 4);
      NodeId next = pick(1, 4);
      if (next == prev) next = next % 4 + 1;
      vq.upsert({prev, next, 1, pick(0, 20) * 50});
    }
    const auto got = select_action(aq, vq, now);
    const auto want = rule_oracle(aq, vq, now);
    pnc += got.kind == TxAction::Kind::kPnc;
    cnc += got.kind == TxAction::Kind::kCnc;
    if (!same(got, want)) ++mismatches;
  }
  CHECK(mismatches == 0);
  // The draws exercise every branch.
  CHECK(pnc > 500);
  CHECK(cnc > 200);
}

TEST_CASE("wait flags") {
  ActualQueue aq;
  WaitFlagTable wt;
  const HopKey key{R, B};
  aq.enqueue(entry(1, kNoNode, R, B, 0));
  aq.enqueue(entry(2, kNoNode, R, C, 0));

  wt.update(aq, key, WaitEvent::kPncNotifySet, 0, kSecond);
  CHECK(aq.entries()[0].wait_for_pnc);
  CHECK_FALSE(aq.entries()[1].wait_for_pnc);
  CHECK(wt.deadline(key) == kSecond);
  aq.enqueue(entry(3, kNoNode, R, B, 10));
  CHECK(aq.entries()[2].wait_for_pnc);
  CHECK(select_action(aq, VirtualQueue{}, 10).packet == 2);

  wt.update(aq, key, WaitEvent::kTimeout, kSecond, kSecond);
  CHECK_FALSE(aq.entries()[0].wait_for_pnc);
  CHECK_FALSE(wt.deadline(key));

  wt.update(aq, key, WaitEvent::kPncNotifySet, 0, kSecond);
  wt.update(aq, key, WaitEvent::kRelayClear, 5, kSecond);
  CHECK_FALSE(aq.entries()[0].wait_for_pnc);

  wt.update(aq, key, WaitEvent::kPncNotifySet, 0, kSecond);
  aq.remove(1);
  aq.remove(3);
  wt.update(aq, key, WaitEvent::kNoMatchingPacket, 5, kSecond);
  CHECK_FALSE(aq.waiting(key));

  // Nothing to wait with: the flag is not armed.
  wt.update(aq, {R, A}, WaitEvent::kPncNotifySet, 0, kSecond);
  CHECK_FALSE(wt.deadline({R, A}));
}

TEST_CASE("commit and release") {
  ActualQueue aq;
  aq.enqueue(entry(1, kNoNode, R, B, 0));
  aq.enqueue(entry(2, kNoNode, R, B, 0));
  CHECK(commit_or_release(aq, 1, AttemptOutcome::kAcked, 7) == CommitResult::kRemoved);
  CHECK(aq.size() == 1);
  aq.find(2)->retry_count = 6;
  CHECK(commit_or_release(aq, 2, AttemptOutcome::kFailed, 7) == CommitResult::kRetained);
  CHECK(aq.find(2)->retry_count == 7);
  CHECK(commit_or_release(aq, 2, AttemptOutcome::kFailed, 7) == CommitResult::kDropped);
  CHECK(aq.empty());
  CHECK(commit_or_release(aq, 2, AttemptOutcome::kAcked, 7) == CommitResult::kMissing);

  VirtualQueue vq;
  vq.upsert({A, B, 1, 0});
  vq.upsert({B, A, 1, 0});
  vq.upsert({C, A, 1, 0});
  flush_pnc_pair(vq, {A, B, 1, 0}, {B, A, 1, 0});
  CHECK(vq.size() == 1);
}

TEST_CASE("adverts describe the next packet of the same key") {
  ActualQueue aq;
  aq.enqueue(entry(1, kNoNode, R, B, 0));
  aq.enqueue(entry(2, kNoNode, R, C, 100));
  aq.enqueue(entry(3, kNoNode, R, B, 300));
  const auto ad = advert_after(aq, aq.entries()[0], 1000);
  CHECK(ad.next_hop == R);
  CHECK(ad.second_hop == B);
  CHECK(ad.len_next == 1000);  // bytes of the packet queued behind
  CHECK(ad.t_q_next() == 700);
  aq.remove(1);
  const auto last = advert_after(aq, aq.entries()[1], 1000);
  CHECK(last.len_next == 0);
}
