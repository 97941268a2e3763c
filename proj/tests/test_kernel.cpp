#include <cmath>
#include <set>

#include "doctest.h"
#include "pncmac/contention.hpp"
#include "pncmac/event_queue.hpp"
#include "pncmac/medium.hpp"
#include "pncmac/metrics.hpp"
#include "pncmac/topology.hpp"

using namespace pncmac;
using namespace pncmac::sim;

namespace {

const phy::PhyParams kPhy;
const frames::TimingParams kT;

double range_m() { return link_range_m(kPhy, link_threshold_dbm(kPhy, kT, 1000)); }

frames::Frame data_frame(NodeId to) {
  frames::Frame f;
  f.kind = frames::FrameKind::kData;
  f.receivers = {to};
  f.payload_len = 1000;
  return f;
}

}  // namespace

TEST_CASE("events dispatch in time order, ties in scheduling order") {
  EventQueue q;
  std::vector<int> seen;
  q.schedule(30, [&] { seen.push_back(3); });
  q.schedule(10, [&] { seen.push_back(1); });
  q.schedule(10, [&] { seen.push_back(2); });
  const auto dead = q.schedule(20, [&] { seen.push_back(99); });
  q.cancel(dead);
  q.cancel(dead);
  q.run_until(100);
  CHECK(seen == std::vector<int>{1, 2, 3});
  CHECK(q.now() == 100);
  CHECK(q.dispatched() == 3);
  CHECK_THROWS_AS(q.schedule(50, [] {}), std::logic_error);
}

TEST_CASE("events scheduled at the horizon wait") {
  EventQueue q;
  int fired = 0;
  q.schedule(100, [&] { ++fired; });
  q.run_until(100);
  CHECK(fired == 0);
  q.run_until(101);
  CHECK(fired == 1);
}

TEST_CASE("interference segments") {
  EventQueue ev;
  // 0 receives from 1; 2 and 3 interfere from 150 m on the far side.
  Medium m(ev, {{0, 0}, {150, 0}, {-150, 0}, {0, 150}}, kPhy, kT, -100.0, Rng(1), Rng(2));
  const auto& tx = m.transmit(1, data_frame(0));
  const SimTime s = tx.start, e = tx.end;
  const std::vector<NodeId> intended{1};

  auto segs = m.interference_segments(0, s, e, intended);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].interference_power_w == 0.0);
  CHECK(segs[0].bit_count == e - s);

  const SimTime third = (e - s) / 3;
  ev.schedule(s + third, [&] {
    frames::Frame f;
    f.kind = frames::FrameKind::kAck;
    m.transmit(2, f);
  });
  ev.run_until(s + third + 1);
  const SimTime ack_end = s + third + frames::control_airtime(frames::FrameKind::kAck, kT);
  segs = m.interference_segments(0, s, e, intended);
  REQUIRE(segs.size() == 3);
  CHECK(segs[1].start == s + third);
  CHECK(segs[1].end == ack_end);
  const double single = segs[1].interference_power_w;
  CHECK(single == doctest::Approx(phy::dbm_to_w(-84.0)).epsilon(0.01));

  frames::Frame f;
  f.kind = frames::FrameKind::kAck;
  ev.schedule(s + third + 10, [&] { m.transmit(3, f); });
  ev.run_until(s + third + 11);
  segs = m.interference_segments(0, s, e, intended);
  bool doubled = false;
  for (const auto& seg : segs) {
    doubled |= std::abs(seg.interference_power_w - 2.0 * single) < 1e-6 * single;
  }
  CHECK(doubled);
}

TEST_CASE("carrier sense follows the sensitivity") {
  EventQueue ev;
  Medium m(ev, {{0, 0}, {150, 0}, {450, 0}}, kPhy, kT, -100.0, Rng(1), Rng(2));
  CHECK_FALSE(m.busy(0));
  frames::Frame f;
  f.kind = frames::FrameKind::kCts;
  m.transmit(2, f);
  CHECK_FALSE(m.busy(0));  // -103.1 dBm
  m.transmit(1, f);
  CHECK(m.busy(0));
  CHECK(m.rss_dbm(1, 0) == doctest::Approx(-84.0).epsilon(1e-3));
}

TEST_CASE("wheel geometry") {
  const double range = range_m();
  const auto one = build_wheel(1, 150.0, range);
  CHECK(one.radius == 150.0);
  CHECK(distance(one.positions[1], one.positions[2]) == doctest::Approx(300.0));
  CHECK(distance(one.positions[1], one.positions[2]) > range);

  const auto five = build_wheel(5, 150.0, range);
  CHECK(five.positions.size() == 11);
  for (std::size_t i = 1; i < five.positions.size(); ++i) {
    CHECK(distance(five.positions[0], five.positions[i]) == doctest::Approx(five.radius));
    for (std::size_t j = i + 1; j < five.positions.size(); ++j) {
      const bool opposite = j - i == 5;
      CHECK((distance(five.positions[i], five.positions[j]) <= range) == !opposite);
    }
  }
  Routing routes(five.positions, range);
  for (const auto& fl : five.flows) {
    CHECK(routes.path(fl.a, fl.b) == std::vector<NodeId>{fl.a, 0, fl.b});
  }
  CHECK_THROWS_AS(build_wheel(6, 150.0, range), ConfigError);
  try {
    build_wheel(8, 150.0, range);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("neighbour") != std::string::npos);
    CHECK(msg.find("opposite") != std::string::npos);
  }
}

TEST_CASE("line geometry and routes") {
  const auto three = build_line(3, 150.0);
  CHECK(three.positions.size() == 3);
  const auto ten = build_line(10, 150.0);
  Routing r(ten.positions, range_m());
  CHECK(r.hops(0, 9) == 9);
  CHECK(r.path(0, 9) == std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(r.next_hop(4, 0) == 3);
  CHECK(r.second_hop(4, 0) == 2);
  CHECK(r.second_hop(1, 0) == kNoNode);
  CHECK(phy::rss_dbm(3.0, phy::pathloss_gain(distance(ten.positions[0], ten.positions[1]), 4.0)) ==
        doctest::Approx(-84.0).epsilon(1e-3));
}

TEST_CASE("equal-length paths pick the lowest next hop") {
  // Square: 0 reaches 3 through 1 or 2.
  Routing r({{0, 0}, {100, 0}, {0, 100}, {100, 100}}, 120.0);
  CHECK(r.next_hop(0, 3) == 1);
  CHECK(r.next_hop(3, 0) == 1);
  CHECK(r.hops(0, 3) == 2);
}

TEST_CASE("random placement") {
  const double range = range_m();
  Rng a(5), b(5);
  const auto t1 = build_random(40, 1000.0, 10, range, a);
  const auto t2 = build_random(40, 1000.0, 10, range, b);
  CHECK(t1.positions.size() == 40);
  REQUIRE(t1.flows.size() == 10);
  std::set<NodeId> ends;
  Routing r(t1.positions, range);
  for (std::size_t i = 0; i < t1.flows.size(); ++i) {
    ends.insert(t1.flows[i].a);
    ends.insert(t1.flows[i].b);
    CHECK(r.hops(t1.flows[i].a, t1.flows[i].b) > 0);
    CHECK(t1.flows[i].a == t2.flows[i].a);
    CHECK(t1.flows[i].b == t2.flows[i].b);
  }
  CHECK(ends.size() == 20);
  for (std::size_t i = 0; i < t1.positions.size(); ++i) CHECK(t1.positions[i].x == t2.positions[i].x);
  Rng c(1);
  CHECK_THROWS_AS(build_random(40, 100000.0, 10, range, c, 3), ConfigError);
}

TEST_CASE("metrics") {
  Metrics m(2);
  CHECK(metrics_report(m, 10 * kSecond).throughput_bps == 0.0);
  CHECK_FALSE(metrics_report(m, 10 * kSecond).mean_delay_s);

  Packet p{1, 0, 2, 0, 1000, 0, 0};
  m.on_generated(p);
  CHECK(m.on_delivered(p, kSecond / 2));
  CHECK_FALSE(m.on_delivered(p, kSecond));
  auto s = metrics_report(m, 10 * kSecond);
  CHECK(s.throughput_bps == doctest::Approx(800.0));
  CHECK(*s.mean_delay_s == doctest::Approx(0.5));

  Packet q{2, 2, 0, 0, 1000, 0, 1};
  m.on_generated(q);
  m.on_delivered(q, kSecond);
  m.on_drop(Packet{3, 0, 2, 0, 1000, 0, 0}, DropCause::kRetry);
  s = metrics_report(m, 10 * kSecond);
  CHECK(s.throughput_bps == doctest::Approx(s.flows[0].throughput_bps + s.flows[1].throughput_bps));
  CHECK(s.drops == 1);
  CHECK(m.drops(DropCause::kRetry) == 1);
}

TEST_CASE("contention timing") {
  EventQueue ev;
  Rng rng(3);
  bool idle = true;
  bool want = true;
  SimTime granted_at = -1;
  mac::Contention c(ev, kT, rng,
                    {[&] { return idle; }, [&] { return want; }, [&] { granted_at = ev.now(); want = false; }});
  c.update();
  const int slots = c.backoff_slots();
  CHECK(slots >= 0);
  CHECK(slots <= kT.cw_min);
  ev.run_until(kSecond);
  CHECK(granted_at == kT.difs + slots * kT.slot);

  for (int i = 0; i < 10; ++i) c.on_failure();
  CHECK(c.cw() == kT.cw_max);
  c.on_success();
  CHECK(c.cw() == kT.cw_min);
}

TEST_CASE("backoff freezes while the channel is busy") {
  for (std::uint64_t seed = 1; seed < 50; ++seed) {
    EventQueue ev;
    Rng rng(seed);
    bool idle = true;
    bool want = true;
    SimTime granted_at = -1;
    mac::Contention c(ev, kT, rng,
                      {[&] { return idle; }, [&] { return want; }, [&] { granted_at = ev.now(); want = false; }});
    c.update();
    const int slots = c.backoff_slots();
    if (slots < 4) continue;
    // Busy for 1 ms after two whole slots of countdown.
    const SimTime busy_at = kT.difs + 2 * kT.slot + 5;
    ev.schedule(busy_at, [&] { idle = false; c.update(); });
    ev.schedule(busy_at + 1000, [&] { idle = true; c.update(); });
    ev.run_until(kSecond);
    CAPTURE(seed);
    CHECK(granted_at == busy_at + 1000 + kT.difs + (slots - 2) * kT.slot);
  }
}
