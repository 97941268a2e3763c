#include "pncmac/medium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pncmac::sim {

namespace {

// Finished frames are kept this long for overlap queries; frames last < 20 ms.
constexpr SimTime kHistory = 200'000;
constexpr SimTime kMaxFrame = 50'000;

}  // namespace

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Medium::Medium(EventQueue& events, std::vector<Position> positions, const phy::PhyParams& phy,
               const frames::TimingParams& timing, double lock_threshold_dbm, Rng reception,
               Rng phase)
    : events_(events),
      positions_(std::move(positions)),
      phy_(phy),
      timing_(timing),
      lock_threshold_dbm_(lock_threshold_dbm),
      n0_(phy.effective_noise_density_w_hz()),
      chip_s_(phy.chip_duration_s()),
      reception_rng_(std::move(reception)) {
  const std::size_t n = positions_.size();
  gains_.resize(n * n);
  rx_w_.assign(n * n, 0.0);
  const double p_tx = phy_.tx_power_w();
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      gains_[i * n + j] =
          phy::pathloss_gain(distance(positions_[i], positions_[j]), phy_.path_loss_exp, angle(phase));
      rx_w_[i * n + j] = p_tx * gains_[i * n + j].magnitude_sq;
    }
  }
  listeners_.assign(n, nullptr);
  locked_.assign(n, 0);
  last_tx_.assign(n, 0);
  suppressed_.assign(n, false);
}

void Medium::attach(NodeId node, MediumListener* listener) {
  listeners_.at(static_cast<std::size_t>(node)) = listener;
}

double Medium::rx_power_w(NodeId from, NodeId to) const {
  return rx_w_[static_cast<std::size_t>(from) * positions_.size() + static_cast<std::size_t>(to)];
}

double Medium::rss_dbm(NodeId from, NodeId to) const { return phy::w_to_dbm(rx_power_w(from, to)); }

const phy::ChannelGain& Medium::gain(NodeId from, NodeId to) const {
  return gains_[static_cast<std::size_t>(from) * positions_.size() + static_cast<std::size_t>(to)];
}

const Transmission* Medium::find(std::uint64_t id) const {
  if (id == 0 || log_.empty() || id < log_.front().id || id > log_.back().id) return nullptr;
  return &log_[static_cast<std::size_t>(id - log_.front().id)];
}

const Transmission* Medium::last_transmission(NodeId node) const {
  return find(last_tx_[static_cast<std::size_t>(node)]);
}

bool Medium::transmitting(NodeId node) const {
  const auto* tx = last_transmission(node);
  return tx && tx->active_at(events_.now());
}

double Medium::sensed_power_w(NodeId node) const {
  double total = 0.0;
  for (const auto id : active_) {
    const auto* tx = find(id);
    if (tx->transmitter != node) total += rx_power_w(tx->transmitter, node);
  }
  return total;
}

bool Medium::busy(NodeId node) const {
  return phy::cca_busy(sensed_power_w(node), phy_.cca_sensitivity_dbm);
}

const Transmission& Medium::transmit(NodeId node, frames::Frame frame, std::vector<Packet> packets,
                                     std::vector<ChipRun> upstream_chips) {
  const auto idx = static_cast<std::size_t>(node);
  if (transmitting(node)) throw std::logic_error("node is already transmitting");
  purge();
  const SimTime now = events_.now();
  Transmission tx;
  tx.id = next_id_++;
  tx.transmitter = node;
  tx.start = now;
  tx.end = now + frames::frame_airtime(frame, timing_);
  tx.frame = std::move(frame);
  tx.packets = std::move(packets);
  tx.upstream_chips = std::move(upstream_chips);
  log_.push_back(std::move(tx));
  const Transmission& ref = log_.back();
  active_.push_back(ref.id);
  last_tx_[idx] = ref.id;
  locked_[idx] = 0;  // half duplex

  const double lock_dbm = std::max(lock_threshold_dbm_, phy_.cca_sensitivity_dbm);
  for (std::size_t n = 0; n < positions_.size(); ++n) {
    if (n == idx || !listeners_[n] || locked_[n] != 0 || suppressed_[n]) continue;
    const auto rx = static_cast<NodeId>(n);
    if (transmitting(rx)) continue;
    if (rss_dbm(node, rx) >= lock_dbm) locked_[n] = ref.id;
  }
  const auto id = ref.id;
  events_.schedule(ref.end, [this, id] { finish(id); });
  notify_all();
  return ref;
}

void Medium::finish(std::uint64_t id) {
  active_.erase(std::find(active_.begin(), active_.end(), id));
  const Transmission& tx = *find(id);
  for (std::size_t n = 0; n < positions_.size(); ++n) {
    if (locked_[n] != id) continue;
    locked_[n] = 0;
    const auto rx = static_cast<NodeId>(n);
    const bool ok = draw_ok(reception_per(rx, tx));
    listeners_[n]->on_receive(tx, ok);
  }
  notify_all();
}

void Medium::notify_all() {
  for (auto* l : listeners_) {
    if (l) l->on_medium_change();
  }
}

void Medium::purge() {
  const SimTime horizon = events_.now() - kHistory;
  while (!log_.empty() && log_.front().end < horizon) log_.pop_front();
}

std::vector<phy::SignalSegment> Medium::interference_segments(
    NodeId rx, SimTime start, SimTime end, std::span<const NodeId> intended) const {
  if (end <= start) throw std::invalid_argument("empty reception interval");
  std::vector<const Transmission*> others;
  std::vector<SimTime> cuts{start, end};
  for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
    if (it->start + kMaxFrame < start) break;
    if (!it->overlaps(start, end)) continue;
    if (it->start > start) cuts.push_back(it->start);
    if (it->end < end) cuts.push_back(it->end);
    const bool wanted =
        std::find(intended.begin(), intended.end(), it->transmitter) != intended.end();
    if (!wanted && it->transmitter != rx) others.push_back(&*it);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double es = intended.empty() ? 0.0 : rx_power_w(intended.front(), rx) * chip_s_;
  std::vector<phy::SignalSegment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    phy::SignalSegment seg;
    seg.start = cuts[i];
    seg.end = cuts[i + 1];
    seg.useful_energy_per_chip = es;
    for (const auto* o : others) {
      if (o->active_at(seg.start)) seg.interference_power_w += rx_power_w(o->transmitter, rx);
    }
    seg.bit_count = std::llround(static_cast<double>(seg.end - seg.start) * timing_.bits_per_us);
    out.push_back(seg);
  }
  return out;
}

std::vector<ChipRun> Medium::link_chips(NodeId rx, const Transmission& tx) const {
  const NodeId intended[] = {tx.transmitter};
  std::vector<ChipRun> chips;
  for (const auto& seg : interference_segments(rx, tx.start, tx.end, intended)) {
    chips.push_back({seg.end - seg.start,
                     phy::ber_dbpsk_chip(seg.useful_energy_per_chip, n0_,
                                         seg.interference_power_w * chip_s_)});
  }
  return chips;
}

double Medium::per_of(std::span<const ChipRun> chips) const {
  std::vector<phy::ErrorRun> runs;
  runs.reserve(chips.size());
  for (const auto& c : chips) {
    runs.push_back({std::llround(static_cast<double>(c.duration) * timing_.bits_per_us),
                    phy::ber_despread(c.p_chip)});
  }
  return phy::packet_error_prob(runs);
}

double Medium::reception_per(NodeId rx, const Transmission& tx) const {
  auto chips = link_chips(rx, tx);
  if (!tx.upstream_chips.empty()) chips = compose_chips(chips, tx.upstream_chips);
  return per_of(chips);
}

SuperposedResult Medium::evaluate_superposed(NodeId relay, const Transmission& a,
                                             const Transmission& b, SimTime header_time) {
  SuperposedResult r;
  const auto header_chips = [&](const Transmission& tx, SimTime s) {
    const NodeId intended[] = {tx.transmitter};
    std::vector<ChipRun> chips;
    for (const auto& seg : interference_segments(relay, s, s + header_time, intended)) {
      chips.push_back({seg.end - seg.start,
                       phy::ber_dbpsk_chip(seg.useful_energy_per_chip, n0_,
                                           seg.interference_power_w * chip_s_)});
    }
    return chips;
  };
  const auto ha = header_chips(a, a.start);
  const auto hb = header_chips(b, b.end - header_time);
  r.header_a_ok = draw_ok(per_of(ha));
  r.header_b_ok = draw_ok(per_of(hb));

  const double es_a = rx_power_w(a.transmitter, relay) * chip_s_;
  const double es_b = rx_power_w(b.transmitter, relay) * chip_s_;
  r.coded_chips.push_back({header_time, 0.0});
  const NodeId both[] = {b.transmitter, a.transmitter};
  for (const auto& seg : interference_segments(relay, b.start, b.end - header_time, both)) {
    const double ie = seg.interference_power_w * chip_s_;
    const double p = a.active_at(seg.start) ? phy::ber_dnf_chip(std::min(es_a, es_b), n0_, ie)
                                            : phy::ber_dbpsk_chip(es_b, n0_, ie);
    r.coded_chips.push_back({seg.end - seg.start, p});
  }
  return r;
}

std::vector<ChipRun> compose_chips(std::span<const ChipRun> a, std::span<const ChipRun> b) {
  std::vector<ChipRun> out;
  std::size_t i = 0;
  std::size_t j = 0;
  SimTime left_a = a.empty() ? 0 : a[0].duration;
  SimTime left_b = b.empty() ? 0 : b[0].duration;
  while (i < a.size() && j < b.size()) {
    const SimTime step = std::min(left_a, left_b);
    if (step > 0) {
      const double p = 1.0 - (1.0 - a[i].p_chip) * (1.0 - b[j].p_chip);
      out.push_back({step, p});
    }
    left_a -= step;
    left_b -= step;
    if (left_a == 0 && ++i < a.size()) left_a = a[i].duration;
    if (left_b == 0 && ++j < b.size()) left_b = b[j].duration;
  }
  // Whatever one profile covers beyond the other keeps its own error rate.
  const auto tail = [&out](std::span<const ChipRun> rest, std::size_t k, SimTime left) {
    if (k >= rest.size()) return;
    if (left > 0) out.push_back({left, rest[k].p_chip});
    for (++k; k < rest.size(); ++k) out.push_back(rest[k]);
  };
  tail(a, i, left_a);
  tail(b, j, left_b);
  return out;
}

}  // namespace pncmac::sim
