#include "pncmac/metrics.hpp"

namespace pncmac::sim {

void Metrics::on_generated(const Packet& p) {
  ++generated_;
  if (p.flow >= 0 && static_cast<std::size_t>(p.flow) < flows_.size()) {
    ++flows_[static_cast<std::size_t>(p.flow)].generated;
  }
}

bool Metrics::on_delivered(const Packet& p, SimTime now) {
  if (!delivered_ids_.insert(p.id).second) {
    ++duplicates;
    return false;
  }
  ++delivered_;
  if (now < warmup_ || p.flow < 0 || static_cast<std::size_t>(p.flow) >= flows_.size()) return true;
  auto& f = flows_[static_cast<std::size_t>(p.flow)];
  ++f.delivered;
  f.delivered_bits += static_cast<std::uint64_t>(p.length_bytes) * 8U;
  f.delay_sum_s += static_cast<double>(now - p.created_at) / static_cast<double>(kSecond);
  return true;
}

void Metrics::on_drop(const Packet& p, DropCause cause) {
  (cause == DropCause::kOverflow ? drops_overflow_ : drops_retry_)++;
  if (p.flow >= 0 && static_cast<std::size_t>(p.flow) < flows_.size()) {
    ++flows_[static_cast<std::size_t>(p.flow)].drops;
  }
}

std::uint64_t Metrics::drops(DropCause cause) const {
  return cause == DropCause::kOverflow ? drops_overflow_ : drops_retry_;
}

Summary metrics_report(const Metrics& m, SimTime duration, SimTime warmup) {
  Summary s;
  const double span_s = static_cast<double>(duration - warmup) / static_cast<double>(kSecond);
  std::uint64_t bits = 0;
  std::uint64_t count = 0;
  double delay_sum = 0.0;
  for (const auto& f : m.flows()) {
    FlowSummary fs;
    fs.throughput_bps = span_s > 0.0 ? static_cast<double>(f.delivered_bits) / span_s : 0.0;
    if (f.delivered > 0) fs.mean_delay_s = f.delay_sum_s / static_cast<double>(f.delivered);
    fs.drops = f.drops;
    s.flows.push_back(fs);
    bits += f.delivered_bits;
    count += f.delivered;
    delay_sum += f.delay_sum_s;
  }
  s.throughput_bps = span_s > 0.0 ? static_cast<double>(bits) / span_s : 0.0;
  if (count > 0) s.mean_delay_s = delay_sum / static_cast<double>(count);
  s.drops = m.drops();
  s.pnc_count = m.pnc_exchanges;
  s.cnc_count = m.cnc_exchanges;
  s.unicast_count = m.unicast_exchanges;
  s.generated = m.generated();
  s.delivered = m.delivered();
  s.duplicates = m.duplicates;
  return s;
}

}  // namespace pncmac::sim
