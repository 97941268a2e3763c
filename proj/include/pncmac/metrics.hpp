#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "pncmac/types.hpp"

namespace pncmac::sim {

enum class DropCause { kOverflow, kRetry };

struct FlowStats {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t delivered_bits = 0;
  double delay_sum_s = 0.0;
  std::uint64_t drops = 0;
};

/// Run counters. Deliveries are de-duplicated by packet id.
class Metrics {
 public:
  explicit Metrics(std::size_t flow_count = 0, SimTime warmup = 0)
      : flows_(flow_count), warmup_(warmup) {}

  void on_generated(const Packet& p);
  /// Returns false for a duplicate delivery.
  bool on_delivered(const Packet& p, SimTime now);
  void on_drop(const Packet& p, DropCause cause);

  std::uint64_t pnc_exchanges = 0;     // two-source coded exchanges
  std::uint64_t pnc_single = 0;        // relay-initiated exchanges with one source
  std::uint64_t cnc_exchanges = 0;
  std::uint64_t unicast_exchanges = 0;
  std::uint64_t duplicates = 0;

  const std::vector<FlowStats>& flows() const { return flows_; }
  std::uint64_t generated() const { return generated_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t drops(DropCause cause) const;
  std::uint64_t drops() const { return drops_overflow_ + drops_retry_; }

 private:
  std::vector<FlowStats> flows_;
  SimTime warmup_;
  std::unordered_set<std::uint64_t> delivered_ids_;
  std::uint64_t generated_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t drops_overflow_ = 0;
  std::uint64_t drops_retry_ = 0;
};

struct FlowSummary {
  double throughput_bps = 0.0;
  std::optional<double> mean_delay_s;
  std::uint64_t drops = 0;
};

struct Summary {
  double throughput_bps = 0.0;
  std::optional<double> mean_delay_s;  // absent when nothing was delivered
  std::uint64_t drops = 0;
  std::uint64_t pnc_count = 0;
  std::uint64_t cnc_count = 0;
  std::uint64_t unicast_count = 0;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;  // copies that reached a node twice
  std::vector<FlowSummary> flows;
};

/// Throughput is delivered payload bits over the measured span.
Summary metrics_report(const Metrics& metrics, SimTime duration, SimTime warmup = 0);

}  // namespace pncmac::sim
