#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pncmac/medium.hpp"

namespace pncmac::sim {

/// Line-delimited event log: "<time_us> <node> <event> <fields...>".
class Trace {
 public:
  explicit Trace(bool enabled = false) : enabled_(enabled) {}
  bool enabled() const { return enabled_; }

  void frame_tx(SimTime now, const Transmission& tx);
  void frame_rx(SimTime now, NodeId node, const Transmission& tx, bool ok);
  void note(SimTime now, NodeId node, std::string_view event, std::string_view detail);

  const std::vector<std::string>& lines() const { return lines_; }
  /// Only the frame start records, for engine-to-engine comparison.
  std::vector<std::string> frame_lines() const;
  void write(std::ostream& out) const;

 private:
  bool enabled_;
  std::vector<std::string> lines_;
};

std::string describe(const frames::Frame& f);

}  // namespace pncmac::sim
