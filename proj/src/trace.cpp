#include "pncmac/trace.hpp"

#include <sstream>

namespace pncmac::sim {

std::string describe(const frames::Frame& f) {
  std::ostringstream out;
  out << frames::to_string(f.kind) << " dur=" << f.duration << " to=";
  for (std::size_t i = 0; i < f.receivers.size(); ++i) out << (i ? "," : "") << f.receivers[i];
  if (f.receivers.empty()) out << '-';
  if (f.kind == frames::FrameKind::kData || f.kind == frames::FrameKind::kCncData) {
    out << " len=" << f.payload_len;
    if (f.coded) out << " coded";
    if (f.bit_reversed) out << " reversed";
    if (f.superposed) out << " superposed";
    if (f.wait_for_pnc_set) out << " wait";
  }
  return out.str();
}

void Trace::frame_tx(SimTime now, const Transmission& tx) {
  if (!enabled_) return;
  std::ostringstream out;
  out << now << ' ' << tx.transmitter << " tx " << describe(tx.frame) << " end=" << tx.end;
  for (std::size_t i = 0; i < tx.packets.size(); ++i) out << (i ? "," : " ids=") << tx.packets[i].id;
  lines_.push_back(out.str());
}

void Trace::frame_rx(SimTime now, NodeId node, const Transmission& tx, bool ok) {
  if (!enabled_) return;
  std::ostringstream out;
  out << now << ' ' << node << (ok ? " rx " : " rxfail ") << frames::to_string(tx.frame.kind)
      << " from=" << tx.transmitter;
  lines_.push_back(out.str());
}

void Trace::note(SimTime now, NodeId node, std::string_view event, std::string_view detail) {
  if (!enabled_) return;
  std::ostringstream out;
  out << now << ' ' << node << ' ' << event;
  if (!detail.empty()) out << ' ' << detail;
  lines_.push_back(out.str());
}

std::vector<std::string> Trace::frame_lines() const {
  std::vector<std::string> out;
  for (const auto& l : lines_) {
    if (l.find(" tx ") != std::string::npos) out.push_back(l);
  }
  return out;
}

void Trace::write(std::ostream& out) const {
  for (const auto& l : lines_) out << l << '\n';
}

}  // namespace pncmac::sim
