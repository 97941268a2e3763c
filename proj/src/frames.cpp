#include "pncmac/frames.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>

namespace pncmac::frames {

namespace {

constexpr std::uint8_t kFlagBitReversed = 0x01;
constexpr std::uint8_t kFlagCoded = 0x02;
constexpr std::uint8_t kFlagSuperposed = 0x04;
constexpr int kAddrBytes = 6;
constexpr int kFcsBytes = 4;
constexpr SimTime kMaxDuration = 32767;
constexpr SimTime kUsPerMs = 1000;
constexpr SimTime kMaxTq = 0xffff;
constexpr SimTime kMaxOffset = 0x7fff;
constexpr std::uint16_t kWaitFlagBit = 0x8000;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void addr(NodeId id) {
    if (id < 0) {
      for (int i = 0; i < kAddrBytes; ++i) u8(0xff);
      return;
    }
    const auto v = static_cast<std::uint64_t>(id);
    for (int shift = 40; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
  }
  void zeros(int n) { out_.insert(out_.end(), static_cast<std::size_t>(n), 0); }
  void fcs() {
    const auto crc = crc32(0L, out_.data(), static_cast<uInt>(out_.size()));
    for (int shift = 24; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(crc >> shift));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    if (pos_ >= in_.size()) throw DecodeError("frame truncated");
    return in_[pos_++];
  }
  std::uint16_t u16() {
    const auto hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  NodeId addr() {
    std::uint64_t v = 0;
    for (int i = 0; i < kAddrBytes; ++i) v = (v << 8) | u8();
    if (v == 0xffffffffffffULL) return kNoNode;
    return static_cast<NodeId>(v);
  }
  void skip(std::size_t n) {
    if (pos_ + n > in_.size()) throw DecodeError("frame truncated");
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint16_t to_ms(SimTime us, SimTime cap) {
  return static_cast<std::uint16_t>(std::clamp<SimTime>(us / kUsPerMs, 0, cap));
}

std::size_t receiver_count(FrameKind kind, std::size_t listed) {
  switch (kind) {
    case FrameKind::kRtsPnc:
    case FrameKind::kAckPnc:
      return 2;
    case FrameKind::kCncRts:
    case FrameKind::kCncData:
      return std::max<std::size_t>(listed, 1);
    case FrameKind::kData:
      return listed >= 2 ? 2 : 1;
    case FrameKind::kCoPnc:
    case FrameKind::kAck:
      return 0;
    default:
      return 1;
  }
}

NodeId receiver_at(const Frame& f, std::size_t i) {
  return i < f.receivers.size() ? f.receivers[i] : kNoNode;
}

}  // namespace

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::kRts: return "RTS";
    case FrameKind::kCts: return "CTS";
    case FrameKind::kRtsPnc: return "RTS_PNC";
    case FrameKind::kCoPnc: return "CO_PNC";
    case FrameKind::kData: return "DATA";
    case FrameKind::kAck: return "ACK";
    case FrameKind::kAckPnc: return "ACK_PNC";
    case FrameKind::kCncRts: return "CNC_RTS";
    case FrameKind::kCncData: return "CNC_DATA";
  }
  return "?";
}

void TimingParams::validate() const {
  if (sifs <= 0 || difs <= 0 || slot <= 0 || phy_hdr <= 0 || bits_per_us <= 0.0) {
    throw std::invalid_argument("timing durations must be strictly positive");
  }
  if (difs != sifs + 2 * slot) throw std::invalid_argument("difs must equal sifs + 2 * slot");
  if (cw_min <= 0 || cw_max < cw_min) throw std::invalid_argument("bad contention window bounds");
  if (retry_limit <= 0) throw std::invalid_argument("retry_limit must be positive");
  if (pnc_wait_timeout <= 0) throw std::invalid_argument("pnc_wait_timeout must be positive");
}

SimTime TimingParams::bytes_to_us(int bytes) const {
  return static_cast<SimTime>(std::ceil(8.0 * bytes / bits_per_us - 1e-9));
}

bool Frame::addressed_to(NodeId node) const {
  return std::find(receivers.begin(), receivers.end(), node) != receivers.end();
}

int mac_bytes(const Frame& frame, const TimingParams& t) {
  const int extra = std::max(0, static_cast<int>(frame.receivers.size()) - 1);
  switch (frame.kind) {
    case FrameKind::kRts: return t.rts_bytes;
    case FrameKind::kCts: return t.cts_bytes;
    case FrameKind::kRtsPnc: return t.rts_pnc_bytes;
    case FrameKind::kCoPnc: return t.co_pnc_bytes;
    case FrameKind::kData: return t.data_hdr_bytes;
    case FrameKind::kAck: return t.ack_bytes;
    case FrameKind::kAckPnc: return t.ack_pnc_bytes;
    case FrameKind::kCncRts: return t.cnc_rts_bytes + extra * t.cnc_extra_dest_bytes;
    case FrameKind::kCncData: return t.data_hdr_bytes + extra * t.cnc_data_extra_bytes;
  }
  return 0;
}

SimTime frame_airtime(const Frame& frame, const TimingParams& t) {
  return t.phy_hdr + t.bytes_to_us(mac_bytes(frame, t) + frame.payload_len);
}

SimTime data_airtime(int payload_len, const TimingParams& t) {
  return t.phy_hdr + t.bytes_to_us(t.data_hdr_bytes + payload_len);
}

SimTime control_airtime(FrameKind kind, const TimingParams& t) {
  Frame f;
  f.kind = kind;
  return frame_airtime(f, t);
}

SimTime nav_rts_pnc(const TimingParams& t) {
  return 3 * t.sifs + 2 * control_airtime(FrameKind::kCts, t) +
         control_airtime(FrameKind::kCoPnc, t);
}

SimTime nav_cts(CtsRole role, SimTime data_time, const TimingParams& t) {
  const SimTime cts = control_airtime(FrameKind::kCts, t);
  const SimTime co = control_airtime(FrameKind::kCoPnc, t);
  const SimTime ack = control_airtime(FrameKind::kAck, t);
  switch (role) {
    case CtsRole::kNoPacket: return 0;
    case CtsRole::kA: return 4 * t.sifs + cts + co + data_time + ack;
    case CtsRole::kB: return 4 * t.sifs + co + t.phy_hdr + t.mac_hdr_time() + data_time + ack;
  }
  return 0;
}

SimTime nav_co_pnc(PncMode mode, std::optional<SimTime> nav_cts_a, std::optional<SimTime> nav_cts_b,
                   const TimingParams& t) {
  const SimTime cts = control_airtime(FrameKind::kCts, t);
  const SimTime co = control_airtime(FrameKind::kCoPnc, t);
  const SimTime ack_pnc = control_airtime(FrameKind::kAckPnc, t);
  const auto need = [](std::optional<SimTime> v, const char* who) {
    if (!v || *v <= 0) throw std::logic_error(std::string("CO-PNC needs a valid CTS from ") + who);
    return *v;
  };
  switch (mode) {
    case PncMode::kAOnly: return need(nav_cts_a, "A") - 2 * t.sifs - cts - co;
    case PncMode::kBOnly: return need(nav_cts_b, "B") - t.sifs - co;
    case PncMode::kBoth:
      need(nav_cts_a, "A");
      return 2 * (need(nav_cts_b, "B") - co) - t.sifs + ack_pnc;
  }
  return 0;
}

SimTime nav_data(DataRole role, SimTime nav_co_pnc_both, SimTime data_airtime_b,
                 const TimingParams& t) {
  SimTime v = 0;
  switch (role) {
    case DataRole::kSingle: return 0;
    case DataRole::kA: v = nav_co_pnc_both - t.sifs - t.phy_hdr - t.mac_hdr_time(); break;
    case DataRole::kB:
      v = nav_co_pnc_both - 2 * t.sifs - t.phy_hdr - t.mac_hdr_time() - data_airtime_b;
      break;
  }
  if (v < 0) throw std::logic_error("negative DATA NAV: frame sizes are inconsistent");
  return v;
}

QueueAdvert quantize(const QueueAdvert& a) {
  QueueAdvert q = a;
  q.t_q_cur = to_ms(a.t_q_cur, kMaxTq) * kUsPerMs;
  q.t_q_next_offset = to_ms(a.t_q_next_offset, kMaxOffset) * kUsPerMs;
  q.len_next = std::clamp(a.len_next, 0, 0xffff);
  return q;
}

std::vector<std::uint8_t> encode(const Frame& f) {
  if (f.duration < 0 || f.duration > kMaxDuration) {
    throw std::invalid_argument("duration field out of range");
  }
  const std::size_t n_rx = receiver_count(f.kind, f.receivers.size());
  Writer w;
  w.u8(static_cast<std::uint8_t>(f.kind));
  std::uint8_t flags = 0;
  if (f.bit_reversed) flags |= kFlagBitReversed;
  if (f.coded) flags |= kFlagCoded;
  if (f.superposed) flags |= kFlagSuperposed;
  flags |= static_cast<std::uint8_t>((n_rx & 0x0f) << 4);
  w.u8(flags);
  w.u16(static_cast<std::uint16_t>(f.duration));

  switch (f.kind) {
    case FrameKind::kRts:
      w.addr(receiver_at(f, 0));
      w.addr(f.transmitter);
      break;
    case FrameKind::kCts:
      w.addr(receiver_at(f, 0));
      break;
    case FrameKind::kRtsPnc:
    case FrameKind::kCncRts:
      for (std::size_t i = 0; i < n_rx; ++i) w.addr(receiver_at(f, i));
      w.addr(f.transmitter);
      break;
    case FrameKind::kAckPnc:
      w.addr(receiver_at(f, 0));
      w.addr(receiver_at(f, 1));
      break;
    case FrameKind::kCoPnc: {
      w.addr(f.transmitter);
      std::uint16_t c = f.control.compensation & 0x1fff;
      if (f.control.a_has_data) c |= 0x8000;
      if (f.control.b_has_data) c |= 0x4000;
      if (f.control.clear_wait_flags) c |= 0x2000;
      w.u16(c);
      break;
    }
    case FrameKind::kAck: {
      const auto a = quantize(f.advert);
      w.addr(f.transmitter);
      w.addr(a.next_hop);
      w.addr(a.second_hop);
      w.u16(to_ms(a.t_q_next(), kMaxTq));
      w.u16(static_cast<std::uint16_t>(a.len_next));
      break;
    }
    case FrameKind::kData:
    case FrameKind::kCncData: {
      const auto a = quantize(f.advert);
      w.addr(receiver_at(f, 0));
      w.addr(f.transmitter);
      w.addr(f.coded ? receiver_at(f, 1) : f.source);
      w.u16(f.seq);
      w.addr(f.second_hop);
      w.addr(f.prev_hop);
      w.u16(to_ms(a.t_q_cur, kMaxTq));
      std::uint16_t off = to_ms(a.t_q_next_offset, kMaxOffset);
      if (f.wait_for_pnc_set) off |= kWaitFlagBit;
      w.u16(off);
      w.u16(static_cast<std::uint16_t>(a.len_next));
      if (f.kind == FrameKind::kCncData) {
        for (std::size_t i = 1; i < n_rx; ++i) {
          w.addr(receiver_at(f, i));
          w.u16(f.seq2);
        }
      }
      w.zeros(f.payload_len);
      break;
    }
  }
  w.fcs();
  return w.take();
}

Frame decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + kFcsBytes) throw DecodeError("frame truncated");
  const auto body = bytes.first(bytes.size() - kFcsBytes);
  const auto crc = crc32(0L, body.data(), static_cast<uInt>(body.size()));
  std::uint32_t stored = 0;
  for (std::size_t i = body.size(); i < bytes.size(); ++i) stored = (stored << 8) | bytes[i];
  if (stored != static_cast<std::uint32_t>(crc)) throw DecodeError("FCS mismatch");

  Reader r(body);
  Frame f;
  const auto kind_code = r.u8();
  if (kind_code < 1 || kind_code > 9) throw DecodeError("unknown frame kind");
  f.kind = static_cast<FrameKind>(kind_code);
  const auto flags = r.u8();
  f.bit_reversed = (flags & kFlagBitReversed) != 0;
  f.coded = (flags & kFlagCoded) != 0;
  f.superposed = (flags & kFlagSuperposed) != 0;
  const std::size_t n_rx = flags >> 4;
  f.duration = r.u16();

  const auto read_receivers = [&](std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId id = r.addr();
      if (id != kNoNode) f.receivers.push_back(id);
    }
  };

  switch (f.kind) {
    case FrameKind::kRts:
      read_receivers(1);
      f.transmitter = r.addr();
      break;
    case FrameKind::kCts:
      read_receivers(1);
      break;
    case FrameKind::kRtsPnc:
    case FrameKind::kCncRts:
      read_receivers(n_rx);
      f.transmitter = r.addr();
      break;
    case FrameKind::kAckPnc:
      read_receivers(2);
      break;
    case FrameKind::kCoPnc: {
      f.transmitter = r.addr();
      const auto c = r.u16();
      f.control.a_has_data = (c & 0x8000) != 0;
      f.control.b_has_data = (c & 0x4000) != 0;
      f.control.clear_wait_flags = (c & 0x2000) != 0;
      f.control.compensation = c & 0x1fff;
      break;
    }
    case FrameKind::kAck:
      f.transmitter = r.addr();
      f.advert.next_hop = r.addr();
      f.advert.second_hop = r.addr();
      f.advert.t_q_cur = static_cast<SimTime>(r.u16()) * kUsPerMs;
      f.advert.len_next = r.u16();
      break;
    case FrameKind::kData:
    case FrameKind::kCncData: {
      read_receivers(1);
      f.transmitter = r.addr();
      const NodeId third = r.addr();
      if (f.coded) {
        if (third != kNoNode) f.receivers.push_back(third);
      } else {
        f.source = third;
      }
      f.seq = r.u16();
      f.second_hop = r.addr();
      f.prev_hop = r.addr();
      f.advert.next_hop = f.receiver();
      f.advert.second_hop = f.second_hop;
      f.advert.t_q_cur = static_cast<SimTime>(r.u16()) * kUsPerMs;
      const auto off = r.u16();
      f.wait_for_pnc_set = (off & kWaitFlagBit) != 0;
      f.advert.t_q_next_offset = static_cast<SimTime>(off & kMaxOffset) * kUsPerMs;
      f.advert.len_next = r.u16();
      if (f.kind == FrameKind::kCncData) {
        for (std::size_t i = 1; i < n_rx; ++i) {
          f.receivers.push_back(r.addr());
          f.seq2 = r.u16();
        }
      }
      f.payload_len = static_cast<int>(body.size() - r.pos());
      break;
    }
  }
  if (f.kind != FrameKind::kData && f.kind != FrameKind::kCncData && r.pos() != body.size()) {
    throw DecodeError("trailing bytes in control frame");
  }
  return f;
}

SimTime nav_anchor(const Frame& f, SimTime start, SimTime end, const TimingParams& t) {
  if (f.kind == FrameKind::kData && f.superposed && !f.bit_reversed) {
    return start + t.phy_hdr + t.mac_hdr_time();
  }
  return end;
}

}  // namespace pncmac::frames
