#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "pncmac/types.hpp"

namespace pncmac::frames {

enum class FrameKind : std::uint8_t {
  kRts = 1,
  kCts = 2,
  kRtsPnc = 3,
  kCoPnc = 4,
  kData = 5,
  kAck = 6,
  kAckPnc = 7,
  kCncRts = 8,
  kCncData = 9,
};

std::string_view to_string(FrameKind kind);

/// Inter-frame spaces, PHY header and MAC frame sizes.
struct TimingParams {
  SimTime sifs = 10;
  SimTime difs = 50;
  SimTime slot = 20;
  SimTime phy_hdr = 192;
  double bits_per_us = 1.0;

  int rts_bytes = 20;
  int rts_pnc_bytes = 26;
  int cts_bytes = 14;
  int co_pnc_bytes = 16;
  int data_hdr_bytes = 46;
  int ack_bytes = 30;
  int ack_pnc_bytes = 20;
  int cnc_rts_bytes = 20;
  int cnc_extra_dest_bytes = 6;   // each CNC_RTS destination beyond the first
  int cnc_data_extra_bytes = 8;   // address + sequence per extra coded packet

  SimTime pnc_wait_timeout = kSecond;
  int cw_min = 31;
  int cw_max = 1023;
  int retry_limit = 7;

  /// Throws std::invalid_argument if a duration is non-positive or DIFS != SIFS + 2 slots.
  void validate() const;

  SimTime bytes_to_us(int bytes) const;
  SimTime mac_hdr_time() const { return bytes_to_us(data_hdr_bytes); }
};

/// Piggybacked summary of the next queued packet sharing a (next, second) hop key.
struct QueueAdvert {
  NodeId next_hop = kNoNode;
  NodeId second_hop = kNoNode;
  SimTime t_q_cur = 0;          // residence of the carried packet
  SimTime t_q_next_offset = 0;  // t_q_cur - T_q(next)
  int len_next = 0;             // 0: no further packet

  SimTime t_q_next() const { return t_q_cur - t_q_next_offset; }
  bool operator==(const QueueAdvert&) const = default;
};

struct CoPncControl {
  bool a_has_data = false;
  bool b_has_data = false;
  bool clear_wait_flags = false;
  std::uint16_t compensation = 0;  // 13 bits; synchronization is ideal, so always 0
  bool operator==(const CoPncControl&) const = default;
};

/// On-air fields of a MAC frame. Receiver order is meaningful: RTS-PNC lists
/// source A then B, CNC frames list destinations in slot order.
struct Frame {
  FrameKind kind = FrameKind::kData;
  SimTime duration = 0;
  NodeId transmitter = kNoNode;
  std::vector<NodeId> receivers;

  // DATA / CNC_DATA
  NodeId source = kNoNode;
  std::uint16_t seq = 0;
  std::uint16_t seq2 = 0;  // second coded packet (CNC_DATA)
  NodeId prev_hop = kNoNode;
  NodeId second_hop = kNoNode;
  int payload_len = 0;
  bool wait_for_pnc_set = false;
  bool bit_reversed = false;
  bool coded = false;  // relay-forwarded PNC packet
  bool superposed = false;  // source DATA of a two-source exchange; NAV counts from header end

  QueueAdvert advert;  // DATA and ACK
  CoPncControl control;

  NodeId receiver() const { return receivers.empty() ? kNoNode : receivers.front(); }
  bool addressed_to(NodeId node) const;
  bool operator==(const Frame&) const = default;
};

/// Instant from which a frame's duration field counts: the end of the header
/// for a superposed DATA sent header first, otherwise the end of the frame.
SimTime nav_anchor(const Frame& frame, SimTime start, SimTime end, const TimingParams& timing);

/// MAC bytes excluding payload.
int mac_bytes(const Frame& frame, const TimingParams& timing);
SimTime frame_airtime(const Frame& frame, const TimingParams& timing);

/// Airtime of a DATA frame carrying `payload_len` bytes.
SimTime data_airtime(int payload_len, const TimingParams& timing);
SimTime control_airtime(FrameKind kind, const TimingParams& timing);

enum class CtsRole { kA, kB, kNoPacket };
enum class PncMode { kAOnly, kBOnly, kBoth };
enum class DataRole { kA, kB, kSingle };

SimTime nav_rts_pnc(const TimingParams& timing);
SimTime nav_cts(CtsRole role, SimTime data_airtime, const TimingParams& timing);
/// Throws std::logic_error when the mode needs a CTS NAV that is absent or zero.
SimTime nav_co_pnc(PncMode mode, std::optional<SimTime> nav_cts_a, std::optional<SimTime> nav_cts_b,
                   const TimingParams& timing);
/// Throws std::logic_error on a negative result.
SimTime nav_data(DataRole role, SimTime nav_co_pnc_both, SimTime data_airtime_b,
                 const TimingParams& timing);

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical big-endian layout: MAC header, payload bytes (zero filled), CRC-32 FCS.
std::vector<std::uint8_t> encode(const Frame& frame);
/// Throws DecodeError on truncation, unknown kind or FCS mismatch.
Frame decode(std::span<const std::uint8_t> bytes);

/// Wire precision of the advert clocks (1 ms units, saturating).
QueueAdvert quantize(const QueueAdvert& advert);

}  // namespace pncmac::frames
