#pragma once

#include <functional>

#include "pncmac/event_queue.hpp"
#include "pncmac/frames.hpp"
#include "pncmac/random.hpp"

namespace pncmac::mac {

/// CSMA/CA access timer with binary exponential backoff. The counter only runs
/// while the channel has been idle for DIFS and freezes by whole slots.
class Contention {
 public:
  struct Hooks {
    std::function<bool()> channel_idle;  // physical and virtual carrier sense
    std::function<bool()> wants_access;
    std::function<void()> granted;
  };

  Contention(sim::EventQueue& events, const frames::TimingParams& timing, Rng& rng, Hooks hooks);

  /// Re-evaluates after any change of channel state or pending traffic.
  void update();
  void on_success() { cw_ = timing_.cw_min; }
  void on_failure() { cw_ = std::min(2 * cw_ + 1, timing_.cw_max); }

  int cw() const { return cw_; }
  int backoff_slots() const { return backoff_; }
  bool armed() const { return access_ev_ != sim::kNoEvent; }
  SimTime access_time() const { return access_at_; }

 private:
  void freeze(SimTime now);

  sim::EventQueue& events_;
  const frames::TimingParams& timing_;
  Rng& rng_;
  Hooks hooks_;
  int cw_;
  int backoff_ = -1;  // -1: not drawn
  bool idle_ = false;
  SimTime idle_since_ = 0;
  SimTime access_at_ = 0;
  sim::EventId access_ev_ = sim::kNoEvent;
};

}  // namespace pncmac::mac
