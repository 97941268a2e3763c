#include "pncmac/contention.hpp"

#include <algorithm>

namespace pncmac::mac {

Contention::Contention(sim::EventQueue& events, const frames::TimingParams& timing, Rng& rng,
                       Hooks hooks)
    : events_(events), timing_(timing), rng_(rng), hooks_(std::move(hooks)), cw_(timing.cw_min) {}

void Contention::update() {
  const SimTime now = events_.now();
  if (!hooks_.channel_idle()) {
    if (idle_) {
      idle_ = false;
      freeze(now);
    }
    return;
  }
  if (!idle_) {
    idle_ = true;
    idle_since_ = now;
  }
  if (access_ev_ != sim::kNoEvent || !hooks_.wants_access()) return;
  if (backoff_ < 0) backoff_ = std::uniform_int_distribution<int>(0, cw_)(rng_);
  access_at_ = std::max(now, idle_since_ + timing_.difs + backoff_ * timing_.slot);
  access_ev_ = events_.schedule(access_at_, [this] {
    access_ev_ = sim::kNoEvent;
    backoff_ = -1;
    idle_ = false;
    hooks_.granted();
  });
}

void Contention::freeze(SimTime now) {
  if (access_ev_ == sim::kNoEvent) return;
  // Busy detected in the very slot we picked: the transmission goes ahead.
  if (access_at_ <= now) return;
  const SimTime counted = now - (idle_since_ + timing_.difs);
  if (counted > 0) backoff_ -= std::min<SimTime>(backoff_, counted / timing_.slot);
  events_.cancel(access_ev_);
  access_ev_ = sim::kNoEvent;
}

}  // namespace pncmac::mac
