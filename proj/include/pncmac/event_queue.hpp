#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "pncmac/types.hpp"

namespace pncmac::sim {

using EventId = std::uint64_t;
inline constexpr EventId kNoEvent = 0;

/// Time-ordered callbacks. Ties dispatch in scheduling order.
class EventQueue {
 public:
  using Handler = std::function<void()>;

  SimTime now() const { return now_; }

  /// Throws std::logic_error when `at` lies in the past.
  EventId schedule(SimTime at, Handler handler);
  EventId schedule_in(SimTime delay, Handler handler) { return schedule(now_ + delay, std::move(handler)); }
  /// Cancelling an already dispatched or unknown id is a no-op.
  void cancel(EventId id);

  /// Dispatches every event with time < `end`, then parks the clock at `end`.
  void run_until(SimTime end);
  bool empty() const { return heap_.size() == cancelled_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

 private:
  struct Entry {
    SimTime at;
    EventId id;
    Handler handler;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.id > b.id;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::unordered_set<EventId> cancelled_;
  std::unordered_set<EventId> pending_;
  SimTime now_ = 0;
  EventId next_id_ = 1;
  std::uint64_t dispatched_ = 0;
};

}  // namespace pncmac::sim
