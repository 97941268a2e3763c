#include "pncmac/event_queue.hpp"

#include <stdexcept>

namespace pncmac::sim {

EventId EventQueue::schedule(SimTime at, Handler handler) {
  if (at < now_) throw std::logic_error("event scheduled in the past");
  const EventId id = next_id_++;
  heap_.push(Entry{at, id, std::move(handler)});
  pending_.insert(id);
  return id;
}

void EventQueue::cancel(EventId id) {
  if (pending_.erase(id) > 0) cancelled_.insert(id);
}

void EventQueue::run_until(SimTime end) {
  while (!heap_.empty() && heap_.top().at < end) {
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    if (cancelled_.erase(e.id) > 0) continue;
    pending_.erase(e.id);
    now_ = e.at;
    ++dispatched_;
    e.handler();
  }
  if (end > now_) now_ = end;
}

}  // namespace pncmac::sim
