#include "pncmac/simulator.hpp"

#include <memory>
#include <random>

#include "pncmac/dcf_mac.hpp"
#include "pncmac/event_queue.hpp"
#include "pncmac/medium.hpp"
#include "pncmac/trace.hpp"

namespace pncmac::sim {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kPnc:
      return "pnc";
    case Protocol::kCnc:
      return "cnc";
    case Protocol::kDot11:
      return "dot11";
  }
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "pnc") return Protocol::kPnc;
  if (name == "cnc") return Protocol::kCnc;
  if (name == "dot11") return Protocol::kDot11;
  throw ConfigError("protocol: unknown value '" + std::string(name) + "' (pnc, cnc, dot11)");
}

void validate(const RunConfig& c) {
  const auto& t = c.topology;
  if (t.kind != "wheel" && t.kind != "line" && t.kind != "random") {
    throw ConfigError("topology.kind: expected wheel, line or random, got '" + t.kind + "'");
  }
  if (t.kind == "wheel" && t.pairs < 1) throw ConfigError("topology.pairs: must be >= 1");
  if (t.kind == "wheel" && t.max_radius <= 0) throw ConfigError("topology.max_radius: must be > 0");
  if (t.kind == "line" && t.n < 2) throw ConfigError("topology.n: must be >= 2");
  if (t.kind == "line" && t.spacing <= 0) throw ConfigError("topology.spacing: must be > 0");
  if (t.kind == "random") {
    if (t.side <= 0) throw ConfigError("topology.side: must be > 0");
    if (t.flows < 1) throw ConfigError("topology.flows: must be >= 1");
    if (t.nodes < 2 * t.flows) throw ConfigError("topology.nodes: need two distinct nodes per flow");
  }
  if (c.traffic.model != "backlogged" && c.traffic.model != "poisson") {
    throw ConfigError("traffic.model: expected backlogged or poisson, got '" + c.traffic.model + "'");
  }
  if (c.traffic.model == "poisson" && !(c.traffic.rate > 0)) {
    throw ConfigError("traffic.rate: must be > 0");
  }
  if (c.traffic.payload <= 0) throw ConfigError("traffic.payload: must be > 0");
  if (c.traffic.backlog < 1) throw ConfigError("traffic.backlog: must be >= 1");
  if (c.duration < 0) throw ConfigError("duration: must be >= 0");
  if (c.warmup < 0 || (c.duration > 0 && c.warmup >= c.duration)) {
    throw ConfigError("warmup: must lie in [0, duration)");
  }
  if (c.queue_capacity < 1) throw ConfigError("queue_capacity: must be >= 1");
  try {
    c.phy.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("phy: ") + e.what());
  }
  try {
    c.timing.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("timing: ") + e.what());
  }
  if (c.timing.pnc_wait_timeout <= 0) throw ConfigError("timing.pnc_wait_timeout: must be > 0");
}

Topology make_topology(const RunConfig& c, double range_m) {
  const auto& t = c.topology;
  if (t.kind == "wheel") return build_wheel(t.pairs, t.max_radius, range_m);
  if (t.kind == "line") return build_line(t.n, t.spacing);
  Rng placement = make_stream(t.seed_base + c.seed, Stream::kPlacement);
  return build_random(t.nodes, t.side, t.flows, range_m, placement);
}

namespace {

// One direction of a flow.
struct Source {
  NodeId node = kNoNode;
  NodeId dest = kNoNode;
  int flow = -1;
  std::uint16_t seq = 0;
};

}  // namespace

RunResult run(const RunConfig& c) {
  validate(c);
  RunResult out;
  out.link_threshold_dbm = link_threshold_dbm(c.phy, c.timing, c.traffic.payload);
  out.range_m = link_range_m(c.phy, out.link_threshold_dbm);
  out.topology = make_topology(c, out.range_m);
  const auto& topo = out.topology;

  const Routing routing(topo.positions, out.range_m);
  for (const auto& f : topo.flows) {
    if (routing.hops(f.a, f.b) < 0) {
      throw ConfigError("topology: flow " + std::to_string(f.a) + "<->" + std::to_string(f.b) +
                        " is not routable");
    }
  }

  EventQueue events;
  Medium medium(events, topo.positions, c.phy, c.timing, out.link_threshold_dbm - 6.0,
                make_stream(c.seed, Stream::kReception), make_stream(c.seed, Stream::kPhase));
  Metrics metrics(topo.flows.size(), c.warmup);
  Trace trace(c.trace);
  Rng backoff = make_stream(c.seed, Stream::kBackoff);
  Rng traffic = make_stream(c.seed, Stream::kTraffic);

  std::vector<Source> sources;
  for (std::size_t i = 0; i < topo.flows.size(); ++i) {
    sources.push_back({topo.flows[i].a, topo.flows[i].b, static_cast<int>(i)});
    sources.push_back({topo.flows[i].b, topo.flows[i].a, static_cast<int>(i)});
  }

  std::vector<std::unique_ptr<mac::Station>> nodes;
  std::uint64_t next_packet = 1;
  const bool backlogged = c.traffic.model == "backlogged";

  const auto generate = [&](Source& s) {
    Packet p;
    p.id = next_packet++;
    p.source = s.node;
    p.destination = s.dest;
    p.seq = s.seq++;
    p.length_bytes = c.traffic.payload;
    p.created_at = events.now();
    p.flow = s.flow;
    nodes[static_cast<std::size_t>(s.node)]->inject(p);
  };

  mac::SimContext ctx{events, medium, c.timing, routing, metrics, trace, backoff, c.queue_capacity, {}};
  if (backlogged) {
    ctx.on_local_packet_left = [&](NodeId, const Packet& gone) {
      // Keep the watermark: one packet out, one packet in, same direction.
      for (auto& s : sources) {
        if (s.node == gone.source && s.dest == gone.destination) {
          events.schedule(events.now(), [&s, &generate] { generate(s); });
          return;
        }
      }
    };
  }

  nodes.reserve(topo.positions.size());
  for (std::size_t i = 0; i < topo.positions.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    std::unique_ptr<mac::Station> node;
    if (c.features) {
      node = std::make_unique<mac::PncMac>(id, ctx, *c.features);
    } else if (c.protocol == Protocol::kDot11) {
      node = std::make_unique<mac::DcfMac>(id, ctx);
    } else {
      node = std::make_unique<mac::PncMac>(id, ctx,
                                           mac::MacFeatures{c.protocol == Protocol::kPnc, true});
    }
    medium.attach(id, node.get());
    nodes.push_back(std::move(node));
  }

  if (c.duration > 0) {
    if (backlogged) {
      events.schedule(0, [&] {
        for (auto& s : sources) {
          for (int k = 0; k < c.traffic.backlog; ++k) generate(s);
        }
      });
    } else {
      std::exponential_distribution<double> gap(c.traffic.rate);
      for (auto& s : sources) {
        auto draw = [&] {
          return static_cast<SimTime>(gap(traffic) * static_cast<double>(kSecond));
        };
        // Arrival times are drawn up front so the traffic stream is consumed in a fixed order.
        for (SimTime t = draw(); t < c.duration; t += draw()) {
          events.schedule(t, [&s, &generate] { generate(s); });
        }
      }
    }
    events.run_until(c.duration);
  }

  out.summary = metrics_report(metrics, c.duration, c.warmup);
  out.events = events.dispatched();
  for (const auto& n : nodes) out.queued += n->queue().size();
  out.overflow_drops = metrics.drops(DropCause::kOverflow);
  out.retry_drops = metrics.drops(DropCause::kRetry);
  out.trace = trace.lines();
  return out;
}

}  // namespace pncmac::sim
