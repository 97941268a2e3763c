#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pncmac/campaign.hpp"
#include "pncmac/config.hpp"
#include "pncmac/frames.hpp"
#include "pncmac/phy.hpp"

namespace py = pybind11;
using namespace pncmac;

namespace {

cli::ScenarioConfig scenario_from(const std::string& text) {
  cli::Json doc;
  try {
    doc = cli::Json::parse(text, nullptr, true, true);
  } catch (const cli::Json::parse_error& e) {
    throw sim::ConfigError(std::string("config: ") + e.what());
  }
  return cli::parse_scenario(doc);
}

py::dict summary_dict(const sim::RunResult& r) {
  const auto& s = r.summary;
  py::dict d;
  d["throughput_bps"] = s.throughput_bps;
  d["mean_delay_s"] = s.mean_delay_s ? py::cast(*s.mean_delay_s) : py::none();
  d["drops"] = s.drops;
  d["pnc_count"] = s.pnc_count;
  d["cnc_count"] = s.cnc_count;
  d["unicast_count"] = s.unicast_count;
  d["generated"] = s.generated;
  d["delivered"] = s.delivered;
  d["events"] = r.events;
  d["trace"] = r.trace;
  return d;
}

py::dict frame_dict(const frames::Frame& f) {
  py::dict d;
  d["kind"] = std::string(frames::to_string(f.kind));
  d["duration"] = f.duration;
  d["transmitter"] = f.transmitter;
  d["receivers"] = f.receivers;
  d["source"] = f.source;
  d["seq"] = f.seq;
  d["payload_len"] = f.payload_len;
  d["wait_for_pnc_set"] = f.wait_for_pnc_set;
  d["bit_reversed"] = f.bit_reversed;
  d["coded"] = f.coded;
  return d;
}

frames::FrameKind kind_from(const std::string& name) {
  for (int k = 1; k <= 9; ++k) {
    const auto kind = static_cast<frames::FrameKind>(k);
    if (frames::to_string(kind) == name) return kind;
  }
  throw py::value_error("unknown frame kind '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulator core";
  py::register_exception<sim::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<frames::DecodeError>(m, "DecodeError", PyExc_ValueError);

  m.def(
      "run",
      [](const std::string& config_json, std::uint64_t seed, bool trace) {
        auto cfg = scenario_from(config_json);
        auto rc = cli::run_config_for(cfg, seed);
        rc.trace = trace;
        sim::RunResult r;
        {
          py::gil_scoped_release release;
          r = sim::run(rc);
        }
        return summary_dict(r);
      },
      py::arg("config_json"), py::arg("seed") = 1, py::arg("trace") = false);

  m.def(
      "run_scenario_csv",
      [](const std::string& config_json) {
        const auto cfg = scenario_from(config_json);
        std::ostringstream out;
        {
          py::gil_scoped_release release;
          cli::write_csv(out, cli::run_scenario(cfg));
        }
        return out.str();
      },
      py::arg("config_json"));

  m.def("effective_config", [](const std::string& config_json) {
    return cli::to_json(scenario_from(config_json)).dump();
  });

  m.def("q_function", &phy::q_function);
  m.def("ber_dbpsk_chip", &phy::ber_dbpsk_chip, py::arg("es"), py::arg("n0"), py::arg("interference_energy"));
  m.def("ber_dnf_chip", &phy::ber_dnf_chip, py::arg("es_min"), py::arg("n0"), py::arg("interference_energy"));
  m.def("ber_despread", &phy::ber_despread, py::arg("p_chip"));
  m.def("per_threshold_dbm", [](double target, std::int64_t bits) {
    return phy::per_threshold_dbm(target, bits, phy::PhyParams{});
  });

  m.def(
      "encode_frame",
      [](const std::string& kind, SimTime duration, NodeId transmitter, std::vector<NodeId> receivers,
         int payload_len, std::uint16_t seq) {
        frames::Frame f;
        f.kind = kind_from(kind);
        f.duration = duration;
        f.transmitter = transmitter;
        f.receivers = std::move(receivers);
        f.payload_len = payload_len;
        f.seq = seq;
        const auto bytes = frames::encode(f);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("kind"), py::arg("duration"), py::arg("transmitter"), py::arg("receivers"),
      py::arg("payload_len") = 0, py::arg("seq") = 0);

  m.def("decode_frame", [](const py::bytes& data) {
    const std::string s = data;
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    return frame_dict(frames::decode({p, s.size()}));
  });

  m.def("frame_airtime_us", [](const std::string& kind, int payload_len) {
    const frames::TimingParams t;
    const auto k = kind_from(kind);
    return k == frames::FrameKind::kData ? frames::data_airtime(payload_len, t) : frames::control_airtime(k, t);
  }, py::arg("kind"), py::arg("payload_len") = 0);
}
