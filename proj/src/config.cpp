#include "pncmac/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pncmac::cli {

using sim::ConfigError;

namespace {

const std::map<std::string_view, std::string_view>& shortcuts() {
  static const std::map<std::string_view, std::string_view> m{
      {"cca_sensitivity", "phy.cca_sensitivity_dbm"},
      {"pnc_wait_timeout", "timing.pnc_wait_timeout"},
      {"packet_rate", "traffic.rate"},
      {"pairs", "topology.pairs"},
      {"n", "topology.n"},
  };
  return m;
}

std::vector<std::string> split_dotted(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    parts.emplace_back(key.substr(pos, dot - pos));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  for (const auto& p : parts) {
    if (p.empty()) throw ConfigError("override: malformed key '" + std::string(key) + "'");
  }
  return parts;
}

// Reads typed fields out of one JSON object and rejects leftovers.
class Section {
 public:
  Section(const Json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(name("") + ": expected an object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return fallback;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(name(key) + ": expected a string");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(name(key) + ": expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer() && !it->is_number_unsigned()) {
          throw ConfigError(name(key) + ": expected an integer");
        }
      } else {
        if (!it->is_number()) throw ConfigError(name(key) + ": expected a number");
      }
      return it->get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(name(key) + ": value out of range");
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const Json& child(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.contains(k)) throw ConfigError(name(k) + ": unknown key");
    }
  }

  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  const Json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

SimTime seconds_to_us(double s, const std::string& key) {
  if (!std::isfinite(s)) throw ConfigError(key + ": must be finite");
  return static_cast<SimTime>(std::llround(s * static_cast<double>(kSecond)));
}

double us_to_seconds(SimTime t) { return static_cast<double>(t) / static_cast<double>(kSecond); }

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

std::optional<std::string_view> shortcut_target(std::string_view key) {
  const auto it = shortcuts().find(key);
  if (it == shortcuts().end()) return std::nullopt;
  return it->second;
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
}

void set_key(Json& doc, std::string_view dotted, Json value) {
  std::string key(dotted);
  if (auto target = shortcut_target(key)) key = *target;
  const auto parts = split_dotted(key);
  Json* node = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError(key + ": '" + parts[i] + "' is not an object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = Json::object();
  }
  if (!node->is_object()) throw ConfigError(key + ": parent is not an object");
  (*node)[parts.back()] = std::move(value);
}

void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override: expected key=value, got '" + std::string(assignment) + "'");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  set_key(doc, key, std::move(value));
}

ScenarioConfig parse_scenario(const Json& doc_in) {
  if (!doc_in.is_object()) throw ConfigError("config: expected a JSON object at top level");
  // Resolve top-level shortcuts into their canonical place first.
  Json doc = doc_in;
  for (const auto& [short_key, target] : shortcuts()) {
    if (doc.contains(std::string(short_key))) {
      Json v = doc[std::string(short_key)];
      doc.erase(std::string(short_key));
      set_key(doc, target, std::move(v));
    }
  }

  ScenarioConfig c;
  Section top(doc, "");
  c.scenario_id = top.get<std::string>("scenario_id", c.scenario_id);
  c.swept_value = top.get<std::string>("swept_value", "");
  if (!top.has("topology")) throw ConfigError("topology: missing (wheel, line or random)");

  auto& r = c.run;
  {
    Section t(top.child("topology"), "topology");
    r.topology.kind = t.get<std::string>("kind", "");
    if (r.topology.kind.empty()) throw ConfigError("topology.kind: missing");
    r.topology.pairs = t.get<int>("pairs", r.topology.pairs);
    r.topology.max_radius = t.get<double>("max_radius", r.topology.max_radius);
    r.topology.n = t.get<int>("n", r.topology.n);
    r.topology.spacing = t.get<double>("spacing", r.topology.spacing);
    r.topology.nodes = t.get<int>("nodes", r.topology.nodes);
    r.topology.side = t.get<double>("side", r.topology.side);
    r.topology.flows = t.get<int>("flows", r.topology.flows);
    r.topology.seed_base = t.get<std::uint64_t>("seed_base", r.topology.seed_base);
    t.finish();
  }
  r.protocol = sim::parse_protocol(top.get<std::string>("protocol", "pnc"));
  if (top.has("traffic")) {
    Section t(top.child("traffic"), "traffic");
    r.traffic.model = t.get<std::string>("model", r.traffic.model);
    r.traffic.rate = t.get<double>("rate", r.traffic.rate);
    r.traffic.payload = t.get<int>("payload", r.traffic.payload);
    r.traffic.backlog = t.get<int>("backlog", r.traffic.backlog);
    t.finish();
  }
  r.duration = seconds_to_us(top.get<double>("duration", 50.0), "duration");
  r.warmup = seconds_to_us(top.get<double>("warmup", 0.0), "warmup");
  r.queue_capacity = top.get<std::size_t>("queue_capacity", r.queue_capacity);
  if (top.has("phy")) {
    Section p(top.child("phy"), "phy");
    r.phy.tx_power_dbm = p.get<double>("tx_power_dbm", r.phy.tx_power_dbm);
    r.phy.noise_density_dbm_hz = p.get<double>("noise_density_dbm_hz", r.phy.noise_density_dbm_hz);
    r.phy.noise_figure_db = p.get<double>("noise_figure_db", r.phy.noise_figure_db);
    r.phy.path_loss_exp = p.get<double>("path_loss_exp", r.phy.path_loss_exp);
    r.phy.cca_sensitivity_dbm = p.get<double>("cca_sensitivity_dbm", r.phy.cca_sensitivity_dbm);
    p.finish();
  }
  if (top.has("timing")) {
    Section t(top.child("timing"), "timing");
    r.timing.sifs = t.get<SimTime>("sifs", r.timing.sifs);
    r.timing.difs = t.get<SimTime>("difs", r.timing.difs);
    r.timing.slot = t.get<SimTime>("slot", r.timing.slot);
    r.timing.phy_hdr = t.get<SimTime>("phy_hdr", r.timing.phy_hdr);
    r.timing.pnc_wait_timeout = seconds_to_us(
        t.get<double>("pnc_wait_timeout", us_to_seconds(r.timing.pnc_wait_timeout)),
        "timing.pnc_wait_timeout");
    r.timing.cw_min = t.get<int>("cw_min", r.timing.cw_min);
    r.timing.cw_max = t.get<int>("cw_max", r.timing.cw_max);
    r.timing.retry_limit = t.get<int>("retry_limit", r.timing.retry_limit);
    t.finish();
  }

  if (top.has("seeds")) {
    const Json& s = top.child("seeds");
    if (s.is_number_integer() || s.is_number_unsigned()) {
      const auto n = s.get<std::int64_t>();
      if (n < 1) throw ConfigError("seeds: count must be >= 1");
      for (std::int64_t i = 1; i <= n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (s.is_array()) {
      for (const auto& v : s) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
          throw ConfigError("seeds: expected non-negative integers");
        }
        c.seeds.push_back(v.get<std::uint64_t>());
      }
      if (c.seeds.empty()) throw ConfigError("seeds: list is empty");
    } else {
      throw ConfigError("seeds: expected a count or a list of integers");
    }
  } else {
    for (std::uint64_t i = 1; i <= 10; ++i) c.seeds.push_back(i);
  }
  top.finish();

  if (r.timing.cw_min < 1 || r.timing.cw_max < r.timing.cw_min) {
    throw ConfigError("timing.cw_min: need 1 <= cw_min <= cw_max");
  }
  if (r.timing.retry_limit < 0) throw ConfigError("timing.retry_limit: must be >= 0");
  sim::validate(r);
  return c;
}

Json to_json(const ScenarioConfig& c) {
  const auto& r = c.run;
  Json j;
  j["scenario_id"] = c.scenario_id;
  if (!c.swept_value.empty()) j["swept_value"] = c.swept_value;
  j["topology"] = {{"kind", r.topology.kind},     {"pairs", r.topology.pairs},
                   {"max_radius", r.topology.max_radius}, {"n", r.topology.n},
                   {"spacing", r.topology.spacing}, {"nodes", r.topology.nodes},
                   {"side", r.topology.side},       {"flows", r.topology.flows},
                   {"seed_base", r.topology.seed_base}};
  j["protocol"] = std::string(sim::to_string(r.protocol));
  j["traffic"] = {{"model", r.traffic.model},
                  {"rate", r.traffic.rate},
                  {"payload", r.traffic.payload},
                  {"backlog", r.traffic.backlog}};
  j["duration"] = us_to_seconds(r.duration);
  j["warmup"] = us_to_seconds(r.warmup);
  j["queue_capacity"] = r.queue_capacity;
  j["phy"] = {{"tx_power_dbm", r.phy.tx_power_dbm},
              {"noise_density_dbm_hz", r.phy.noise_density_dbm_hz},
              {"noise_figure_db", r.phy.noise_figure_db},
              {"path_loss_exp", r.phy.path_loss_exp},
              {"cca_sensitivity_dbm", r.phy.cca_sensitivity_dbm}};
  j["timing"] = {{"sifs", r.timing.sifs},
                 {"difs", r.timing.difs},
                 {"slot", r.timing.slot},
                 {"phy_hdr", r.timing.phy_hdr},
                 {"pnc_wait_timeout", us_to_seconds(r.timing.pnc_wait_timeout)},
                 {"cw_min", r.timing.cw_min},
                 {"cw_max", r.timing.cw_max},
                 {"retry_limit", r.timing.retry_limit}};
  j["seeds"] = c.seeds;
  return j;
}

sim::RunConfig run_config_for(const ScenarioConfig& c, std::uint64_t seed) {
  sim::RunConfig r = c.run;
  r.seed = seed;
  return r;
}

std::vector<CsvRow> result_rows(const ScenarioConfig& c, std::uint64_t seed, const sim::RunResult& res) {
  std::vector<CsvRow> rows;
  const std::string protocol(sim::to_string(c.run.protocol));
  for (std::size_t i = 0; i < res.summary.flows.size(); ++i) {
    const auto& f = res.summary.flows[i];
    CsvRow row{c.scenario_id, protocol, c.swept_value, seed, f.throughput_bps, f.mean_delay_s, f.drops,
               std::nullopt, std::nullopt, std::to_string(i)};
    rows.push_back(std::move(row));
  }
  const auto& s = res.summary;
  rows.push_back({c.scenario_id, protocol, c.swept_value, seed, s.throughput_bps, s.mean_delay_s, s.drops,
                  s.pnc_count, s.cnc_count, "all"});
  return rows;
}

void write_csv_row(std::ostream& out, const CsvRow& r) {
  const auto opt = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
  out << r.scenario_id << ',' << r.protocol << ',' << r.swept_value << ',' << r.seed << ','
      << format_double(r.throughput_bps, 1) << ','
      << (r.mean_delay_s ? format_double(*r.mean_delay_s, 6) : std::string()) << ',' << r.drops << ','
      << opt(r.pnc_count) << ',' << opt(r.cnc_count) << ',' << r.flow << '\n';
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) write_csv_row(out, r);
}

std::vector<CsvRow> run_scenario(const ScenarioConfig& c,
                                 const std::optional<std::filesystem::path>& trace_dir) {
  std::vector<CsvRow> rows;
  for (const auto seed : c.seeds) {
    auto rc = run_config_for(c, seed);
    rc.trace = trace_dir.has_value();
    const auto res = sim::run(rc);
    if (trace_dir) {
      std::filesystem::create_directories(*trace_dir);
      std::ofstream out(*trace_dir / (c.scenario_id + "_seed" + std::to_string(seed) + ".trace"));
      for (const auto& line : res.trace) out << line << '\n';
    }
    auto part = result_rows(c, seed, res);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

}  // namespace pncmac::cli
