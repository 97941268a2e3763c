#include "pncmac/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace pncmac::cli {

using sim::ConfigError;

namespace {

Json wheel_base() { return {{"scenario_id", "wheel"}, {"topology", {{"kind", "wheel"}}}}; }
Json line_base(int n) { return {{"scenario_id", "line"}, {"topology", {{"kind", "line"}, {"n", n}}}}; }
Json random_base() {
  return {{"scenario_id", "random"},
          {"topology", {{"kind", "random"}}},
          {"traffic", {{"model", "poisson"}, {"rate", 5.0}}}};
}

std::vector<Json> ints(int from, int to) {
  std::vector<Json> v;
  for (int i = from; i <= to; ++i) v.emplace_back(i);
  return v;
}

std::vector<Json> reals(std::initializer_list<double> xs) { return {xs.begin(), xs.end()}; }

Metric parse_metric(const std::string& m) {
  if (m == "throughput") return Metric::kThroughput;
  if (m == "delay") return Metric::kDelay;
  throw ConfigError("metric: expected throughput or delay, got '" + m + "'");
}

std::string_view metric_name(Metric m) { return m == Metric::kThroughput ? "throughput_bps" : "mean_delay_s"; }

std::string fmt(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

std::string value_label(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    // Shortest form that round-trips the sweep grids (-97.5, 0.01, ...).
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v.get<double>());
    return buf;
  }
  return v.dump();
}

std::vector<std::string> preset_names() {
  return {"fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14", "fig15", "fig16", "fig17"};
}

CampaignSpec campaign_preset(const std::string& name) {
  CampaignSpec s;
  s.name = name;
  const auto delay_if = [&](const char* delay_fig) {
    s.metric = name == delay_fig ? Metric::kDelay : Metric::kThroughput;
  };
  if (name == "fig8" || name == "fig9") {
    s.base = wheel_base();
    s.sweep_key = "topology.pairs";
    s.values = ints(1, 10);
    delay_if("fig9");
  } else if (name == "fig10" || name == "fig11") {
    s.base = line_base(3);
    s.sweep_key = "topology.n";
    s.values = ints(3, 10);
    delay_if("fig11");
  } else if (name == "fig12" || name == "fig13") {
    s.base = line_base(10);
    s.sweep_key = "phy.cca_sensitivity_dbm";
    s.values = reals({-105, -102.5, -100, -97.5, -95, -92.5, -90, -87.5, -85, -82.5, -80});
    delay_if("fig13");
  } else if (name == "fig14" || name == "fig15") {
    s.base = random_base();
    s.sweep_key = "traffic.rate";
    s.values = reals({1, 2, 5, 10, 20, 50});
    delay_if("fig15");
  } else if (name == "fig16" || name == "fig17") {
    s.base = random_base();
    s.sweep_key = "timing.pnc_wait_timeout";
    s.values = reals({0.01, 0.1, 0.5, 1, 2, 5});
    delay_if("fig17");
  } else {
    throw ConfigError("campaign: unknown name '" + name + "'");
  }
  s.base["scenario_id"] = name;
  return s;
}

CampaignSpec parse_campaign(const Json& doc, std::string name) {
  if (!doc.is_object()) throw ConfigError("campaign: expected a JSON object");
  for (const auto& [k, v] : doc.items()) {
    if (k != "scenario" && k != "sweep" && k != "protocols" && k != "metric" && k != "name") {
      throw ConfigError(k + ": unknown key");
    }
  }
  CampaignSpec s;
  s.name = doc.value("name", name);
  if (!doc.contains("scenario")) throw ConfigError("scenario: missing");
  s.base = doc.at("scenario");
  if (!doc.contains("sweep")) throw ConfigError("sweep: missing");
  const auto& sw = doc.at("sweep");
  if (!sw.is_object() || !sw.contains("key") || !sw.at("key").is_string()) {
    throw ConfigError("sweep.key: missing");
  }
  s.sweep_key = sw.at("key").get<std::string>();
  if (!sw.contains("values") || !sw.at("values").is_array() || sw.at("values").empty()) {
    throw ConfigError("sweep.values: expected a non-empty list");
  }
  s.values.assign(sw.at("values").begin(), sw.at("values").end());
  if (doc.contains("protocols")) {
    s.protocols = doc.at("protocols").get<std::vector<std::string>>();
    for (const auto& p : s.protocols) sim::parse_protocol(p);
  }
  if (doc.contains("metric")) s.metric = parse_metric(doc.at("metric").get<std::string>());
  if (!s.base.contains("scenario_id")) s.base["scenario_id"] = s.name;
  return s;
}

void apply_desk_scale(CampaignSpec& spec) {
  spec.base["duration"] = 10.0;
  spec.base["seeds"] = 3;
}

CampaignResult run_campaign(const CampaignSpec& spec, unsigned threads) {
  struct Job {
    std::size_t point;
    ScenarioConfig config;  // empty seeds when the point failed to configure
    std::uint64_t seed = 0;
    std::string error;
  };
  struct Outcome {
    std::optional<sim::Summary> summary;
    std::string error;
  };

  std::vector<PointSummary> points;
  std::vector<Job> jobs;
  for (const auto& proto : spec.protocols) {
    for (const auto& value : spec.values) {
      const std::size_t idx = points.size();
      PointSummary ps;
      ps.protocol = proto;
      ps.swept_value = value_label(value);
      points.push_back(ps);
      try {
        Json doc = spec.base;
        set_key(doc, "protocol", proto);
        set_key(doc, spec.sweep_key, value);
        set_key(doc, "swept_value", points[idx].swept_value);
        auto cfg = parse_scenario(doc);
        for (const auto seed : cfg.seeds) jobs.push_back({idx, cfg, seed, {}});
      } catch (const std::exception& e) {
        jobs.push_back({idx, {}, 0, e.what()});
      }
    }
  }

  std::vector<Outcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      if (!job.error.empty()) {
        outcomes[i].error = job.error;
        continue;
      }
      try {
        outcomes[i].summary = sim::run(run_config_for(job.config, job.seed)).summary;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Merge in job order, which does not depend on which worker ran what.
  CampaignResult result;
  std::vector<std::vector<double>> samples(points.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& p = points[jobs[i].point];
    const auto& o = outcomes[i];
    if (!o.summary) {
      ++p.failed;
      if (p.error.empty()) p.error = o.error;
      continue;
    }
    const auto& s = *o.summary;
    const auto& c = jobs[i].config;
    result.rows.push_back({c.scenario_id, std::string(sim::to_string(c.run.protocol)), c.swept_value,
                           jobs[i].seed, s.throughput_bps, s.mean_delay_s, s.drops, s.pnc_count,
                           s.cnc_count, "all"});
    if (spec.metric == Metric::kThroughput) {
      samples[jobs[i].point].push_back(s.throughput_bps);
    } else if (s.mean_delay_s) {
      samples[jobs[i].point].push_back(*s.mean_delay_s);
    }
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& xs = samples[k];
    auto& p = points[k];
    p.ok = xs.size();
    if (xs.empty()) continue;
    double sum = 0.0;
    for (double x : xs) sum += x;
    p.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - p.mean) * (x - p.mean);
    p.std = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  }
  result.points = std::move(points);
  return result;
}

void write_summary(std::ostream& out, const CampaignSpec& spec, const std::vector<PointSummary>& points) {
  out << kSummaryHeader << '\n';
  for (const auto& p : points) {
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    const int prec = spec.metric == Metric::kThroughput ? 1 : 6;
    out << spec.name << ',' << p.protocol << ',' << p.swept_value << ',' << metric_name(spec.metric) << ','
        << (p.ok ? fmt(p.mean, prec) : "") << ',' << (p.ok ? fmt(p.std, prec) : "") << ',' << p.ok << ','
        << p.failed << ',' << err << '\n';
  }
}

void write_campaign(const std::filesystem::path& dir, const CampaignSpec& spec, const CampaignResult& r) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream raw(dir / (spec.name + "_raw.csv"));
    write_csv(raw, r.rows);
  }
  std::ofstream sum(dir / (spec.name + ".csv"));
  write_summary(sum, spec, r.points);
}

}  // namespace pncmac::cli
