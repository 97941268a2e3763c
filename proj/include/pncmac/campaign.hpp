#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pncmac/config.hpp"

namespace pncmac::cli {

enum class Metric { kThroughput, kDelay };

/// A base scenario swept over one key, for each protocol.
struct CampaignSpec {
  std::string name;
  Json base;
  std::string sweep_key;
  std::vector<Json> values;
  std::vector<std::string> protocols{"pnc", "cnc", "dot11"};
  Metric metric = Metric::kThroughput;
};

/// Names accepted by campaign_preset.
std::vector<std::string> preset_names();
/// fig8 ... fig17. Throws sim::ConfigError for an unknown name.
CampaignSpec campaign_preset(const std::string& name);
/// Reads {"scenario": {...}, "sweep": {"key": k, "values": [...]}, "protocols": [...], "metric": m}.
CampaignSpec parse_campaign(const Json& doc, std::string name = "custom");
/// 10 s and 3 seeds; every protocol parameter unchanged.
void apply_desk_scale(CampaignSpec& spec);

struct PointSummary {
  std::string protocol;
  std::string swept_value;
  double mean = 0.0;
  double std = 0.0;
  std::size_t ok = 0;      // seeds contributing to the mean
  std::size_t failed = 0;  // runs that raised an error
  std::string error;       // first error seen at this point
};

struct CampaignResult {
  std::vector<CsvRow> rows;  // aggregate rows of every successful run
  std::vector<PointSummary> points;
};

/// Runs every (protocol, value, seed) on `threads` workers. Failed points are
/// recorded and the rest of the campaign continues.
CampaignResult run_campaign(const CampaignSpec& spec, unsigned threads = 0);

inline constexpr std::string_view kSummaryHeader =
    "campaign,protocol,swept_value,metric,mean,std,seeds_ok,seeds_failed,error";
void write_summary(std::ostream& out, const CampaignSpec& spec, const std::vector<PointSummary>& points);

/// Writes <dir>/<name>_raw.csv and <dir>/<name>.csv.
void write_campaign(const std::filesystem::path& dir, const CampaignSpec& spec,
                    const CampaignResult& result);

std::string value_label(const Json& v);

}  // namespace pncmac::cli
