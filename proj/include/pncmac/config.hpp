#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pncmac/simulator.hpp"

namespace pncmac::cli {

using Json = nlohmann::json;

/// A scenario as read from a config file: one run per seed.
struct ScenarioConfig {
  std::string scenario_id = "scenario";
  std::string swept_value;  // label carried into the CSV; empty outside campaigns
  sim::RunConfig run;       // run.seed is ignored, seeds below are used instead
  std::vector<std::uint64_t> seeds;
};

/// Top-level shortcut keys and the leaf each one stands for.
std::optional<std::string_view> shortcut_target(std::string_view key);

Json load_json_file(const std::filesystem::path& path);
/// Applies "dotted.key=value"; the value is read as JSON, falling back to a string.
void apply_override(Json& doc, std::string_view assignment);
/// Sets a dotted key, creating intermediate objects. Shortcut keys are resolved.
void set_key(Json& doc, std::string_view dotted, Json value);

/// Validates and fills defaults. Throws sim::ConfigError naming the offending key.
ScenarioConfig parse_scenario(const Json& doc);
/// Every field with defaults applied; parse_scenario(to_json(c)) reproduces c.
Json to_json(const ScenarioConfig& config);

/// One CSV line. An empty flow marks the aggregate row of a seed.
struct CsvRow {
  std::string scenario_id;
  std::string protocol;
  std::string swept_value;
  std::uint64_t seed = 0;
  double throughput_bps = 0.0;
  std::optional<double> mean_delay_s;
  std::uint64_t drops = 0;
  std::optional<std::uint64_t> pnc_count;
  std::optional<std::uint64_t> cnc_count;
  std::string flow;  // flow index, or "all"
};

inline constexpr std::string_view kCsvHeader =
    "scenario_id,protocol,swept_value,seed,throughput_bps,mean_delay_s,drops,pnc_count,cnc_count,flow";

/// Rows of one run: the per-flow rows, then the aggregate.
std::vector<CsvRow> result_rows(const ScenarioConfig& config, std::uint64_t seed,
                                const sim::RunResult& result);
void write_csv_row(std::ostream& out, const CsvRow& row);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

/// Runs every seed in order. `trace_dir`, when set, receives one trace file per seed.
std::vector<CsvRow> run_scenario(const ScenarioConfig& config,
                                 const std::optional<std::filesystem::path>& trace_dir = {});

sim::RunConfig run_config_for(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace pncmac::cli
