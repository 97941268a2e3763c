// pncsim: single runs and figure campaigns.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pncmac/campaign.hpp"
#include "pncmac/config.hpp"

namespace fs = std::filesystem;
using namespace pncmac;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 1;

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& out_dir, bool trace, bool dump_config) {
  cli::Json doc = cli::load_json_file(config_path);
  for (const auto& o : overrides) cli::apply_override(doc, o);
  auto cfg = cli::parse_scenario(doc);
  if (dump_config) {
    std::cout << cli::to_json(cfg).dump(2) << '\n';
    return 0;
  }

  std::optional<fs::path> trace_dir;
  if (trace) trace_dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  if (trace_dir) fs::create_directories(*trace_dir);
  const auto rows = cli::run_scenario(cfg, trace_dir);

  if (out_dir.empty()) {
    cli::write_csv(std::cout, rows);
    return 0;
  }
  fs::create_directories(out_dir);
  const auto path = fs::path(out_dir) / (cfg.scenario_id + ".csv");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  cli::write_csv(out, rows);
  std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_campaign(const std::string& name, const std::string& config_path, bool desk, const std::string& out_dir,
                 unsigned threads, const std::vector<std::string>& overrides) {
  cli::CampaignSpec spec;
  if (name == "custom") {
    if (config_path.empty()) throw sim::ConfigError("config: custom campaigns need --config");
    spec = cli::parse_campaign(cli::load_json_file(config_path));
  } else if (name == "all") {
    for (const auto& fig : cli::preset_names()) {
      const int rc = cmd_campaign(fig, {}, desk, out_dir, threads, overrides);
      if (rc != 0) return rc;
    }
    return 0;
  } else {
    spec = cli::campaign_preset(name);
  }
  if (desk) cli::apply_desk_scale(spec);
  for (const auto& o : overrides) cli::apply_override(spec.base, o);

  const auto result = cli::run_campaign(spec, threads);
  cli::write_campaign(out_dir, spec, result);
  cli::write_summary(std::cout, spec, result.points);
  std::size_t failed = 0;
  for (const auto& p : result.points) failed += p.failed;
  if (failed) std::cerr << spec.name << ": " << failed << " run(s) failed, see the error column\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for PNC-MAC, CNC and 802.11 DCF"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one scenario over its seeds and print CSV");
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  bool trace = false, dump_config = false;
  run->add_option("config", config_path, "Scenario file (JSON, comments allowed)")->required();
  run->add_option("--override,-o", overrides, "key=value, dotted keys for nested fields");
  run->add_option("--out", out_dir, "Directory for <scenario_id>.csv (default: stdout)");
  run->add_flag("--trace", trace, "Write <scenario_id>_seed<k>.trace per seed");
  run->add_flag("--dump-config", dump_config, "Print the effective config and exit");

  auto* camp = app.add_subcommand("campaign", "Sweep a figure preset or a custom campaign");
  std::string name, camp_config, camp_out = "results";
  std::vector<std::string> camp_overrides;
  bool desk = false;
  unsigned threads = 0;
  camp->add_option("name", name, "fig8 ... fig17, all, or custom")->required();
  camp->add_option("--config", camp_config, "Campaign file for 'custom'");
  camp->add_flag("--desk-scale", desk, "10 s runs over 3 seeds");
  camp->add_option("--out", camp_out, "Output directory")->capture_default_str();
  camp->add_option("--threads", threads, "Worker threads (0: one per core)");
  camp->add_option("--override,-o", camp_overrides, "key=value applied to the base scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, overrides, out_dir, trace, dump_config);
    return cmd_campaign(name, camp_config, desk, camp_out, threads, camp_overrides);
  } catch (const sim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
