// Command-line front end: experiment runs, the poll-overhead table, analytic
// validation and trace utilities.
//
// Log verbosity comes from HCCA_LOG (quiet, info, debug; default info).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hcca/experiment.hpp"

namespace {

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity() {
  const char* v = std::getenv("HCCA_LOG");
  if (!v) return Verbosity::Info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return Verbosity::Quiet;
  if (s == "debug" || s == "2") return Verbosity::Debug;
  return Verbosity::Info;
}

void info(const std::string& msg) {
  if (verbosity() != Verbosity::Quiet) std::cerr << "[hcca] " << msg << '\n';
}

void write_or_print(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path);
  if (!out) throw hcca::ConfigError("cannot write '" + *path + "'");
  out << text;
  info("wrote " + *path);
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& csv_override) {
  auto cfg = hcca::load_config(config_path);
  if (csv_override) cfg.csv_path = csv_override;
  const auto points = hcca::expand_sweep(cfg);
  info("running " + std::to_string(points.size()) + " sweep point(s) from " + config_path);
  std::vector<hcca::SimEvent> events;
  const auto rows = hcca::run_experiment(cfg, cfg.events_path ? &events : nullptr);
  if (verbosity() == Verbosity::Debug)
    for (const auto& r : rows)
      std::cerr << "[hcca] " << r.report.scheduler << " n=" << r.point.stations << " admitted=" << r.report.admitted
                << " delay=" << hcca::detail::num(r.report.mean_delay_ms) << " ms\n";
  write_or_print(cfg.csv_path, hcca::to_csv(rows));
  if (cfg.events_path) {
    std::ofstream out(*cfg.events_path);
    if (!out) throw hcca::ConfigError("cannot write '" + *cfg.events_path + "'");
    hcca::write_event_log(out, events);
    info("wrote event log of the first sweep point to " + *cfg.events_path);
  }
  return 0;
}

int cmd_table2(const std::string& phy, double control_mbps, int n_max) {
  std::cout << hcca::emit_table2(hcca::profile_by_name(phy), hcca::Rate::mbps(control_mbps), n_max);
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const auto cfg = hcca::load_config(config_path);
  const auto rows = hcca::analytic_comparison(cfg);
  write_or_print(cfg.analytic_csv_path, hcca::analytic_csv(rows));
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.rel_err);
  info("max relative error " + hcca::detail::num(worst));
  return 0;
}

int cmd_stats(const std::string& path, double window_ms) {
  std::ifstream in(path);
  if (!in) throw hcca::ConfigError("cannot open trace file '" + path + "'");
  const auto trace = hcca::parse_trace(in);
  const auto s = hcca::trace_stats(trace, window_ms);
  std::cout << "frames," << s.frames << '\n'
            << "mean_size_bytes," << hcca::detail::num(s.mean_size) << '\n'
            << "cov," << hcca::detail::num(s.cov) << '\n'
            << "max_size_bytes," << s.max_size << '\n'
            << "mean_bitrate_bps," << hcca::detail::num(s.mean_bitrate) << '\n'
            << "peak_bitrate_bps," << hcca::detail::num(s.peak_bitrate) << '\n'
            << "peak_to_mean," << hcca::detail::num(s.peak_to_mean) << '\n'
            << "frame_interval_ms," << hcca::detail::num(trace.frame_interval_ms()) << '\n';
  return 0;
}

int cmd_gen_trace(const std::string& preset, std::size_t frames, std::uint64_t seed,
                  const std::optional<std::string>& out) {
  const auto trace = hcca::synthesize_trace(hcca::video_preset(preset), hcca::SynthOptions{frames, 40.0, seed});
  write_or_print(out, "# synthetic " + preset + " seed " + std::to_string(seed) + "\n" + hcca::serialize_trace(trace));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HCCA / ATXOP / AMTXOP uplink scheduling simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> csv_out;
  auto* run = app.add_subcommand("run", "run an experiment config and write its CSV");
  run->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--csv", csv_out, "CSV output path (overrides output.csv)");

  std::string phy = "11g";
  double control_mbps = 2.0;
  int n_max = 9;
  auto* t2 = app.add_subcommand("table2", "single-poll versus multi-poll airtime");
  t2->add_option("--phy", phy, "11b or 11g")->capture_default_str();
  t2->add_option("--control-rate", control_mbps, "control frame rate in Mb/s")->capture_default_str();
  t2->add_option("-n,--n-max", n_max, "largest station count")->capture_default_str();

  auto* va = app.add_subcommand("validate-analytic", "compare the closed-form delay model with simulation");
  va->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::string trace_path;
  double window_ms = 1000.0;
  auto* st = app.add_subcommand("stats", "statistics of a trace file");
  st->add_option("trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);
  st->add_option("--window-ms", window_ms, "peak bit-rate window")->capture_default_str();

  std::string preset = "jp1-high";
  std::size_t frames = 90000;
  std::uint64_t seed = 1;
  std::optional<std::string> trace_out;
  auto* gt = app.add_subcommand("gen-trace", "write a synthetic workload trace");
  gt->add_option("preset", preset, "jp1-low, jp1-high, f1-low or f1-high")->required();
  gt->add_option("--frames", frames, "number of frames")->capture_default_str();
  gt->add_option("--seed", seed, "generator seed")->capture_default_str();
  gt->add_option("-o,--out", trace_out, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, csv_out);
    if (*t2) return cmd_table2(phy, control_mbps, n_max);
    if (*va) return cmd_validate(config);
    if (*st) return cmd_stats(trace_path, window_ms);
    if (*gt) return cmd_gen_trace(preset, frames, seed, trace_out);
  } catch (const std::exception& e) {
    std::cerr << "hcca_sim: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
