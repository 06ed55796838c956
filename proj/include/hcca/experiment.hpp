#pragma once

// Experiment configuration, sweep expansion, parallel execution and CSV
// output. A config is a JSON object with namespaced sections:
//
//   phy.*       standard ("11b" | "11g"), control_rate_mbps, data_rate_mbps
//   traffic.*   workload preset or trace_file, stations, synth_frames,
//               trace_seed, offset_seed
//   sim.*       scheduler, per, seed, sim_time_s, warmup_s, beacon_interval_ms,
//               t_cp_ms, admission_control, qs_quantum
//   mobility.*  speed_mps, start_distance_ft, min_distance_ft, max_distance_ft,
//               heading, update_interval_ms, tiers [[max_ft, mbps], ...]
//   sweep.*     stations, per, scheduler, phy, speed (lists)
//   output.*    csv, events, analytic_csv, workers
//
// Unknown keys are rejected by their dotted name.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hcca/analytic_model.hpp"
#include "hcca/error.hpp"
#include "hcca/metrics.hpp"
#include "hcca/phy_timing.hpp"
#include "hcca/sim_engine.hpp"
#include "hcca/trace_synth.hpp"
#include "hcca/traffic_trace.hpp"

namespace hcca {

struct MobilitySettings {
  double speed_mps = 0.0;
  double start_distance_ft = 30.0;
  double min_distance_ft = 0.0;
  std::optional<double> max_distance_ft;
  Heading heading = Heading::Inbound;
  double update_interval_ms = 100.0;
  std::vector<RateTier> tiers = default_rate_tiers();
};

struct SweepAxes {
  std::vector<int> stations;
  std::vector<double> per;
  std::vector<std::string> scheduler;
  std::vector<std::string> phy;
  std::vector<double> speed;
};

struct ExperimentConfig {
  std::string phy = "11g";
  std::optional<double> control_rate_mbps;
  std::optional<double> data_rate_mbps;  // TSPEC R and transmit rate; PHY data rate when unset

  std::string workload = "jp1-low";
  std::optional<std::string> trace_file;
  int stations = 12;
  std::size_t synth_frames = 90000;
  std::uint64_t trace_seed = 1;
  std::uint64_t offset_seed = 7;

  std::string scheduler = "AMTXOP";
  double per = 0.0;
  std::uint64_t seed = 1;
  double sim_time_s = 500.0;
  double warmup_s = 20.0;
  double beacon_interval_ms = 120.0;
  double t_cp_ms = 0.0;
  bool admission_control = true;
  std::int64_t qs_quantum = 1;

  std::optional<MobilitySettings> mobility;
  SweepAxes sweep;

  std::optional<std::string> csv_path;
  std::optional<std::string> events_path;
  std::optional<std::string> analytic_csv_path;
  unsigned workers = 0;  // 0: hardware concurrency
};

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten(*it, key, out);
    else
      out[key] = *it;
  }
}

template <typename T>
T take(const std::map<std::string, nlohmann::json>& kv, const std::string& key, const T& fallback) {
  auto it = kv.find(key);
  if (it == kv.end() || it->second.is_null()) return fallback;
  try {
    return it->second.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> take_opt(const std::map<std::string, nlohmann::json>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end() || it->second.is_null()) return std::nullopt;
  return take<T>(kv, key, T{});
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "phy.standard",          "phy.control_rate_mbps",     "phy.data_rate_mbps",
      "traffic.workload",      "traffic.trace_file",        "traffic.stations",
      "traffic.synth_frames",  "traffic.trace_seed",        "traffic.offset_seed",
      "sim.scheduler",         "sim.per",                   "sim.seed",
      "sim.sim_time_s",        "sim.warmup_s",              "sim.beacon_interval_ms",
      "sim.t_cp_ms",           "sim.admission_control",     "sim.qs_quantum",
      "mobility.speed_mps",    "mobility.start_distance_ft", "mobility.min_distance_ft",
      "mobility.max_distance_ft", "mobility.heading",        "mobility.update_interval_ms",
      "mobility.tiers",        "sweep.stations",            "sweep.per",
      "sweep.scheduler",       "sweep.phy",                 "sweep.speed",
      "output.csv",            "output.events",             "output.analytic_csv",
      "output.workers",        "name",                      "description"};
  return keys;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::map<std::string, nlohmann::json> kv;
  detail::flatten(j, "", kv);
  for (const auto& [key, _] : kv)
    if (!detail::known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");

  using detail::take;
  using detail::take_opt;
  ExperimentConfig c;
  c.phy = take<std::string>(kv, "phy.standard", c.phy);
  c.control_rate_mbps = take_opt<double>(kv, "phy.control_rate_mbps");
  c.data_rate_mbps = take_opt<double>(kv, "phy.data_rate_mbps");
  c.workload = take<std::string>(kv, "traffic.workload", c.workload);
  c.trace_file = take_opt<std::string>(kv, "traffic.trace_file");
  c.stations = take<int>(kv, "traffic.stations", c.stations);
  c.synth_frames = take<std::size_t>(kv, "traffic.synth_frames", c.synth_frames);
  c.trace_seed = take<std::uint64_t>(kv, "traffic.trace_seed", c.trace_seed);
  c.offset_seed = take<std::uint64_t>(kv, "traffic.offset_seed", c.offset_seed);
  c.scheduler = take<std::string>(kv, "sim.scheduler", c.scheduler);
  c.per = take<double>(kv, "sim.per", c.per);
  c.seed = take<std::uint64_t>(kv, "sim.seed", c.seed);
  c.sim_time_s = take<double>(kv, "sim.sim_time_s", c.sim_time_s);
  c.warmup_s = take<double>(kv, "sim.warmup_s", c.warmup_s);
  c.beacon_interval_ms = take<double>(kv, "sim.beacon_interval_ms", c.beacon_interval_ms);
  c.t_cp_ms = take<double>(kv, "sim.t_cp_ms", c.t_cp_ms);
  c.admission_control = take<bool>(kv, "sim.admission_control", c.admission_control);
  c.qs_quantum = take<std::int64_t>(kv, "sim.qs_quantum", c.qs_quantum);

  const bool any_mobility = std::any_of(kv.begin(), kv.end(), [](const auto& p) { return p.first.rfind("mobility.", 0) == 0; });
  if (any_mobility) {
    MobilitySettings m;
    m.speed_mps = take<double>(kv, "mobility.speed_mps", m.speed_mps);
    m.start_distance_ft = take<double>(kv, "mobility.start_distance_ft", m.start_distance_ft);
    m.min_distance_ft = take<double>(kv, "mobility.min_distance_ft", m.min_distance_ft);
    m.max_distance_ft = take_opt<double>(kv, "mobility.max_distance_ft");
    m.update_interval_ms = take<double>(kv, "mobility.update_interval_ms", m.update_interval_ms);
    const auto heading = take<std::string>(kv, "mobility.heading", "inbound");
    if (heading == "inbound")
      m.heading = Heading::Inbound;
    else if (heading == "outbound")
      m.heading = Heading::Outbound;
    else
      throw ConfigError("config key 'mobility.heading' must be inbound or outbound");
    if (auto tiers = take_opt<std::vector<std::vector<double>>>(kv, "mobility.tiers")) {
      m.tiers.clear();
      for (const auto& t : *tiers) {
        if (t.size() != 2) throw ConfigError("config key 'mobility.tiers' needs [max_ft, mbps] pairs");
        m.tiers.push_back(RateTier{t[0], Rate::mbps(t[1])});
      }
    }
    c.mobility = m;
  }

  c.sweep.stations = take<std::vector<int>>(kv, "sweep.stations", {});
  c.sweep.per = take<std::vector<double>>(kv, "sweep.per", {});
  c.sweep.scheduler = take<std::vector<std::string>>(kv, "sweep.scheduler", {});
  c.sweep.phy = take<std::vector<std::string>>(kv, "sweep.phy", {});
  c.sweep.speed = take<std::vector<double>>(kv, "sweep.speed", {});

  c.csv_path = take_opt<std::string>(kv, "output.csv");
  c.events_path = take_opt<std::string>(kv, "output.events");
  c.analytic_csv_path = take_opt<std::string>(kv, "output.analytic_csv");
  c.workers = take<unsigned>(kv, "output.workers", 0U);

  if (c.stations < 1) throw ConfigError("config key 'traffic.stations' must be at least 1");
  for (int n : c.sweep.stations)
    if (n < 1) throw ConfigError("config key 'sweep.stations' entries must be at least 1");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return parse_config(nlohmann::json::parse(in, nullptr, true, true));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// ------------------------------------------------------------------ traces

struct Workload {
  std::shared_ptr<const VideoTrace> trace;
  Tspec tspec;  // min_phy_rate filled in per scenario
  std::string name;
};

/// Synthetic preset traces are generated once per (preset, frames, seed) and shared.
inline std::shared_ptr<const VideoTrace> preset_trace(const std::string& preset, std::size_t frames,
                                                      std::uint64_t seed) {
  static std::mutex mu;
  static std::map<std::tuple<std::string, std::size_t, std::uint64_t>, std::shared_ptr<const VideoTrace>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_tuple(preset, frames, seed);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto trace = std::make_shared<const VideoTrace>(
      synthesize_trace(video_preset(preset), SynthOptions{frames, 40.0, seed}));
  cache.emplace(key, trace);
  return trace;
}

inline Workload load_workload(const ExperimentConfig& c) {
  Workload w;
  if (c.trace_file) {
    std::ifstream in(*c.trace_file);
    if (!in) throw ConfigError("cannot open trace file '" + *c.trace_file + "' (traffic.trace_file)");
    auto trace = std::make_shared<const VideoTrace>(parse_trace(in));
    const auto stats = trace_stats(*trace);
    w.tspec = derive_tspec(stats, trace->max_frame_size(), Micros::from_seconds(0.08), Rate::mbps(11),
                           Micros::from_seconds(0.04));
    w.trace = std::move(trace);
    w.name = *c.trace_file;
  } else {
    const auto& preset = video_preset(c.workload);
    w.trace = preset_trace(c.workload, c.synth_frames, c.trace_seed);
    w.tspec = preset.tspec();
    w.name = c.workload;
  }
  return w;
}

// --------------------------------------------------------------- scenarios

/// One fully specified sweep point.
struct RunPoint {
  std::size_t index = 0;
  std::string phy;
  std::string scheduler;
  int stations = 1;
  double per = 0.0;
  std::optional<double> speed;
  std::uint64_t seed = 1;
};

inline std::vector<RunPoint> expand_sweep(const ExperimentConfig& c) {
  auto or_default = [](auto axis, auto fallback) {
    if (axis.empty()) axis.push_back(fallback);
    return axis;
  };
  const auto phys = or_default(c.sweep.phy, c.phy);
  const auto scheds = or_default(c.sweep.scheduler, c.scheduler);
  const auto counts = or_default(c.sweep.stations, c.stations);
  const auto pers = or_default(c.sweep.per, c.per);
  std::vector<std::optional<double>> speeds;
  for (double s : c.sweep.speed) speeds.emplace_back(s);
  if (speeds.empty()) speeds.push_back(std::nullopt);

  std::vector<RunPoint> points;
  for (const auto& phy : phys)
    for (const auto& sched : scheds)
      for (int n : counts)
        for (double per : pers)
          for (const auto& speed : speeds) {
            RunPoint p;
            p.index = points.size();
            p.phy = phy;
            p.scheduler = sched;
            p.stations = n;
            p.per = per;
            p.speed = speed;
            p.seed = c.seed + p.index;
            points.push_back(p);
          }
  return points;
}

/// Builds the scenario for one sweep point. Trace start offsets depend only on
/// the offset seed and the AID, so every point of a sweep sees the same
/// traffic and only the channel draws follow the point's seed.
inline Scenario make_scenario(const ExperimentConfig& c, const Workload& w, const RunPoint& p) {
  Scenario sc;
  sc.scheduler = scheduler_from_string(p.scheduler);
  sc.phy = profile_by_name(p.phy);
  if (c.control_rate_mbps) sc.control_rate = Rate::mbps(*c.control_rate_mbps);
  sc.per = p.per;
  sc.seed = p.seed;
  sc.sim_time = Micros::from_seconds(c.sim_time_s);
  sc.warmup = Micros::from_seconds(c.warmup_s);
  sc.beacon_interval = Micros::from_ms(c.beacon_interval_ms);
  sc.t_cp = Micros::from_ms(c.t_cp_ms);
  sc.admission_control = c.admission_control;
  sc.qs_quantum = c.qs_quantum;
  sc.record_events = c.events_path.has_value();

  std::optional<MobilitySettings> mob = c.mobility;
  if (p.speed) {
    if (!mob) mob = MobilitySettings{};
    mob->speed_mps = *p.speed;
  }
  if (mob) {
    MobilityConfig mc;
    mc.speed_mps = mob->speed_mps;
    mc.tiers = mob->tiers;
    mc.update_interval = Micros::from_ms(mob->update_interval_ms);
    sc.mobility = mc;
  }

  const Rate rate = c.data_rate_mbps ? Rate::mbps(*c.data_rate_mbps) : sc.phy.data_rate;
  for (int i = 0; i < p.stations; ++i) {
    StationConfig st;
    st.aid = i + 1;
    st.trace = w.trace;
    st.tspec = w.tspec;
    st.tspec.min_phy_rate = rate;
    st.start_offset = static_cast<std::size_t>(splitmix64(c.offset_seed ^ (0x5157ULL << 32) ^ static_cast<std::uint64_t>(st.aid)) %
                                               w.trace->size());
    if (mob) {
      st.distance_ft = mob->start_distance_ft;
      st.min_distance_ft = mob->min_distance_ft;
      st.max_distance_ft = mob->max_distance_ft;
      st.heading = mob->heading;
    }
    sc.stations.push_back(std::move(st));
  }
  return sc;
}

// ---------------------------------------------------------------- running

/// Runs `n` jobs on up to `workers` threads; results keep job order.
template <typename Job>
auto run_parallel(std::size_t n, unsigned workers, Job job) -> std::vector<decltype(job(std::size_t{}))> {
  using R = decltype(job(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(job(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

struct ExperimentRow {
  RunPoint point;
  std::string workload;
  MetricsReport report;
};

inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& c, std::vector<SimEvent>* first_events = nullptr) {
  const Workload w = load_workload(c);
  const auto points = expand_sweep(c);
  std::vector<SimEvent> events;
  auto rows = run_parallel(points.size(), c.workers, [&](std::size_t i) {
    auto result = run_scenario(make_scenario(c, w, points[i]));
    if (i == 0 && first_events) events = std::move(result.events);
    return ExperimentRow{points[i], w.name, std::move(result.report)};
  });
  if (first_events) *first_events = std::move(events);
  return rows;
}

// -------------------------------------------------------------------- CSV

namespace detail {
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); }
}  // namespace detail

inline constexpr const char* kCsvHeader =
    "scheduler,phy,n_offered,n_admitted,per,speed_mps,mean_delay_ms,throughput_bps,aggregate_txop_s,"
    "util_improvement,seed,workload,throughput_Bps,generated,delivered,lost,queued,null_frames,caps,cap_overruns,"
    "si_ms";

inline std::string to_csv(const std::vector<ExperimentRow>& rows) {
  using detail::num;
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& row : rows) {
    const auto& r = row.report;
    os << r.scheduler << ',' << r.phy << ',' << r.offered << ',' << r.admitted << ',' << num(r.per) << ','
       << num(r.speed_mps) << ',' << num(r.mean_delay_ms) << ',' << num(r.throughput_bps) << ','
       << num(r.aggregate_txop_s) << ',' << num(r.util_improvement) << ',' << r.seed << ',' << row.workload << ','
       << num(r.throughput_Bps()) << ',' << r.generated << ',' << r.delivered << ',' << r.lost << ',' << r.queued
       << ',' << r.null_frames << ',' << r.caps << ',' << r.cap_overruns << ',' << num(r.si_ms) << '\n';
  }
  return os.str();
}

struct Table2Row {
  int n = 0;
  Micros single_total;
  Micros multipoll;
  double gain = 0.0;
};

inline std::vector<Table2Row> table2_rows(const PhyProfile& profile, Rate control_rate, int n_max) {
  if (n_max < 1) throw InvalidArgument("n_max must be at least 1");
  std::vector<Table2Row> rows;
  const Micros single = airtime_control(frame::SinglePoll{}, profile, control_rate);
  for (int n = 1; n <= n_max; ++n)
    rows.push_back(Table2Row{n, single * n, airtime_multipoll(n, profile, control_rate),
                             poll_gain_ratio(n, profile, control_rate)});
  return rows;
}

/// Single-poll versus multi-poll airtime for N = 1..n_max.
inline std::string emit_table2(const PhyProfile& profile, Rate control_rate, int n_max) {
  std::ostringstream os;
  os << "n,single_polls_us,multipoll_us,gain\n";
  char buf[96];
  for (const auto& r : table2_rows(profile, control_rate, n_max)) {
    std::snprintf(buf, sizeof buf, "%d,%.2f,%.2f,%.4f\n", r.n, r.single_total.us(), r.multipoll.us(), r.gain);
    os << buf;
  }
  return os.str();
}

// ------------------------------------------------------ analytic comparison

struct AnalyticRow {
  std::string scheduler;
  int n = 0;
  double model_ms = 0.0;          // aggregate / N
  double model_literal_ms = 0.0;  // literal aggregate reading / N
  double sim_ms = 0.0;
  double rel_err = 0.0;
};

/// Model against simulation for every scheduler and N in the sweep (or
/// 1..traffic.stations). The model spans the simulated post-warmup SIs.
inline std::vector<AnalyticRow> analytic_comparison(ExperimentConfig c) {
  c.per = 0.0;
  c.sweep.per.clear();
  c.sweep.speed.clear();
  c.mobility.reset();
  c.admission_control = false;
  if (c.sweep.stations.empty())
    for (int n = 1; n <= c.stations; ++n) c.sweep.stations.push_back(n);
  if (c.sweep.scheduler.empty()) c.sweep.scheduler = {"HCCA", "ATXOP", "AMTXOP"};
  c.sweep.phy.clear();

  const Workload w = load_workload(c);
  const auto points = expand_sweep(c);
  return run_parallel(points.size(), c.workers, [&](std::size_t i) {
    const auto& p = points[i];
    const Scenario sc = make_scenario(c, w, p);
    const auto sim = run_scenario(sc);
    const auto si = Micros::from_ms(sim.report.si_ms);
    const std::int64_t m = floor_div(sc.sim_time - sc.warmup, si);
    const auto inputs = analytic_inputs_for(sc, sc.stations.size(), m);
    const auto model = aggregate_delay(sc.scheduler, inputs);
    AnalyticRow row;
    row.scheduler = p.scheduler;
    row.n = p.stations;
    row.model_ms = model.per_station_ms;
    row.model_literal_ms = model.literal_ms / static_cast<double>(p.stations);
    row.sim_ms = sim.report.mean_delay_ms.value_or(0.0);
    row.rel_err = row.sim_ms > 0.0 ? std::abs(row.model_ms - row.sim_ms) / row.sim_ms : 0.0;
    return row;
  });
}

inline std::string analytic_csv(const std::vector<AnalyticRow>& rows) {
  using detail::num;
  std::ostringstream os;
  os << "scheduler,n,model_ms,model_literal_ms,sim_ms,rel_err\n";
  for (const auto& r : rows)
    os << r.scheduler << ',' << r.n << ',' << num(r.model_ms) << ',' << num(r.model_literal_ms) << ','
       << num(r.sim_ms) << ',' << num(r.rel_err) << '\n';
  return os.str();
}

}  // namespace hcca
