#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hcca/experiment.hpp"

using namespace hcca;
using nlohmann::json;

namespace {

ExperimentConfig small(json extra = json::object()) {
  json j = {{"traffic", {{"workload", "jp1-low"}, {"stations", 3}, {"synth_frames", 3000}}},
            {"sim", {{"sim_time_s", 4.0}, {"warmup_s", 1.0}}},
            {"output", {{"workers", 2}}}};
  j.merge_patch(extra);
  return parse_config(j);
}

}  // namespace

TEST(Table2, Rows) {
  const auto csv = emit_table2(profile_11g(), Rate::mbps(2), 9);
  EXPECT_NE(csv.find("1,264.00,284.00,0.0000\n"), std::string::npos);
  EXPECT_NE(csv.find("2,528.00,300.00,0.4318\n"), std::string::npos);
  EXPECT_NE(csv.find("9,2376.00,412.00,0.8266\n"), std::string::npos);
  EXPECT_EQ(emit_table2(profile_11g(), Rate::mbps(2), 1), "n,single_polls_us,multipoll_us,gain\n1,264.00,284.00,0.0000\n");
  EXPECT_THROW(table2_rows(profile_11g(), Rate::mbps(2), 0), InvalidArgument);
  const auto rows = table2_rows(profile_11g(), Rate::mbps(2), 20);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].gain, rows[i - 1].gain);
  EXPECT_LT(rows.back().gain, 1.0 - 16.0 / 264.0);
}

TEST(Config, Defaults) {
  const auto c = parse_config(json::object());
  EXPECT_EQ(c.phy, "11g");
  EXPECT_EQ(c.stations, 12);
  EXPECT_EQ(c.sim_time_s, 500.0);
  EXPECT_EQ(c.warmup_s, 20.0);
  EXPECT_EQ(c.beacon_interval_ms, 120.0);
  EXPECT_FALSE(c.mobility.has_value());
}

TEST(Config, UnknownKeyNamed) {
  try {
    parse_config(json{{"traffic", {{"statons", 3}}}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("traffic.statons"), std::string::npos);
  }
  EXPECT_THROW(parse_config(json{{"sim", {{"per", "high"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json::array()), ConfigError);
  EXPECT_THROW(parse_config(json{{"traffic", {{"stations", 0}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"mobility", {{"heading", "sideways"}}}}), ConfigError);
}

TEST(Config, MobilityTiersAndFile) {
  const auto c = parse_config(json{{"mobility", {{"speed_mps", 5}, {"tiers", {{100, 54}, {300, 6}}}}}});
  ASSERT_TRUE(c.mobility);
  EXPECT_EQ(c.mobility->speed_mps, 5.0);
  ASSERT_EQ(c.mobility->tiers.size(), 2u);
  EXPECT_EQ(c.mobility->tiers[1].rate, Rate::mbps(6));

  const auto path = std::filesystem::temp_directory_path() / "hcca_cfg_test.json";
  std::ofstream(path) << "{\n  // comment\n  \"sim\": {\"scheduler\": \"HCCA\"}\n}\n";
  EXPECT_EQ(load_config(path.string()).scheduler, "HCCA");
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), ConfigError);
}

TEST(Sweep, Counts) {
  auto c = small(json{{"sweep", {{"stations", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}},
                                 {"scheduler", {"HCCA", "ATXOP", "AMTXOP"}}}}});
  EXPECT_EQ(expand_sweep(c).size(), 36u);
  c = small(json{{"sweep", {{"per", {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09}},
                            {"scheduler", {"HCCA", "ATXOP", "AMTXOP"}}}}});
  const auto pts = expand_sweep(c);
  EXPECT_EQ(pts.size(), 27u);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(pts[i].index, i);
  EXPECT_EQ(expand_sweep(small()).size(), 1u);
}

TEST(Sweep, SeedsAndOffsets) {
  const auto c = small(json{{"sim", {{"seed", 100}}}, {"sweep", {{"per", {0.01, 0.02}}}}});
  const auto w = load_workload(c);
  const auto pts = expand_sweep(c);
  const auto a = make_scenario(c, w, pts[0]);
  const auto b = make_scenario(c, w, pts[1]);
  EXPECT_EQ(a.seed, 100u);
  EXPECT_EQ(b.seed, 101u);
  // Traffic is paired across sweep points: same stations, same offsets.
  ASSERT_EQ(a.stations.size(), b.stations.size());
  for (std::size_t i = 0; i < a.stations.size(); ++i) EXPECT_EQ(a.stations[i].start_offset, b.stations[i].start_offset);
  EXPECT_EQ(a.stations[0].tspec.min_phy_rate, Rate::mbps(54));
  EXPECT_EQ(make_scenario(small(json{{"phy", {{"data_rate_mbps", 11}}}}), w, pts[0]).stations[0].tspec.min_phy_rate,
            Rate::mbps(11));
}

TEST(RunExperiment, SingleRowAndStableCsv) {
  const auto c = small();
  const auto rows = run_experiment(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].report.scheduler, "AMTXOP");
  EXPECT_EQ(rows[0].report.admitted, 3);
  const auto csv = to_csv(rows);
  EXPECT_EQ(csv.rfind(std::string(kCsvHeader) + "\n", 0), 0u);
  EXPECT_EQ(csv, to_csv(run_experiment(c)));
}

TEST(RunExperiment, ParallelMatchesSerial) {
  auto c = small(json{{"sweep", {{"stations", {1, 2, 3}}, {"scheduler", {"HCCA", "AMTXOP"}}, {"per", {0.0, 0.05}}}}});
  c.workers = 1;
  const auto serial = to_csv(run_experiment(c));
  c.workers = 4;
  EXPECT_EQ(to_csv(run_experiment(c)), serial);
}

TEST(RunExperiment, TraceFileWorkload) {
  const auto path = std::filesystem::temp_directory_path() / "hcca_trace_test.txt";
  std::ofstream(path) << serialize_trace(synthesize_trace(video_preset("f1-low"), SynthOptions{500, 40.0, 2}));
  const auto c = small(json{{"traffic", {{"trace_file", path.string()}}}});
  const auto w = load_workload(c);
  EXPECT_EQ(w.trace->size(), 500u);
  EXPECT_EQ(w.tspec.max_msdu, w.trace->max_frame_size());
  const auto rows = run_experiment(c);
  EXPECT_GT(rows[0].report.delivered, 0u);
  std::filesystem::remove(path);
}

TEST(AnalyticComparison, ProducesAllRows) {
  const auto rows = analytic_comparison(small(json{{"traffic", {{"stations", 2}}}}));
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_GT(r.sim_ms, 0.0);
    EXPECT_GT(r.model_ms, 0.0);
    EXPECT_GE(r.rel_err, 0.0);
  }
  EXPECT_EQ(analytic_csv(rows).substr(0, 50), "scheduler,n,model_ms,model_literal_ms,sim_ms,rel_e");
}
