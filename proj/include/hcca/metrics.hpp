#pragma once

// Evaluation metrics: end-to-end delay, aggregate throughput, aggregate TXOP
// and channel-utilization improvement over the reference scheduler.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcca/error.hpp"
#include "hcca/hcca_core.hpp"
#include "hcca/time.hpp"

namespace hcca {

struct PacketRecord {
  StationId station = 0;
  Micros gen_time;  // G_i
  Micros rx_time;   // R_i, end of the data frame at the access point
  std::int64_t size = 0;
};

struct GrantRecord {
  std::int64_t cap = 0;  // CAP index within the run
  Micros time;           // CAP start
  StationId aid = 0;
  Micros duration;
  GrantBasis basis = GrantBasis::ReferenceMean;
  Micros reference;  // reference grant the same station would get in this SI
};

/// Mean of R_i - G_i in milliseconds; nullopt when nothing was delivered.
inline std::optional<double> e2e_delay(std::span<const PacketRecord> records) {
  if (records.empty()) return std::nullopt;
  // Sum in exact time first so the result is independent of record order.
  Micros total = 0;
  for (const auto& r : records) {
    if (r.rx_time < r.gen_time) throw InvalidArgument("packet received before it was generated");
    total += r.rx_time - r.gen_time;
  }
  return total.ms() / static_cast<double>(records.size());
}

inline std::int64_t delivered_bytes(std::span<const PacketRecord> records) {
  std::int64_t bytes = 0;
  for (const auto& r : records) bytes += r.size;
  return bytes;
}

/// Delivered payload in bit/s over `duration`.
inline double aggregate_throughput(std::span<const PacketRecord> records, Micros duration) {
  if (duration <= 0) throw InvalidArgument("throughput window must be positive");
  return static_cast<double>(delivered_bytes(records)) * 8.0 / duration.seconds();
}

/// Total granted TXOP time, in seconds.
inline double aggregate_txop(std::span<const GrantRecord> grants) {
  Micros total = 0;
  for (const auto& g : grants) total += g.duration;
  return total.seconds();
}

/// (b_hcca - b_proposed) / b_hcca, where b is a TXOP-to-SI proportion.
/// Negative values mean the proposal allocated more and are not clamped.
inline std::optional<double> utilization_improvement(double b_hcca, double b_proposed) {
  if (b_hcca < 0.0 || b_hcca > 1.0 || b_proposed < 0.0 || b_proposed > 1.0)
    throw InvalidArgument("TXOP proportions must lie in [0, 1]");
  if (b_hcca == 0.0) return std::nullopt;
  return (b_hcca - b_proposed) / b_hcca;
}

/// Same ratio averaged uniformly over every (station, SI) grant in the log.
/// The SI cancels, so grants are compared with their reference directly.
inline std::optional<double> utilization_improvement(std::span<const GrantRecord> grants) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : grants) {
    if (g.reference <= 0) continue;
    sum += (g.reference - g.duration) / g.reference;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

struct FlowMetrics {
  StationId aid = 0;
  std::size_t delivered = 0;
  std::optional<double> mean_delay_ms;
  double throughput_bps = 0.0;
};

inline std::vector<FlowMetrics> per_flow(std::span<const PacketRecord> records, Micros duration) {
  std::map<StationId, std::vector<PacketRecord>> by_flow;
  for (const auto& r : records) by_flow[r.station].push_back(r);
  std::vector<FlowMetrics> out;
  for (const auto& [aid, recs] : by_flow) {
    FlowMetrics f;
    f.aid = aid;
    f.delivered = recs.size();
    f.mean_delay_ms = e2e_delay(recs);
    f.throughput_bps = aggregate_throughput(recs, duration);
    out.push_back(f);
  }
  return out;
}

/// One experiment row.
struct MetricsReport {
  std::string scheduler;
  std::string phy;
  int offered = 0;
  int admitted = 0;
  double per = 0.0;
  double speed_mps = 0.0;
  std::uint64_t seed = 0;

  std::optional<double> mean_delay_ms;
  double throughput_bps = 0.0;
  double aggregate_txop_s = 0.0;
  std::optional<double> util_improvement;

  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t queued = 0;
  std::uint64_t null_frames = 0;
  std::uint64_t caps = 0;
  std::uint64_t cap_overruns = 0;  // CAPs that spilled past the next SI boundary
  std::uint64_t tier_changes = 0;
  std::size_t protocol_errors = 0;
  double si_ms = 0.0;
  std::vector<FlowMetrics> flows;

  double throughput_Bps() const { return throughput_bps / 8.0; }
};

}  // namespace hcca
