#pragma once

// Reference HCCA scheduler: service interval selection, TXOP sizing from
// TSPEC means, and the admission control unit.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hcca/error.hpp"
#include "hcca/phy_timing.hpp"
#include "hcca/time.hpp"
#include "hcca/traffic_trace.hpp"

namespace hcca {

using StationId = int;

enum class GrantBasis { ReferenceMean, PiggybackSize };

struct TxopGrant {
  StationId aid = 0;
  Micros duration;
  GrantBasis basis = GrantBasis::ReferenceMean;
};

inline Micros min_msi(std::span<const Micros> msis) {
  if (msis.empty()) throw InvalidArgument("min_msi of an empty list");
  for (const auto& m : msis)
    if (m <= 0) throw InvalidArgument("service intervals must be positive");
  return *std::min_element(msis.begin(), msis.end());
}

/// Beacon interval divided by the smallest integer that brings it to at most `msi_min`.
inline Micros compute_si(Micros beacon_interval, Micros msi_min) {
  if (beacon_interval <= 0 || msi_min <= 0) throw InvalidArgument("beacon interval and MSI must be positive");
  if (msi_min > beacon_interval)
    throw ConfigError("minimum MSI exceeds the beacon interval; no submultiple satisfies it");
  return beacon_interval / ceil_div(beacon_interval, msi_min);
}

/// MSDUs arriving in one SI at the mean rate: ceil(si * rho / (8 L)), at least 1.
inline std::int64_t msdu_count(Micros si, Rate rho, std::int64_t mean_msdu_bytes) {
  if (si <= 0 || !rho.positive() || mean_msdu_bytes <= 0)
    throw InvalidArgument("msdu_count needs positive SI, rate and MSDU size");
  // si[us] * rho[bit/s] / 1e6 bits, over 8 L bits per MSDU.
  const __int128 n = static_cast<__int128>(si.num()) * rho.bps;
  const __int128 d = static_cast<__int128>(si.den()) * 1'000'000 * 8 * mean_msdu_bytes;
  __int128 q = n / d;
  if (q * d < n) ++q;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(q));
}

/// Per-grant overhead O: one poll and one ACK at the control rate, the data
/// frame's PHY and MAC headers, three SIFS and the propagation delay.
inline Micros reference_overhead(const PhyProfile& profile, Rate data_rate, Rate control_rate) {
  return airtime_control(frame::SinglePoll{}, profile, control_rate) +
         airtime_control(frame::Ack{}, profile, control_rate) + airtime_data(0, profile, data_rate) +
         profile.sifs * 3 + profile.prop_delay;
}

/// Payload airtime of the reference grant: max(N L, M) bits at the TSPEC minimum rate.
inline Micros reference_payload_time(const Tspec& tspec, Micros si) {
  const std::int64_t n = msdu_count(si, tspec.mean_rate, tspec.mean_msdu);
  const std::int64_t bytes = std::max(n * tspec.mean_msdu, tspec.max_msdu);
  return Micros::airtime(8 * bytes, tspec.min_phy_rate);
}

inline TxopGrant txop_reference(const Tspec& tspec, Micros si, Micros overhead, StationId aid = 0) {
  if (overhead < 0) throw InvalidArgument("overhead must be non-negative");
  return TxopGrant{aid, reference_payload_time(tspec, si) + overhead, GrantBasis::ReferenceMean};
}

struct PollingEntry {
  StationId aid = 0;
  Tspec tspec;
  Micros overhead;  // O for this station's PHY rate
};

/// Admitted streams in admission order, which is also the polling order.
class PollingList {
 public:
  explicit PollingList(Micros beacon_interval = Micros::from_seconds(0.12)) : beacon_interval_(beacon_interval) {
    if (beacon_interval_ <= 0) throw ConfigError("beacon interval must be positive");
  }

  const std::vector<PollingEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  Micros beacon_interval() const { return beacon_interval_; }
  /// Current SI; the beacon interval when nothing is admitted.
  Micros si() const { return si_.value_or(beacon_interval_); }

  const PollingEntry* find(StationId aid) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.aid == aid; });
    return it == entries_.end() ? nullptr : &*it;
  }
  bool contains(StationId aid) const { return find(aid) != nullptr; }

  /// SI that would result from admitting `extra` on top of the current set.
  Micros si_with(const std::optional<Tspec>& extra = std::nullopt) const {
    std::vector<Micros> msis;
    for (const auto& e : entries_) msis.push_back(e.tspec.max_service_interval);
    if (extra) msis.push_back(extra->max_service_interval);
    if (msis.empty()) return beacon_interval_;
    return compute_si(beacon_interval_, min_msi(msis));
  }

  TxopGrant reference_grant(const PollingEntry& e) const { return txop_reference(e.tspec, si(), e.overhead, e.aid); }

  /// Appends without admission control.
  void force_add(const PollingEntry& e) {
    if (contains(e.aid)) throw InvalidArgument("station " + std::to_string(e.aid) + " already admitted");
    e.tspec.validate();
    const Micros si = si_with(e.tspec);
    entries_.push_back(e);
    si_ = si;
  }

  void remove(StationId aid) {
    std::erase_if(entries_, [&](const auto& e) { return e.aid == aid; });
    si_ = entries_.empty() ? std::nullopt : std::optional<Micros>(si_with());
  }

  /// Mobility changes a station's rate and therefore its overhead and TSPEC rate.
  void update_rate(StationId aid, Rate rate, Micros overhead) {
    for (auto& e : entries_)
      if (e.aid == aid) {
        e.tspec.min_phy_rate = rate;
        e.overhead = overhead;
      }
  }

 private:
  Micros beacon_interval_;
  std::optional<Micros> si_;
  std::vector<PollingEntry> entries_;
};

struct AdmissionDecision {
  bool accepted = false;
  Micros si;                // SI evaluated with the candidate included
  Micros candidate_txop;    // candidate's reference TXOP at that SI
  Micros total_txop;        // sum over admitted streams plus the candidate
  Micros budget;            // SI * (beacon - t_cp) / beacon
};

/// Admission control: the new SI must keep every reference TXOP, candidate
/// included, within the share of the SI left after the contention period.
/// On accept the candidate is appended; on reject the list is unchanged.
inline AdmissionDecision admit(PollingList& list, const PollingEntry& candidate, Micros t_cp) {
  if (t_cp < 0) throw InvalidArgument("t_cp must be non-negative");
  candidate.tspec.validate();
  if (list.contains(candidate.aid))
    throw InvalidArgument("station " + std::to_string(candidate.aid) + " already admitted");
  const Micros beacon = list.beacon_interval();

  AdmissionDecision d;
  d.si = list.si_with(candidate.tspec);
  d.candidate_txop = txop_reference(candidate.tspec, d.si, candidate.overhead).duration;
  d.total_txop = d.candidate_txop;
  for (const auto& e : list.entries()) d.total_txop += txop_reference(e.tspec, d.si, e.overhead).duration;
  d.budget = t_cp >= beacon ? Micros(0) : scale(d.si, beacon - t_cp, beacon);
  d.accepted = t_cp < beacon && d.total_txop <= d.budget;
  if (d.accepted) list.force_add(candidate);
  return d;
}

}  // namespace hcca
