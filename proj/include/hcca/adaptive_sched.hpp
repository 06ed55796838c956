#pragma once

// Adaptive TXOP scheduling from piggybacked next-frame sizes.
//
// ATXOP polls each station individually and sizes its TXOP from the size
// the station reported in its previous uplink frame. AMTXOP grants the same
// adaptive TXOPs but announces all of them in one broadcast multi-poll per
// CAP; station i starts transmitting once the TXOPs of the stations listed
// before it have elapsed.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hcca/error.hpp"
#include "hcca/hcca_core.hpp"
#include "hcca/phy_timing.hpp"
#include "hcca/time.hpp"
#include "hcca/traffic_trace.hpp"

namespace hcca {

/// Piggyback grant: reported bytes at the TSPEC rate plus the overhead.
inline TxopGrant txop_adaptive(std::int64_t reported_size, const Tspec& tspec, Micros overhead, StationId aid = 0) {
  if (reported_size <= 0) throw InvalidArgument("reported size must be positive");
  return TxopGrant{aid, Micros::airtime(8 * reported_size, tspec.min_phy_rate) + overhead,
                   GrantBasis::PiggybackSize};
}

/// Used whenever no size report is available for the station.
inline TxopGrant fallback_grant(const Tspec& tspec, Micros si, Micros overhead, StationId aid = 0) {
  return txop_reference(tspec, si, overhead, aid);
}

/// Queue-size reports held by the access point, one slot per admitted station.
class SizeLedger {
 public:
  struct Entry {
    std::optional<std::int64_t> size;
    bool end_of_stream = false;
  };

  void admit(StationId aid) { entries_.try_emplace(aid); }
  void remove(StationId aid) { entries_.erase(aid); }
  bool admitted(StationId aid) const { return entries_.contains(aid); }

  /// Stores the QS field; nullopt marks the stream's last frame. Returns
  /// false and counts a protocol error for stations that are not admitted.
  bool on_data(StationId aid, std::optional<std::int64_t> qs) {
    auto it = entries_.find(aid);
    if (it == entries_.end()) {
      ++protocol_errors_;
      return false;
    }
    if (qs) {
      it->second.size = *qs;
    } else {
      it->second.size.reset();
      it->second.end_of_stream = true;
    }
    return true;
  }

  std::optional<std::int64_t> size_of(StationId aid) const {
    auto it = entries_.find(aid);
    return it == entries_.end() ? std::nullopt : it->second.size;
  }
  bool end_of_stream(StationId aid) const {
    auto it = entries_.find(aid);
    return it != entries_.end() && it->second.end_of_stream;
  }
  /// Forgets the report once it has been turned into a grant.
  void consume(StationId aid) {
    if (auto it = entries_.find(aid); it != entries_.end()) it->second.size.reset();
  }

  std::size_t protocol_errors() const { return protocol_errors_; }
  const std::map<StationId, Entry>& entries() const { return entries_; }

 private:
  std::map<StationId, Entry> entries_;
  std::size_t protocol_errors_ = 0;
};

inline SizeLedger ap_on_data(SizeLedger ledger, StationId aid, std::optional<std::int64_t> qs_field) {
  ledger.on_data(aid, qs_field);
  return ledger;
}

/// ATXOP grant for one polling-list entry.
inline TxopGrant atxop_grant(const PollingEntry& e, const SizeLedger& ledger, Micros si) {
  if (auto size = ledger.size_of(e.aid); size && *size > 0) return txop_adaptive(*size, e.tspec, e.overhead, e.aid);
  return fallback_grant(e.tspec, si, e.overhead, e.aid);
}

struct PollRecord {
  StationId aid = 0;
  Micros txop;
  GrantBasis basis = GrantBasis::PiggybackSize;
};

struct MultiPollFrame {
  static constexpr int kFixedBodyBytes = kMultiPollFixedBodyBytes;
  static constexpr int kPerRecordBytes = kMultiPollRecordBytes;

  std::vector<PollRecord> records;

  int record_count() const { return static_cast<int>(records.size()); }
  int body_bytes() const { return kFixedBodyBytes + kPerRecordBytes * record_count(); }

  /// Byte image for trace dumps: record count, 12 control bytes, then per
  /// record a little-endian AID and the TXOP in 8 us units (rounded up).
  std::vector<std::uint8_t> encode() const {
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(body_bytes()));
    out.push_back(static_cast<std::uint8_t>(record_count()));
    out.insert(out.end(), 12, 0);
    for (const auto& r : records) {
      const auto units = static_cast<std::uint16_t>(std::min<std::int64_t>(ceil_div(r.txop, Micros(8)), 0xffff));
      out.push_back(static_cast<std::uint8_t>(r.aid & 0xff));
      out.push_back(static_cast<std::uint8_t>((r.aid >> 8) & 0xff));
      out.push_back(static_cast<std::uint8_t>(units & 0xff));
      out.push_back(static_cast<std::uint8_t>(units >> 8));
    }
    return out;
  }
};

/// Airtimes that turn a station's single-poll overhead into its multi-poll one.
/// Zero values leave the polling-list overhead untouched.
struct MultiPollOverhead {
  Micros single_poll;  // removed from each station's O
  Micros multi_poll;   // shared out evenly across the records
};

struct MultiPollPlan {
  MultiPollFrame frame;
  Micros multipoll_airtime;
  Micros cap_duration;  // multi-poll airtime plus every TXOP
};

/// Builds the CAP's multi-poll in polling-list order. Each station's overhead
/// drops its single poll and carries its share of the multi-poll airtime, so
/// the TXOPs of one CAP sum to sum(T' - T_poll) + T_mpoll.
inline MultiPollPlan build_multipoll(std::span<const PollingEntry> entries, const SizeLedger& ledger, Micros si,
                                     const MultiPollOverhead& poll_cost = {}, Micros multipoll_airtime = 0) {
  if (entries.empty()) throw InvalidArgument("cannot build a multi-poll for an empty polling list");
  const auto n = static_cast<std::int64_t>(entries.size());
  MultiPollPlan plan;
  plan.multipoll_airtime = multipoll_airtime;
  plan.cap_duration = multipoll_airtime;
  for (const auto& e : entries) {
    const Micros overhead = e.overhead - poll_cost.single_poll + poll_cost.multi_poll / n;
    TxopGrant g;
    if (auto size = ledger.size_of(e.aid); size && *size > 0)
      g = txop_adaptive(*size, e.tspec, overhead, e.aid);
    else
      g = fallback_grant(e.tspec, si, overhead, e.aid);
    plan.frame.records.push_back(PollRecord{e.aid, g.duration, g.basis});
    plan.cap_duration += g.duration;
  }
  return plan;
}

inline MultiPollPlan build_multipoll(const PollingList& list, const SizeLedger& ledger, Micros si,
                                     const MultiPollOverhead& poll_cost = {}, Micros multipoll_airtime = 0) {
  return build_multipoll(std::span<const PollingEntry>(list.entries()), ledger, si, poll_cost, multipoll_airtime);
}

/// Sum of the TXOPs listed before `my_aid`, or nullopt if the station is not
/// in the frame (it then waits for a single poll).
inline std::optional<Micros> station_backoff(const MultiPollFrame& frame, StationId my_aid) {
  Micros wait = 0;
  for (const auto& r : frame.records) {
    if (r.aid == my_aid) return wait;
    wait += r.txop;
  }
  return std::nullopt;
}

}  // namespace hcca
