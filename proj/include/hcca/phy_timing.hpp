#pragma once

// Over-the-air durations of data, ACK, single-poll and multi-poll frames.
//
// A frame is a PHY preamble and PLCP header sent at the PLCP rate, followed
// by the MAC header (and payload, for data) at the frame's MAC rate.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "hcca/error.hpp"
#include "hcca/time.hpp"

namespace hcca {

enum class PhyStandard { Dot11b, Dot11g };

inline std::string to_string(PhyStandard s) { return s == PhyStandard::Dot11b ? "11b" : "11g"; }

struct PhyProfile {
  PhyStandard name = PhyStandard::Dot11g;
  int preamble_bytes = 12;
  int plcp_header_bytes = 3;
  Rate plcp_rate = Rate::mbps(1);
  Rate data_rate = Rate::mbps(54);
  Rate basic_rate = Rate::mbps(1);
  int mac_header_bytes = 36;
  Micros sifs = 10;
  Micros pifs = 30;
  Micros slot = 9;
  Micros prop_delay = 2;

  /// Throws InvalidProfile when a field is out of range.
  void validate() const {
    if (!plcp_rate.positive() || !data_rate.positive() || !basic_rate.positive())
      throw InvalidProfile("all PHY rates must be positive");
    if (preamble_bytes <= 0 || plcp_header_bytes <= 0 || mac_header_bytes <= 0)
      throw InvalidProfile("preamble, PLCP header and MAC header sizes must be positive");
    if (sifs < 0 || pifs < 0 || slot < 0 || prop_delay < 0)
      throw InvalidProfile("interframe spaces and propagation delay must be non-negative");
  }

  /// Preamble plus PLCP header, both at the PLCP rate.
  Micros phy_header_airtime() const {
    return Micros::airtime(8LL * (preamble_bytes + plcp_header_bytes), plcp_rate);
  }
};

/// 802.11g row of the simulation parameter table.
inline PhyProfile profile_11g() { return PhyProfile{}; }

/// 802.11b: 20 us slot, 18 B preamble, 6 B PLCP header, 11 Mb/s data rate.
inline PhyProfile profile_11b() {
  PhyProfile p;
  p.name = PhyStandard::Dot11b;
  p.preamble_bytes = 18;
  p.plcp_header_bytes = 6;
  p.data_rate = Rate::mbps(11);
  p.slot = 20;
  p.pifs = 30;
  return p;
}

inline PhyProfile profile_by_name(const std::string& name) {
  if (name == "11g" || name == "802.11g") return profile_11g();
  if (name == "11b" || name == "802.11b") return profile_11b();
  throw InvalidProfile("unknown PHY profile '" + name + "'");
}

namespace frame {
struct Data {
  std::int64_t payload_bytes = 0;
};
struct Ack {};
struct SinglePoll {};
struct MultiPoll {
  int record_count = 1;
};
}  // namespace frame

using FrameKind = std::variant<frame::Data, frame::Ack, frame::SinglePoll, frame::MultiPoll>;

/// Multi-poll layout: basic MAC header, fixed body, one record per polled station.
inline constexpr int kMultiPollMacHeaderBytes = 24;
inline constexpr int kMultiPollFixedBodyBytes = 13;
inline constexpr int kMultiPollRecordBytes = 4;

/// Data frame: PHY header at the PLCP rate, MAC header and payload at the
/// profile data rate or `rate_override` when given.
inline Micros airtime_data(std::int64_t payload_bytes, const PhyProfile& profile,
                           std::optional<Rate> rate_override = std::nullopt) {
  if (payload_bytes < 0) throw InvalidArgument("payload size must be non-negative");
  const Rate rate = rate_override.value_or(profile.data_rate);
  if (!rate.positive()) throw InvalidProfile("data rate must be positive");
  return profile.phy_header_airtime() +
         Micros::airtime(8 * (profile.mac_header_bytes + payload_bytes), rate);
}

/// ACK or single CF-Poll; the two have identical length.
inline Micros airtime_control(const FrameKind& kind, const PhyProfile& profile, Rate control_rate) {
  if (!std::holds_alternative<frame::Ack>(kind) && !std::holds_alternative<frame::SinglePoll>(kind))
    throw InvalidArgument("airtime_control takes Ack or SinglePoll");
  if (!control_rate.positive()) throw InvalidProfile("control rate must be positive");
  return profile.phy_header_airtime() + Micros::airtime(8LL * profile.mac_header_bytes, control_rate);
}

inline Micros airtime_multipoll(int n_stations, const PhyProfile& profile, Rate control_rate) {
  if (n_stations < 1) throw InvalidArgument("multi-poll needs at least one record");
  if (!control_rate.positive()) throw InvalidProfile("control rate must be positive");
  const std::int64_t bytes =
      kMultiPollMacHeaderBytes + kMultiPollFixedBodyBytes + std::int64_t{kMultiPollRecordBytes} * n_stations;
  return profile.phy_header_airtime() + Micros::airtime(8 * bytes, control_rate);
}

/// Dispatches on the frame kind. Data frames use `data_rate`, control frames `control_rate`.
inline Micros airtime(const FrameKind& kind, const PhyProfile& profile, Rate data_rate, Rate control_rate) {
  return std::visit(
      [&](const auto& k) -> Micros {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, frame::Data>) {
          return airtime_data(k.payload_bytes, profile, data_rate);
        } else if constexpr (std::is_same_v<K, frame::MultiPoll>) {
          return airtime_multipoll(k.record_count, profile, control_rate);
        } else {
          return airtime_control(k, profile, control_rate);
        }
      },
      kind);
}

/// Fraction of polling airtime saved by one multi-poll over n single polls, clamped at 0.
inline double poll_gain_ratio(int n_stations, const PhyProfile& profile, Rate control_rate) {
  const Micros multi = airtime_multipoll(n_stations, profile, control_rate);
  const Micros singles = airtime_control(frame::SinglePoll{}, profile, control_rate) * n_stations;
  const double raw = 1.0 - multi / singles;
  return raw < 0.0 ? 0.0 : raw;
}

}  // namespace hcca
