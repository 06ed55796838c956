#pragma once

// Closed-form per-SI delay of each scheduler and its aggregate over a run.
//
// Station i's delay in one SI is everything sent before its data frame in
// that CAP plus its own payload. TD_j is a predecessor's full reference
// TXOP; adaptive schedulers give back T_u^j, the part of it station j would
// not have used. The model counts payload time only (no data-frame PHY/MAC
// header), so it sits somewhat below the simulated delay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hcca/error.hpp"
#include "hcca/hcca_core.hpp"
#include "hcca/phy_timing.hpp"
#include "hcca/sim_engine.hpp"
#include "hcca/time.hpp"

namespace hcca {

/// TD = T_L + T_poll + T_ACK + 3 SIFS + D_p, with T_L the bare payload time.
inline Micros td_i(std::int64_t payload_bytes, const PhyProfile& profile, Rate control_rate,
                   std::optional<Rate> data_rate = std::nullopt) {
  if (payload_bytes <= 0) throw InvalidArgument("payload must be positive");
  const Rate r = data_rate.value_or(profile.data_rate);
  return Micros::airtime(8 * payload_bytes, r) + airtime_control(frame::SinglePoll{}, profile, control_rate) +
         airtime_control(frame::Ack{}, profile, control_rate) + profile.sifs * 3 + profile.prop_delay;
}

struct AnalyticInputs {
  PhyProfile profile = profile_11g();
  Micros t_poll;
  Micros t_mpoll;
  Micros t_ack;
  Micros si = Micros::from_seconds(0.04);
  std::vector<Rate> rates;                          // per station
  std::vector<Micros> reference_payload;            // per station, max(N L, M) / R
  std::vector<std::vector<std::int64_t>> payloads;  // [SI k][station i], bytes

  int n_stations() const { return static_cast<int>(rates.size()); }
  std::int64_t m_intervals() const { return static_cast<std::int64_t>(payloads.size()); }

  void validate() const {
    if (rates.empty()) throw InvalidArgument("analytic model needs at least one station");
    if (reference_payload.size() != rates.size()) throw InvalidArgument("one reference payload per station");
    if (payloads.empty()) throw InvalidArgument("analytic model needs at least one SI");
    for (const auto& row : payloads)
      if (row.size() != rates.size()) throw InvalidArgument("every SI needs one payload per station");
  }

  Micros t_l(std::size_t k, std::size_t i) const { return Micros::airtime(8 * payloads[k][i], rates[i]); }

  /// Reference TXOP of station i with payload time only.
  Micros td_ref(std::size_t i) const {
    return reference_payload[i] + t_poll + t_ack + profile.sifs * 3 + profile.prop_delay;
  }

  /// Unused part of the reference TXOP, floored at zero.
  Micros t_u(std::size_t k, std::size_t i) const { return max(Micros(0), reference_payload[i] - t_l(k, i)); }
};

/// D_SI for 1-based station index `i` in SI `k` (0-based).
inline Micros d_si(Scheduler s, int i, const AnalyticInputs& in, std::size_t k = 0) {
  if (i < 1 || i > in.n_stations()) throw InvalidArgument("station index out of range");
  if (k >= in.payloads.size()) throw InvalidArgument("SI index out of range");
  const auto own = static_cast<std::size_t>(i - 1);
  Micros preceding = 0;
  for (std::size_t j = 0; j < own; ++j) {
    preceding += in.td_ref(j);
    if (s != Scheduler::HCCA) preceding -= in.t_u(k, j);
  }
  const Micros sifs = in.profile.sifs;
  switch (s) {
    case Scheduler::HCCA:
    case Scheduler::ATXOP: return preceding + in.t_l(k, own) + in.t_poll + sifs * 2;
    default: return in.t_mpoll + preceding - in.t_poll * (i - 1) + in.t_l(k, own) + sifs;
  }
}

struct AggregateDelay {
  double total_ms = 0.0;        // (1/M) sum_k sum_i D_SI
  double literal_ms = 0.0;      // AMTXOP: total plus one mean T_L and one SIFS
  double per_station_ms = 0.0;  // total / N, comparable with a mean packet delay
};

inline AggregateDelay aggregate_delay(Scheduler s, const AnalyticInputs& in) {
  in.validate();
  Micros sum = 0;
  Micros t_l_sum = 0;
  for (std::size_t k = 0; k < in.payloads.size(); ++k)
    for (int i = 1; i <= in.n_stations(); ++i) {
      sum += d_si(s, i, in, k);
      t_l_sum += in.t_l(k, static_cast<std::size_t>(i - 1));
    }
  const auto m = in.m_intervals();
  const auto n = static_cast<std::int64_t>(in.n_stations());
  AggregateDelay out;
  out.total_ms = (sum / m).ms();
  out.per_station_ms = out.total_ms / static_cast<double>(n);
  out.literal_ms = out.total_ms;
  if (s == Scheduler::AMTXOP) out.literal_ms += (t_l_sum / (m * n)).ms() + in.profile.sifs.ms();
  return out;
}

/// max_i |model_i - sim_i| / sim_i
inline double validate(std::span<const double> model, std::span<const double> sim) {
  if (model.size() != sim.size()) throw InvalidArgument("model and simulation series differ in length");
  if (model.empty()) throw InvalidArgument("empty series");
  double worst = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (sim[i] == 0.0) throw InvalidArgument("simulation value is zero");
    worst = std::max(worst, std::abs(model[i] - sim[i]) / std::abs(sim[i]));
  }
  return worst;
}

/// Model inputs that mirror a simulation scenario: same stations, same
/// trace offsets, payloads summed per SI from the start of the streams.
inline AnalyticInputs analytic_inputs_for(const Scenario& sc, std::size_t n_stations, std::int64_t m_intervals) {
  if (n_stations == 0 || n_stations > sc.stations.size()) throw InvalidArgument("bad station count");
  if (m_intervals < 1) throw InvalidArgument("need at least one SI");
  AnalyticInputs in;
  in.profile = sc.phy;
  const Rate ctrl = sc.effective_control_rate();
  in.t_poll = airtime_control(frame::SinglePoll{}, sc.phy, ctrl);
  in.t_ack = airtime_control(frame::Ack{}, sc.phy, ctrl);
  in.t_mpoll = airtime_multipoll(static_cast<int>(n_stations), sc.phy, ctrl);

  std::vector<Micros> msis;
  for (std::size_t i = 0; i < n_stations; ++i) msis.push_back(sc.stations[i].tspec.max_service_interval);
  in.si = compute_si(sc.beacon_interval, min_msi(msis));

  in.payloads.assign(static_cast<std::size_t>(m_intervals), std::vector<std::int64_t>(n_stations, 0));
  for (std::size_t i = 0; i < n_stations; ++i) {
    const auto& st = sc.stations[i];
    in.rates.push_back(st.tspec.min_phy_rate);
    in.reference_payload.push_back(reference_payload_time(st.tspec, in.si));
    const auto& tr = *st.trace;
    const Micros interval = Micros::from_ms(tr.frame_interval_ms());
    for (std::int64_t j = 0;; ++j) {
      const std::int64_t k = floor_div(interval * j, in.si);  // SI holding frame j
      if (k >= m_intervals) break;
      in.payloads[static_cast<std::size_t>(k)][i] += tr.generated((st.start_offset + static_cast<std::size_t>(j)) % tr.size()).size;
    }
  }
  return in;
}

}  // namespace hcca
