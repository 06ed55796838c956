#pragma once

// Deterministic discrete-event simulation of one HCCA basic service set.
//
// Every admitted station carries one uplink video stream. Each service
// interval the access point runs one CAP: the reference and ATXOP schedulers
// poll the stations one by one, AMTXOP broadcasts a single multi-poll and
// the stations time their own transmissions from the records that precede
// theirs. Frame exchanges follow the PHY airtimes exactly:
//
//     poll | SIFS | data | prop | SIFS | ACK | SIFS | next data ...
//
// and the next station is polled when the previous grant ends, whether or
// not the station used all of it.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "hcca/adaptive_sched.hpp"
#include "hcca/error.hpp"
#include "hcca/hcca_core.hpp"
#include "hcca/metrics.hpp"
#include "hcca/phy_timing.hpp"
#include "hcca/time.hpp"
#include "hcca/traffic_trace.hpp"

namespace hcca {

enum class Scheduler { HCCA, ATXOP, AMTXOP };

inline std::string to_string(Scheduler s) {
  switch (s) {
    case Scheduler::HCCA: return "HCCA";
    case Scheduler::ATXOP: return "ATXOP";
    default: return "AMTXOP";
  }
}

inline Scheduler scheduler_from_string(const std::string& name) {
  std::string up;
  for (char c : name) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "HCCA") return Scheduler::HCCA;
  if (up == "ATXOP") return Scheduler::ATXOP;
  if (up == "AMTXOP") return Scheduler::AMTXOP;
  throw ConfigError("unknown scheduler '" + name + "'");
}

// Declaration order is the tie-break priority for simultaneous events.
enum class EventKind {
  StreamStart,
  FrameGenerated,
  MobilityTierChange,
  BeaconTbtt,
  CapStart,
  PollTx,
  MultiPollTx,
  DataTxStart,
  DataRxDone,
  AckDone,
  StreamEnd,
};

inline const char* to_string(EventKind k) {
  static constexpr const char* names[] = {"StreamStart", "FrameGenerated", "MobilityTierChange", "BeaconTbtt",
                                          "CapStart",    "PollTx",         "MultiPollTx",        "DataTxStart",
                                          "DataRxDone",  "AckDone",        "StreamEnd"};
  return names[static_cast<int>(k)];
}

inline constexpr StationId kBroadcast = -1;

struct SimEvent {
  Micros time;
  EventKind kind = EventKind::BeaconTbtt;
  StationId aid = kBroadcast;
  std::string detail;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

/// One line per event: time_us, kind, aid, detail, tab separated.
inline void write_event_log(std::ostream& os, std::span<const SimEvent> events) {
  char buf[32];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.3f", e.time.us());
    os << buf << '\t' << to_string(e.kind) << '\t';
    if (e.aid == kBroadcast)
      os << '*';
    else
      os << e.aid;
    os << '\t' << e.detail << '\n';
  }
}

// ---------------------------------------------------------------- channel

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stateless draw in [0, 1) keyed by (seed, station, counter), so a frame's
/// fate does not depend on how many other stations drew before it.
inline double unit_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(stream ^ splitmix64(counter)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct ChannelModel {
  double per = 0.0;
  std::uint64_t seed = 1;

  ChannelModel() = default;
  ChannelModel(double p, std::uint64_t s) : per(p), seed(s) {
    if (!(per >= 0.0 && per <= 1.0)) throw InvalidArgument("PER must lie in [0, 1]");
  }
};

struct UplinkFrame {
  StationId aid = 0;
  std::uint64_t counter = 0;  // per-station transmission index
  std::int64_t payload_bytes = 0;
};

enum class Delivery { Delivered, Lost };

/// I.i.d. loss with probability `per` for payload-carrying uplink frames.
/// Header-only frames and everything the access point sends are error-free.
inline Delivery apply_channel(const ChannelModel& channel, const UplinkFrame& frame) {
  if (frame.payload_bytes == 0 || channel.per <= 0.0) return Delivery::Delivered;
  if (channel.per >= 1.0) return Delivery::Lost;
  const double u = unit_draw(channel.seed, static_cast<std::uint64_t>(frame.aid), frame.counter);
  return u < channel.per ? Delivery::Lost : Delivery::Delivered;
}

// --------------------------------------------------------------- mobility

inline constexpr double kFeetPerMeter = 3.28084;

struct RateTier {
  double max_distance_ft = 0.0;
  Rate rate;
};

/// 54 Mb/s to 80 ft, 36 to 200 ft, 18 to 250 ft, 6 to 325 ft.
inline std::vector<RateTier> default_rate_tiers() {
  return {{80.0, Rate::mbps(54)}, {200.0, Rate::mbps(36)}, {250.0, Rate::mbps(18)}, {325.0, Rate::mbps(6)}};
}

inline void validate_tiers(std::span<const RateTier> tiers) {
  if (tiers.empty()) throw ConfigError("rate tier list is empty");
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    if (!tiers[i].rate.positive() || !(tiers[i].max_distance_ft > 0.0))
      throw ConfigError("rate tiers need positive distances and rates");
    if (i > 0 && !(tiers[i].max_distance_ft > tiers[i - 1].max_distance_ft))
      throw ConfigError("rate tiers must be sorted by distance");
  }
}

/// Rate of the innermost tier that covers `distance_ft`; nullopt when the
/// station is out of range (disassociated).
inline std::optional<Rate> phy_rate_for_distance(double distance_ft, std::span<const RateTier> tiers) {
  validate_tiers(tiers);
  for (const auto& t : tiers)
    if (distance_ft <= t.max_distance_ft) return t.rate;
  return std::nullopt;
}

enum class Heading { Inbound, Outbound };

struct MobileNode {
  StationId aid = 0;
  double distance_ft = 0.0;
  Heading heading = Heading::Inbound;
  double min_ft = 0.0;
  double max_ft = 325.0;  // stations turn around at both bounds
};

struct TierChange {
  StationId aid = 0;
  std::optional<Rate> from;
  std::optional<Rate> to;
};

struct MobilityStep {
  std::vector<MobileNode> nodes;
  std::vector<TierChange> changes;
};

/// Radial movement for `dt`, reflecting at each node's bounds. Reports one
/// change per node whose rate tier differs before and after the step.
inline MobilityStep advance_mobility(std::vector<MobileNode> nodes, double speed_mps, Micros dt,
                                     std::span<const RateTier> tiers) {
  if (speed_mps < 0.0) throw InvalidArgument("speed must be non-negative");
  if (dt < 0) throw InvalidArgument("time step must be non-negative");
  MobilityStep step;
  const double travel = speed_mps * dt.seconds() * kFeetPerMeter;
  for (auto& n : nodes) {
    if (n.max_ft < n.min_ft) throw ConfigError("mobility bounds are inverted");
    const auto before = phy_rate_for_distance(n.distance_ft, tiers);
    double left = travel;
    const double span = n.max_ft - n.min_ft;
    if (span > 0.0) left = std::fmod(left, 2.0 * span);
    while (left > 0.0 && span > 0.0) {
      if (n.heading == Heading::Inbound) {
        const double room = n.distance_ft - n.min_ft;
        if (left <= room) {
          n.distance_ft -= left;
          left = 0.0;
        } else {
          n.distance_ft = n.min_ft;
          left -= room;
          n.heading = Heading::Outbound;
        }
      } else {
        const double room = n.max_ft - n.distance_ft;
        if (left <= room) {
          n.distance_ft += left;
          left = 0.0;
        } else {
          n.distance_ft = n.max_ft;
          left -= room;
          n.heading = Heading::Inbound;
        }
      }
    }
    const auto after = phy_rate_for_distance(n.distance_ft, tiers);
    if (before != after) step.changes.push_back(TierChange{n.aid, before, after});
  }
  step.nodes = std::move(nodes);
  return step;
}

// --------------------------------------------------------------- scenario

struct MobilityConfig {
  double speed_mps = 0.0;
  std::vector<RateTier> tiers = default_rate_tiers();
  Micros update_interval = Micros::from_ms(100);
};

struct StationConfig {
  StationId aid = 1;
  std::shared_ptr<const VideoTrace> trace;
  Tspec tspec;  // min_phy_rate is also the rate the station transmits at
  std::size_t start_offset = 0;  // first trace frame, in generation order
  double distance_ft = 30.0;
  Heading heading = Heading::Inbound;
  double min_distance_ft = 0.0;
  std::optional<double> max_distance_ft;  // outermost tier when unset
};

struct Scenario {
  Scheduler scheduler = Scheduler::HCCA;
  PhyProfile phy = profile_11g();
  std::optional<Rate> control_rate;  // polls and ACKs; basic rate when unset
  std::vector<StationConfig> stations;
  double per = 0.0;
  std::uint64_t seed = 1;
  Micros sim_time = Micros::from_seconds(500);
  Micros warmup = Micros::from_seconds(20);
  Micros beacon_interval = Micros::from_seconds(0.12);
  Micros t_cp = 0;
  bool admission_control = true;
  std::optional<MobilityConfig> mobility;
  std::int64_t qs_quantum = 1;  // 256 gives 802.11e queue-size granularity
  bool record_events = false;

  Rate effective_control_rate() const { return control_rate.value_or(phy.basic_rate); }

  void validate() const {
    phy.validate();
    if (!effective_control_rate().positive()) throw ConfigError("control rate must be positive");
    if (stations.empty()) throw ConfigError("scenario needs at least one station");
    if (!(per >= 0.0 && per <= 1.0)) throw ConfigError("per must lie in [0, 1]");
    if (warmup < 0 || !(sim_time > warmup)) throw ConfigError("need sim_time > warmup >= 0");
    if (beacon_interval <= 0) throw ConfigError("beacon interval must be positive");
    if (t_cp < 0) throw ConfigError("t_cp must be non-negative");
    if (qs_quantum < 1) throw ConfigError("qs_quantum must be at least 1");
    for (std::size_t i = 0; i < stations.size(); ++i) {
      const auto& s = stations[i];
      if (!s.trace) throw ConfigError("station " + std::to_string(s.aid) + " has no trace");
      if (s.aid < 0 || s.aid > 2007) throw ConfigError("station AID out of range");
      for (std::size_t j = 0; j < i; ++j)
        if (stations[j].aid == s.aid) throw ConfigError("duplicate station AID " + std::to_string(s.aid));
      try {
        s.tspec.validate();
      } catch (const InvalidTspec& e) {
        throw ConfigError("station " + std::to_string(s.aid) + ": " + e.what());
      }
    }
    if (mobility) {
      if (mobility->speed_mps < 0.0) throw ConfigError("mobility speed must be non-negative");
      if (mobility->update_interval <= 0) throw ConfigError("mobility update interval must be positive");
      validate_tiers(mobility->tiers);
    }
  }
};

struct RunResult {
  MetricsReport report;
  std::vector<SimEvent> events;
  std::vector<GrantRecord> grants;
  std::vector<PacketRecord> packets;
};

namespace detail {

class Simulator {
 public:
  explicit Simulator(const Scenario& sc)
      : sc_(sc),
        ctrl_(sc.effective_control_rate()),
        t_poll_(airtime_control(frame::SinglePoll{}, sc.phy, ctrl_)),
        t_ack_(airtime_control(frame::Ack{}, sc.phy, ctrl_)),
        list_(sc.beacon_interval),
        channel_(sc.per, sc.seed) {
    for (const auto& cfg : sc.stations) {
      Station st;
      st.cfg = cfg;
      st.rate = cfg.tspec.min_phy_rate;
      st.node = MobileNode{cfg.aid, cfg.distance_ft, cfg.heading, cfg.min_distance_ft, 0.0};
      if (sc.mobility) {
        st.node.max_ft = cfg.max_distance_ft.value_or(sc.mobility->tiers.back().max_distance_ft);
        const auto r = phy_rate_for_distance(cfg.distance_ft, sc.mobility->tiers);
        st.associated = r.has_value();
        if (r) st.rate = *r;
      }
      stations_.push_back(std::move(st));
    }
  }

  RunResult run() {
    for (std::size_t i = 0; i < stations_.size(); ++i) push(sc_.warmup, EventKind::StreamStart, i);
    for (Micros t = 0; t < sc_.sim_time; t += sc_.beacon_interval) push(t, EventKind::BeaconTbtt, kNone);
    if (sc_.mobility && sc_.mobility->speed_mps > 0.0)
      push(sc_.warmup + sc_.mobility->update_interval, EventKind::MobilityTierChange, kNone);

    while (!queue_.empty()) {
      const Pending ev = queue_.top();
      if (ev.time >= sc_.sim_time) break;
      queue_.pop();
      dispatch(ev);
    }
    for (const auto& st : stations_)
      if (st.admitted) log(sc_.sim_time, EventKind::StreamEnd, st.cfg.aid, "");
    return finish();
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct QueuedFrame {
    Micros gen;
    std::int64_t size = 0;
  };

  struct Station {
    StationConfig cfg;
    Rate rate;
    bool admitted = false;
    bool associated = true;
    MobileNode node;
    std::deque<QueuedFrame> queue;
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
    std::uint64_t nulls = 0;
    std::uint64_t tx_counter = 0;
    Micros grant_end;
    std::optional<QueuedFrame> in_flight;  // nullopt while a QoS-Null is on air
    bool on_air = false;
    bool in_flight_lost = false;
  };

  struct Pending {
    Micros time;
    EventKind kind;
    std::size_t station;  // index into stations_, or kNone
    StationId aid;  // kBroadcast for access-point events
    std::uint64_t seq;
    std::int64_t arg;

    // Min-heap on (time, kind, AID, insertion order).
    bool operator>(const Pending& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return kind > o.kind;
      if (aid != o.aid) return aid > o.aid;
      return seq > o.seq;
    }
  };

  void push(Micros t, EventKind k, std::size_t station, std::int64_t arg = 0) {
    const StationId aid = station == kNone ? kBroadcast : stations_[station].cfg.aid;
    queue_.push(Pending{t, k, station, aid, seq_++, arg});
  }

  void log(Micros t, EventKind k, StationId aid, std::string detail) {
    if (sc_.record_events) events_.push_back(SimEvent{t, k, aid, std::move(detail)});
  }

  static std::string fmt_us(Micros t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", t.us());
    return buf;
  }

  Micros overhead_for(Rate rate) const { return reference_overhead(sc_.phy, rate, ctrl_); }

  PollingEntry entry_for(const Station& st) const {
    PollingEntry e;
    e.aid = st.cfg.aid;
    e.tspec = st.cfg.tspec;
    e.tspec.min_phy_rate = st.rate;
    e.overhead = overhead_for(st.rate);
    return e;
  }

  Station& by_aid(StationId aid) {
    for (auto& st : stations_)
      if (st.cfg.aid == aid) return st;
    throw Error("no station with AID " + std::to_string(aid));
  }

  void dispatch(const Pending& ev) {
    switch (ev.kind) {
      case EventKind::StreamStart: on_stream_start(stations_[ev.station], ev.time); break;
      case EventKind::FrameGenerated: on_frame_generated(stations_[ev.station], ev.time, ev.arg); break;
      case EventKind::MobilityTierChange: on_mobility(ev.time); break;
      case EventKind::BeaconTbtt: log(ev.time, EventKind::BeaconTbtt, kBroadcast, ""); break;
      case EventKind::CapStart: on_cap_start(ev.time); break;
      case EventKind::PollTx: on_poll(stations_[ev.station], ev.time, ev.arg); break;
      case EventKind::MultiPollTx: on_multipoll(ev.time); break;
      case EventKind::DataTxStart: on_data_start(stations_[ev.station], ev.time, ev.arg != 0); break;
      case EventKind::DataRxDone: on_data_rx(stations_[ev.station], ev.time); break;
      case EventKind::AckDone: on_ack_done(stations_[ev.station], ev.time); break;
      case EventKind::StreamEnd: break;
    }
  }

  void on_stream_start(Station& st, Micros now) {
    bool accepted = false;
    std::string why;
    if (!st.associated) {
      why = "rejected out of range";
    } else if (sc_.admission_control) {
      const auto d = admit(list_, entry_for(st), sc_.t_cp);
      accepted = d.accepted;
      why = (accepted ? "admitted total=" : "rejected total=") + fmt_us(d.total_txop) + " budget=" + fmt_us(d.budget);
    } else {
      list_.force_add(entry_for(st));
      accepted = true;
      why = "admitted (no admission control)";
    }
    log(now, EventKind::StreamStart, st.cfg.aid, why);
    if (!accepted) return;
    st.admitted = true;
    ledger_.admit(st.cfg.aid);
    push(now, EventKind::FrameGenerated, index_of(st), 0);
    if (!cap_scheduled_) {
      cap_scheduled_ = true;
      const Micros si = list_.si();
      push(si * ceil_div(now, si), EventKind::CapStart, kNone);
    }
  }

  std::size_t index_of(const Station& st) const { return static_cast<std::size_t>(&st - stations_.data()); }

  const TraceFrame& trace_frame(const Station& st, std::uint64_t j) const {
    const auto& tr = *st.cfg.trace;
    return tr.generated((st.cfg.start_offset + j) % tr.size());
  }

  Micros generation_time(const Station& st, std::uint64_t j) const {
    return sc_.warmup + Micros::from_ms(st.cfg.trace->frame_interval_ms()) * static_cast<std::int64_t>(j);
  }

  void on_frame_generated(Station& st, Micros now, std::int64_t j) {
    const auto& f = trace_frame(st, static_cast<std::uint64_t>(j));
    st.queue.push_back(QueuedFrame{now, f.size});
    ++st.generated;
    log(now, EventKind::FrameGenerated, st.cfg.aid, std::string(1, static_cast<char>(f.type)) + " " + std::to_string(f.size));
    const Micros next = generation_time(st, static_cast<std::uint64_t>(j + 1));
    if (next < sc_.sim_time) push(next, EventKind::FrameGenerated, index_of(st), j + 1);
  }

  void on_mobility(Micros now) {
    std::vector<MobileNode> nodes;
    for (const auto& st : stations_) nodes.push_back(st.node);
    auto step = advance_mobility(std::move(nodes), sc_.mobility->speed_mps, sc_.mobility->update_interval,
                                 sc_.mobility->tiers);
    for (std::size_t i = 0; i < stations_.size(); ++i) stations_[i].node = step.nodes[i];
    for (const auto& c : step.changes) {
      Station& st = by_aid(c.aid);
      ++tier_changes_;
      st.associated = c.to.has_value();
      if (c.to) {
        st.rate = *c.to;
        if (st.admitted) list_.update_rate(st.cfg.aid, st.rate, overhead_for(st.rate));
      }
      auto rate_str = [](const std::optional<Rate>& r) {
        return r ? std::to_string(r->bps) : std::string("none");
      };
      log(now, EventKind::MobilityTierChange, c.aid, rate_str(c.from) + "->" + rate_str(c.to));
    }
    const Micros next = now + sc_.mobility->update_interval;
    if (next < sc_.sim_time) push(next, EventKind::MobilityTierChange, kNone);
  }

  // ---- CAP

  void on_cap_start(Micros now) {
    const Micros si = list_.si();
    std::vector<PollingEntry> active;
    for (const auto& e : list_.entries())
      if (by_aid(e.aid).associated) active.push_back(e);

    Micros cap_end = now;
    if (!active.empty()) {
      ++caps_;
      cap_grants_.clear();
      std::string detail;
      if (sc_.scheduler == Scheduler::AMTXOP) {
        const Micros t_mpoll = airtime_multipoll(static_cast<int>(active.size()), sc_.phy, ctrl_);
        auto plan = build_multipoll(active, ledger_, si, MultiPollOverhead{t_poll_, t_mpoll}, t_mpoll);
        for (const auto& r : plan.frame.records) cap_grants_.push_back(TxopGrant{r.aid, r.txop, r.basis});
        current_frame_ = std::move(plan.frame);
        current_mpoll_ = t_mpoll;
        cap_end = now + plan.cap_duration;
        push(now, EventKind::MultiPollTx, kNone);
      } else {
        Micros t = now;
        for (const auto& e : active) {
          const TxopGrant g = sc_.scheduler == Scheduler::HCCA ? list_.reference_grant(e) : atxop_grant(e, ledger_, si);
          push(t, EventKind::PollTx, index_of(by_aid(e.aid)), static_cast<std::int64_t>(cap_grants_.size()));
          cap_grants_.push_back(g);
          t += g.duration;
        }
        cap_end = t;
      }
      for (std::size_t i = 0; i < active.size(); ++i) {
        const auto& e = active[i];
        const auto& g = cap_grants_[i];
        grants_.push_back(GrantRecord{static_cast<std::int64_t>(caps_ - 1), now, e.aid, g.duration, g.basis,
                                      txop_reference(e.tspec, si, e.overhead).duration});
        ledger_.consume(e.aid);
        detail += (i ? " " : "") + std::to_string(e.aid) + ":" + fmt_us(g.duration) +
                  (g.basis == GrantBasis::PiggybackSize ? "a" : "r");
      }
      log(now, EventKind::CapStart, kBroadcast, "si=" + fmt_us(si) + " end=" + fmt_us(cap_end) + " " + detail);
    }

    const Micros boundary = next_boundary(now, si);
    if (cap_end > boundary) ++cap_overruns_;
    const Micros next = max(boundary, cap_end);
    if (next < sc_.sim_time) push(next, EventKind::CapStart, kNone);
  }

  static Micros next_boundary(Micros now, Micros si) {
    return si * (floor_div(now, si) + 1);
  }

  void on_poll(Station& st, Micros now, std::int64_t grant_index) {
    const Micros grant = cap_grants_.at(static_cast<std::size_t>(grant_index)).duration;
    st.grant_end = now + grant;
    log(now, EventKind::PollTx, st.cfg.aid, "txop=" + fmt_us(grant));
    push(now + t_poll_ + sc_.phy.sifs, EventKind::DataTxStart, index_of(st), 1);
  }

  void on_multipoll(Micros now) {
    log(now, EventKind::MultiPollTx, kBroadcast,
        "records=" + std::to_string(current_frame_.record_count()) + " bytes=" +
            std::to_string(current_frame_.body_bytes()));
    for (const auto& r : current_frame_.records) {
      Station& st = by_aid(r.aid);
      const Micros start = now + current_mpoll_ + *station_backoff(current_frame_, r.aid);
      st.grant_end = start + r.txop;
      push(start + sc_.phy.sifs, EventKind::DataTxStart, index_of(st), 1);
    }
  }

  // Data, propagation, SIFS, ACK and SIFS for one frame of `bytes`.
  Micros exchange_time(const Station& st, std::int64_t bytes) const {
    return airtime_data(bytes, sc_.phy, st.rate) + sc_.phy.prop_delay + sc_.phy.sifs + t_ack_ + sc_.phy.sifs;
  }

  bool head_fits(const Station& st, Micros start) const {
    return !st.queue.empty() && start + exchange_time(st, st.queue.front().size) <= st.grant_end;
  }

  std::optional<std::int64_t> queue_size_report(const Station& st) const {
    std::int64_t bytes = 0;
    for (const auto& f : st.queue) bytes += f.size;
    const Micros next_gen = generation_time(st, st.generated);
    const bool more = next_gen < sc_.sim_time;
    if (more) bytes += trace_frame(st, st.generated).size;
    if (!more && bytes == 0) return std::nullopt;
    const std::int64_t q = sc_.qs_quantum;
    return (bytes + q - 1) / q * q;
  }

  void on_data_start(Station& st, Micros now, bool first_in_grant) {
    if (head_fits(st, now)) {
      st.in_flight = st.queue.front();
      st.queue.pop_front();
    } else if (first_in_grant) {
      st.in_flight.reset();  // QoS-Null
    } else {
      return;
    }
    st.on_air = true;
    const std::int64_t bytes = st.in_flight ? st.in_flight->size : 0;
    const UplinkFrame f{st.cfg.aid, st.tx_counter++, bytes};
    st.in_flight_lost = apply_channel(channel_, f) == Delivery::Lost;
    log(now, EventKind::DataTxStart, st.cfg.aid, st.in_flight ? "data " + std::to_string(bytes) : "null");
    push(now + airtime_data(bytes, sc_.phy, st.rate) + sc_.phy.prop_delay, EventKind::DataRxDone, index_of(st));
  }

  void on_data_rx(Station& st, Micros now) {
    std::string detail;
    if (st.in_flight_lost) {
      ++st.lost;
      detail = "lost";
    } else {
      const auto qs = queue_size_report(st);
      ledger_.on_data(st.cfg.aid, qs);
      if (st.in_flight) {
        ++st.delivered;
        packets_.push_back(PacketRecord{st.cfg.aid, st.in_flight->gen, now, st.in_flight->size});
        detail = "ok delay=" + fmt_us(now - st.in_flight->gen);
      } else {
        ++st.nulls;
        detail = "null";
      }
      detail += " qs=" + (qs ? std::to_string(*qs) : std::string("eos"));
    }
    log(now, EventKind::DataRxDone, st.cfg.aid, detail);
    push(now + sc_.phy.sifs + t_ack_, EventKind::AckDone, index_of(st), st.in_flight ? 1 : 0);
  }

  void on_ack_done(Station& st, Micros now) {
    const bool was_data = st.in_flight.has_value();
    log(now, EventKind::AckDone, st.cfg.aid, st.in_flight_lost ? "timeout" : "");
    st.on_air = false;
    st.in_flight.reset();
    const Micros next = now + sc_.phy.sifs;
    if (was_data && head_fits(st, next)) push(next, EventKind::DataTxStart, index_of(st), 0);
  }

  RunResult finish() {
    RunResult out;
    MetricsReport& r = out.report;
    r.scheduler = to_string(sc_.scheduler);
    r.phy = to_string(sc_.phy.name);
    r.offered = static_cast<int>(stations_.size());
    r.per = sc_.per;
    r.speed_mps = sc_.mobility ? sc_.mobility->speed_mps : 0.0;
    r.seed = sc_.seed;
    for (const auto& st : stations_) {
      r.admitted += st.admitted ? 1 : 0;
      r.generated += st.generated;
      r.delivered += st.delivered;
      r.lost += st.lost;
      r.queued += st.queue.size() + (st.on_air && st.in_flight ? 1 : 0);
      r.null_frames += st.nulls;
    }
    const Micros window = sc_.sim_time - sc_.warmup;
    r.mean_delay_ms = e2e_delay(packets_);
    r.throughput_bps = aggregate_throughput(packets_, window);
    r.aggregate_txop_s = aggregate_txop(grants_);
    r.util_improvement = utilization_improvement(grants_);
    r.caps = caps_;
    r.cap_overruns = cap_overruns_;
    r.tier_changes = tier_changes_;
    r.protocol_errors = ledger_.protocol_errors();
    r.si_ms = list_.si().ms();
    r.flows = per_flow(packets_, window);
    out.events = std::move(events_);
    out.grants = std::move(grants_);
    out.packets = std::move(packets_);
    return out;
  }

  const Scenario& sc_;
  Rate ctrl_;
  Micros t_poll_;
  Micros t_ack_;
  PollingList list_;
  SizeLedger ledger_;
  ChannelModel channel_;
  std::vector<Station> stations_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  bool cap_scheduled_ = false;

  std::vector<TxopGrant> cap_grants_;
  MultiPollFrame current_frame_;
  Micros current_mpoll_;

  std::vector<SimEvent> events_;
  std::vector<GrantRecord> grants_;
  std::vector<PacketRecord> packets_;
  std::uint64_t caps_ = 0;
  std::uint64_t cap_overruns_ = 0;
  std::uint64_t tier_changes_ = 0;
};

}  // namespace detail

/// Runs one scenario to completion. Identical scenarios give identical results.
inline RunResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  detail::Simulator sim(scenario);
  return sim.run();
}

}  // namespace hcca
