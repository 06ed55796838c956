#pragma once

// Synthetic MPEG-4 traces and the four video workloads used in the
// experiments (Jurassic Park 1 and Formula 1, low and high quality).
//
// The generator produces a 25 fps IBBPBBPBBPBB stream whose frame sizes
// follow a scene-modulated lognormal per frame type, then calibrates it so
// the mean frame size, the coefficient of variation and the largest frame
// match the workload's published statistics. Output is in decode order,
// exactly like a trace file from a public trace library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hcca/error.hpp"
#include "hcca/traffic_trace.hpp"

namespace hcca {

struct VideoPreset {
  std::string name;          // e.g. "jp1-high"
  double mean_size = 0.0;    // bytes
  double cov = 0.0;
  std::int64_t max_size = 0; // M
  double mean_bitrate = 0.0; // rho, bit/s
  double compression_ratio = 0.0;

  /// TSPEC column for this workload. R defaults to 11 Mb/s; scenarios
  /// override it with the PHY rate the station actually uses.
  Tspec tspec(Rate min_phy_rate = Rate::mbps(11)) const {
    Tspec t;
    t.mean_msdu = std::llround(mean_size);
    t.max_msdu = max_size;
    t.mean_rate = Rate(std::llround(mean_bitrate));
    t.delay_bound = Micros::from_seconds(0.08);
    t.min_phy_rate = min_phy_rate;
    t.max_service_interval = Micros::from_seconds(0.04);
    return t;
  }
};

inline const std::array<VideoPreset, 4>& video_presets() {
  static const std::array<VideoPreset, 4> presets{{
      {"jp1-low", 770.0, 1.39, 8154, 1.5e5, 49.46},
      {"jp1-high", 3800.0, 0.59, 16745, 7.7e5, 9.92},
      {"f1-low", 870.0, 1.12, 7032, 1.7e5, 43.51},
      {"f1-high", 4200.0, 0.42, 14431, 8.4e5, 9.92},
  }};
  return presets;
}

inline const VideoPreset& video_preset(const std::string& name) {
  for (const auto& p : video_presets())
    if (p.name == name) return p;
  throw ConfigError("unknown video preset '" + name + "'");
}

struct SynthOptions {
  std::size_t frames = 90000;  // one hour at 25 fps
  double interval_ms = 40.0;
  std::uint64_t seed = 1;
};

namespace detail {

// Uniform in (0, 1) from a fully specified engine, so traces are identical
// on every standard library.
inline double unit_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_normal(std::mt19937_64& rng) {
  const double u1 = unit_open(rng);
  const double u2 = unit_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

struct Shaped {
  std::vector<double> sizes;
  double cov = 0.0;
};

// Scales exp(kappa * u) so the clipped sizes average `mean`, and reports the CoV.
inline Shaped shape(const std::vector<double>& u, double kappa, double mean, double cap) {
  std::vector<double> raw(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) raw[i] = std::exp(kappa * u[i]);
  auto clipped_mean = [&](double c) {
    double s = 0.0;
    for (double r : raw) s += std::min(c * r, cap);
    return s / static_cast<double>(raw.size());
  };
  double lo = 0.0, hi = 1.0;
  while (clipped_mean(hi) < mean) hi *= 2.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clipped_mean(mid) < mean ? lo : hi) = mid;
  }
  Shaped out;
  out.sizes.resize(raw.size());
  double s = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.sizes[i] = std::min(hi * raw[i], cap);
    s += out.sizes[i];
  }
  const double m = s / static_cast<double>(raw.size());
  for (double x : out.sizes) sq += (x - m) * (x - m);
  out.cov = std::sqrt(sq / static_cast<double>(raw.size())) / m;
  return out;
}

}  // namespace detail

inline VideoTrace synthesize_trace(const VideoPreset& preset, const SynthOptions& opt = {}) {
  if (opt.frames == 0) throw InvalidArgument("synthetic trace needs at least one frame");
  if (preset.mean_size <= 0 || preset.cov < 0 || preset.max_size < preset.mean_size)
    throw InvalidArgument("inconsistent synthetic trace targets");

  static constexpr std::string_view gop = "IBBPBBPBBPBB";
  auto type_of = [](std::size_t display_idx) { return static_cast<FrameType>(gop[display_idx % gop.size()]); };
  auto level = [](FrameType t) {
    switch (t) {
      case FrameType::I: return 1.0;
      case FrameType::P: return 0.1;
      default: return -0.35;
    }
  };

  std::mt19937_64 rng(opt.seed);
  std::vector<double> u(opt.frames);
  double scene = 0.0;
  constexpr double rho = 0.98;
  const double innov = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < opt.frames; ++i) {
    scene = rho * scene + innov * detail::std_normal(rng);
    u[i] = level(type_of(i)) + 0.45 * scene + 0.35 * detail::std_normal(rng);
  }

  const double cap = static_cast<double>(preset.max_size);
  double lo = 0.0, hi = 8.0;
  detail::Shaped best = detail::shape(u, hi, preset.mean_size, cap);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    best = detail::shape(u, mid, preset.mean_size, cap);
    (best.cov < preset.cov ? lo : hi) = mid;
  }

  std::vector<std::int64_t> sizes(opt.frames);
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < opt.frames; ++i) {
    sizes[i] = std::max<std::int64_t>(8, std::llround(best.sizes[i]));
    if (sizes[i] > sizes[argmax]) argmax = i;
  }
  sizes[argmax] = preset.max_size;

  // Decode order: each anchor (I/P) precedes the B frames displayed before it.
  std::vector<TraceFrame> frames;
  frames.reserve(opt.frames);
  std::vector<std::size_t> pending_b;
  auto emit = [&](std::size_t d) {
    frames.push_back(TraceFrame{static_cast<std::int64_t>(frames.size()), type_of(d),
                                static_cast<double>(d) * opt.interval_ms, sizes[d]});
  };
  for (std::size_t d = 0; d < opt.frames; ++d) {
    if (type_of(d) == FrameType::B) {
      pending_b.push_back(d);
      continue;
    }
    emit(d);
    for (std::size_t b : pending_b) emit(b);
    pending_b.clear();
  }
  for (std::size_t b : pending_b) emit(b);
  return VideoTrace(std::move(frames), preset.compression_ratio);
}

}  // namespace hcca
