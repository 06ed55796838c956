#pragma once

// MPEG-4 frame traces: parsing, statistics, TSPEC derivation and the
// next-frame-size lookahead that stations piggyback to the access point.
//
// Trace file format, one frame per line:
//
//     <sequence> <I|P|B> <display_time_ms> <size_bytes>
//
// Blank lines and lines starting with '#' are ignored. Files list frames in
// decode order; the display-time column is the presentation timestamp, so a
// B frame follows the P frame it precedes on screen.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hcca/error.hpp"
#include "hcca/time.hpp"

namespace hcca {

enum class FrameType : char { I = 'I', P = 'P', B = 'B' };

struct TraceFrame {
  std::int64_t sequence = 0;
  FrameType type = FrameType::P;
  double display_ms = 0.0;
  std::int64_t size = 0;

  friend bool operator==(const TraceFrame&, const TraceFrame&) = default;
};

enum class FrameOrder { File, Generation };

/// Immutable trace. Keeps file (decode) order and the display-time ordering
/// used as the packet generation schedule.
class VideoTrace {
 public:
  static constexpr double kDefaultIntervalMs = 40.0;

  explicit VideoTrace(std::vector<TraceFrame> frames, std::optional<double> compression_ratio = std::nullopt)
      : frames_(std::move(frames)), compression_ratio_(compression_ratio) {
    if (frames_.empty()) throw InvalidArgument("trace has no frames");
    for (const auto& f : frames_) {
      if (f.size <= 0) throw InvalidArgument("frame " + std::to_string(f.sequence) + " has non-positive size");
      if (f.sequence < 0) throw InvalidArgument("negative frame sequence number");
    }
    generation_.resize(frames_.size());
    std::iota(generation_.begin(), generation_.end(), std::size_t{0});
    std::stable_sort(generation_.begin(), generation_.end(),
                     [&](std::size_t a, std::size_t b) { return frames_[a].display_ms < frames_[b].display_ms; });
    for (std::size_t i = 1; i < generation_.size(); ++i) {
      if (!(frames_[generation_[i]].display_ms > frames_[generation_[i - 1]].display_ms))
        throw InvalidArgument("duplicate display time " + std::to_string(frames_[generation_[i]].display_ms));
    }
    frame_interval_ms_ = regular_spacing();
  }

  std::size_t size() const { return frames_.size(); }
  const std::vector<TraceFrame>& frames() const { return frames_; }
  const TraceFrame& at(std::size_t i, FrameOrder order = FrameOrder::File) const {
    return order == FrameOrder::File ? frames_.at(i) : frames_.at(generation_.at(i));
  }
  /// i-th frame in generation (display) order.
  const TraceFrame& generated(std::size_t i) const { return frames_[generation_.at(i)]; }
  double frame_interval_ms() const { return frame_interval_ms_; }
  /// Playback span: first display time to one interval past the last.
  double duration_ms() const {
    return generated(size() - 1).display_ms - generated(0).display_ms + frame_interval_ms_;
  }
  std::optional<double> compression_ratio() const { return compression_ratio_; }
  std::int64_t max_frame_size() const {
    return std::max_element(frames_.begin(), frames_.end(),
                            [](const auto& a, const auto& b) { return a.size < b.size; })
        ->size;
  }

  friend bool operator==(const VideoTrace& a, const VideoTrace& b) { return a.frames_ == b.frames_; }

 private:
  // Most frequent gap between consecutive display times.
  double regular_spacing() const {
    if (frames_.size() < 2) return kDefaultIntervalMs;
    std::map<std::int64_t, std::size_t> counts;  // gap in nanoseconds
    for (std::size_t i = 1; i < generation_.size(); ++i) {
      const double gap = generated(i).display_ms - generated(i - 1).display_ms;
      ++counts[std::llround(gap * 1e6)];
    }
    const auto best = std::max_element(counts.begin(), counts.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    return static_cast<double>(best->first) / 1e6;
  }

  std::vector<TraceFrame> frames_;
  std::vector<std::size_t> generation_;
  double frame_interval_ms_ = kDefaultIntervalMs;
  std::optional<double> compression_ratio_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline VideoTrace parse_trace(std::istream& in) {
  std::vector<TraceFrame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cols = detail::split_ws(line);
    if (cols.empty() || cols.front().front() == '#') continue;
    if (cols.size() != 4) throw ParseError(lineno, "expected 4 columns, found " + std::to_string(cols.size()));
    TraceFrame f;
    if (!detail::parse_number(cols[0], f.sequence) || f.sequence < 0)
      throw ParseError(lineno, "non-numeric or negative frame sequence '" + std::string(cols[0]) + "'");
    if (cols[1].size() != 1 || (cols[1][0] != 'I' && cols[1][0] != 'P' && cols[1][0] != 'B'))
      throw ParseError(lineno, "unknown frame type '" + std::string(cols[1]) + "'");
    f.type = static_cast<FrameType>(cols[1][0]);
    if (!detail::parse_number(cols[2], f.display_ms))
      throw ParseError(lineno, "non-numeric display time '" + std::string(cols[2]) + "'");
    if (!detail::parse_number(cols[3], f.size) || f.size <= 0)
      throw ParseError(lineno, "non-numeric or non-positive frame size '" + std::string(cols[3]) + "'");
    frames.push_back(f);
  }
  if (frames.empty()) throw ParseError(lineno, "empty trace");
  try {
    return VideoTrace(std::move(frames));
  } catch (const InvalidArgument& e) {
    throw ParseError(lineno, e.what());
  }
}

inline VideoTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

/// Writes frames in file order; parse_trace(serialize_trace(t)) == t.
inline std::string serialize_trace(const VideoTrace& trace) {
  std::string out;
  out.reserve(trace.size() * 24);
  for (const auto& f : trace.frames()) {
    out += std::to_string(f.sequence);
    out += ' ';
    out += static_cast<char>(f.type);
    out += ' ';
    out += detail::format_double(f.display_ms);
    out += ' ';
    out += std::to_string(f.size);
    out += '\n';
  }
  return out;
}

struct TraceStats {
  double mean_size = 0.0;     // bytes
  double cov = 0.0;           // population std / mean
  double mean_bitrate = 0.0;  // bit/s
  double peak_bitrate = 0.0;  // bit/s, max over aggregation windows
  double peak_to_mean = 0.0;
  std::optional<double> compression_ratio;
  std::int64_t max_size = 0;
  std::size_t frames = 0;
};

/// Peak bit rate tiles the playback span with `window_ms` windows; a
/// shorter final window is measured over its own length.
inline TraceStats trace_stats(const VideoTrace& trace, double window_ms = 1000.0) {
  if (!(window_ms > 0.0)) throw InvalidArgument("aggregation window must be positive");
  TraceStats s;
  s.frames = trace.size();
  const double n = static_cast<double>(trace.size());
  double sum = 0.0;
  for (const auto& f : trace.frames()) sum += static_cast<double>(f.size);
  s.mean_size = sum / n;
  double sq = 0.0;
  for (const auto& f : trace.frames()) {
    const double d = static_cast<double>(f.size) - s.mean_size;
    sq += d * d;
  }
  s.cov = std::sqrt(sq / n) / s.mean_size;

  const double span_ms = trace.duration_ms();
  s.mean_bitrate = sum * 8.0 / (span_ms / 1e3);

  const double t0 = trace.generated(0).display_ms;
  const auto n_windows = static_cast<std::size_t>(std::ceil(span_ms / window_ms - 1e-9));
  std::vector<double> bits(std::max<std::size_t>(n_windows, 1), 0.0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& f = trace.generated(i);
    auto w = static_cast<std::size_t>((f.display_ms - t0) / window_ms);
    if (w >= bits.size()) w = bits.size() - 1;
    bits[w] += static_cast<double>(f.size) * 8.0;
  }
  for (std::size_t w = 0; w < bits.size(); ++w) {
    const double len_ms = std::min(window_ms, span_ms - static_cast<double>(w) * window_ms);
    s.peak_bitrate = std::max(s.peak_bitrate, bits[w] / (len_ms / 1e3));
  }
  s.peak_bitrate = std::max(s.peak_bitrate, s.mean_bitrate);  // guards float rounding only
  s.peak_to_mean = s.peak_bitrate / s.mean_bitrate;
  s.compression_ratio = trace.compression_ratio();
  s.max_size = trace.max_frame_size();
  return s;
}

/// Size of the frame at `cursor`, or nullopt (end of stream) when the cursor
/// is one past the last frame.
inline std::optional<std::int64_t> next_frame_size(const VideoTrace& trace, std::size_t cursor,
                                                   FrameOrder order = FrameOrder::File) {
  if (cursor > trace.size()) throw InvalidArgument("trace cursor out of range");
  if (cursor == trace.size()) return std::nullopt;
  return trace.at(cursor, order).size;
}

/// Per-stream QoS contract negotiated at admission.
struct Tspec {
  std::int64_t mean_msdu = 0;  // L, bytes
  std::int64_t max_msdu = 0;   // M, bytes
  Rate mean_rate;              // rho
  Micros delay_bound;          // D
  Rate min_phy_rate;           // R
  Micros max_service_interval; // MSI

  void validate() const {
    if (mean_msdu <= 0 || mean_msdu > max_msdu) throw InvalidTspec("need 0 < mean MSDU <= max MSDU");
    if (!mean_rate.positive()) throw InvalidTspec("mean data rate must be positive");
    if (!min_phy_rate.positive()) throw InvalidTspec("minimum PHY rate must be positive");
    if (max_service_interval <= 0 || max_service_interval > delay_bound)
      throw InvalidTspec("need 0 < MSI <= delay bound");
  }

  friend bool operator==(const Tspec&, const Tspec&) = default;
};

inline Tspec derive_tspec(const TraceStats& stats, std::int64_t max_size, Micros delay_bound, Rate min_rate,
                          Micros msi) {
  Tspec t;
  t.mean_msdu = std::llround(stats.mean_size);
  t.max_msdu = max_size;
  t.mean_rate = Rate(std::llround(stats.mean_bitrate));
  t.delay_bound = delay_bound;
  t.min_phy_rate = min_rate;
  t.max_service_interval = msi;
  t.validate();
  return t;
}

}  // namespace hcca
