#pragma once

// Exact time and rate arithmetic.
//
// Every airtime in the simulator is a rational number of microseconds:
// frame bits divided by a PHY rate rarely lands on an integer (36 bytes at
// 54 Mb/s is 16/3 us), and summing thousands of such values in floating
// point makes schedule comparisons drift. Values are kept normalized
// (gcd-reduced, positive denominator) and only rounded when reported.

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hcca/error.hpp"

namespace hcca {

/// PHY or application bit rate, in bit/s.
struct Rate {
  std::int64_t bps = 0;

  constexpr Rate() = default;
  constexpr explicit Rate(std::int64_t bits_per_second) : bps(bits_per_second) {}

  static constexpr Rate mbps(double m) { return Rate(static_cast<std::int64_t>(m * 1e6 + 0.5)); }
  constexpr double as_mbps() const { return static_cast<double>(bps) / 1e6; }
  constexpr bool positive() const { return bps > 0; }

  friend constexpr auto operator<=>(const Rate&, const Rate&) = default;
};

/// Exact rational duration in microseconds.
class Micros {
 public:
  constexpr Micros() = default;
  constexpr Micros(std::int64_t us) : num_(us), den_(1) {}  // NOLINT: integer microseconds convert implicitly
  Micros(std::int64_t num, std::int64_t den) { assign(num, den); }

  static Micros from_seconds(double s) { return from_double_us(s * 1e6); }
  static Micros from_ms(double ms) { return from_double_us(ms * 1e3); }
  /// Rounds to the nearest nanosecond.
  static Micros from_double_us(double us) {
    return Micros(static_cast<std::int64_t>(us * 1000.0 + (us >= 0 ? 0.5 : -0.5)), 1000);
  }

  static Micros from_ratio(__int128 num, __int128 den) { return make(num, den); }

  /// Time to send `bits` at `rate`.
  static Micros airtime(std::int64_t bits, Rate rate) {
    if (!rate.positive()) throw InvalidProfile("rate must be positive");
    return Micros(bits * 1'000'000, rate.bps);
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }
  constexpr double us() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  constexpr double ms() const { return us() / 1e3; }
  constexpr double seconds() const { return us() / 1e6; }

  Micros& operator+=(const Micros& o) { return *this = *this + o; }
  Micros& operator-=(const Micros& o) { return *this = *this - o; }

  friend Micros operator+(const Micros& a, const Micros& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Micros operator-(const Micros& a, const Micros& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Micros operator-(const Micros& a) { return Micros(-a.num_, a.den_); }
  friend Micros operator*(const Micros& a, std::int64_t k) {
    return make(static_cast<__int128>(a.num_) * k, a.den_);
  }
  friend Micros operator*(std::int64_t k, const Micros& a) { return a * k; }
  friend Micros operator/(const Micros& a, std::int64_t k) {
    if (k == 0) throw InvalidArgument("division of duration by zero");
    return make(a.num_, static_cast<__int128>(a.den_) * k);
  }
  /// Ratio of two durations, as a double.
  friend double operator/(const Micros& a, const Micros& b) {
    return static_cast<double>(static_cast<long double>(a.num_) * b.den_ /
                               (static_cast<long double>(a.den_) * b.num_));
  }

  friend bool operator==(const Micros& a, const Micros& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend std::strong_ordering operator<=>(const Micros& a, const Micros& b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l <=> r;
  }

  friend std::ostream& operator<<(std::ostream& os, const Micros& t) {
    os << t.num_;
    if (t.den_ != 1) os << '/' << t.den_;
    return os;
  }

 private:
  static Micros make(__int128 num, __int128 den) {
    if (den == 0) throw InvalidArgument("zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    const __int128 g = a == 0 ? den : a;
    num /= g;
    den /= g;
    constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
    if (num > lim || num < -lim || den > lim) throw InvalidArgument("duration arithmetic overflow");
    Micros m;
    m.num_ = static_cast<std::int64_t>(num);
    m.den_ = static_cast<std::int64_t>(den);
    return m;
  }

  void assign(std::int64_t num, std::int64_t den) { *this = make(num, den); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// x * num / den, exact.
inline Micros scale(const Micros& x, const Micros& num, const Micros& den) {
  if (den.num() == 0) throw InvalidArgument("scale by zero duration");
  const Micros a(x.num(), den.num());   // x.n / d.n, reduced
  const Micros b(num.num(), x.den());   // n.n / x.d, reduced
  const Micros c(den.den(), num.den()); // d.d / n.d, reduced
  return Micros::from_ratio(static_cast<__int128>(a.num()) * b.num() * c.num(),
                            static_cast<__int128>(a.den()) * b.den() * c.den());
}

inline Micros max(const Micros& a, const Micros& b) { return a < b ? b : a; }
inline Micros min(const Micros& a, const Micros& b) { return b < a ? b : a; }

/// Smallest integer >= a/b for positive durations.
inline std::int64_t ceil_div(const Micros& a, const Micros& b) {
  if (b.num() <= 0) throw InvalidArgument("ceil_div by non-positive duration");
  const __int128 n = static_cast<__int128>(a.num()) * b.den();
  const __int128 d = static_cast<__int128>(a.den()) * b.num();
  __int128 q = n / d;
  if (q * d < n) ++q;
  return static_cast<std::int64_t>(q);
}

/// Largest integer <= a/b for a positive divisor.
inline std::int64_t floor_div(const Micros& a, const Micros& b) {
  if (b.num() <= 0) throw InvalidArgument("floor_div by non-positive duration");
  const __int128 n = static_cast<__int128>(a.num()) * b.den();
  const __int128 d = static_cast<__int128>(a.den()) * b.num();
  __int128 q = n / d;
  if (q * d > n) --q;
  return static_cast<std::int64_t>(q);
}

}  // namespace hcca
