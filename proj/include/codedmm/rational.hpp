#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "codedmm/errors.hpp"

namespace codedmm {

/// Exact rational number with 64-bit numerator and denominator.
///
/// Intermediate products are formed in 128 bits and reduced; a result that
/// does not fit in 64 bits throws RangeError rather than wrapping.
class Rational {
public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value) {} // NOLINT
  Rational(std::int64_t num, std::int64_t den) { assign(num, den); }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }
  long double to_long_double() const noexcept {
    return static_cast<long double>(num_) / static_cast<long double>(den_);
  }
  bool is_integer() const noexcept { return den_ == 1; }

  Rational operator-() const { return from_wide(-static_cast<__int128>(num_), den_); }

  friend Rational operator+(const Rational &a, const Rational &b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const __int128 n = static_cast<__int128>(a.num_) * (b.den_ / g) +
                       static_cast<__int128>(b.num_) * (a.den_ / g);
    const __int128 d = static_cast<__int128>(a.den_) * (b.den_ / g);
    return from_wide(n, d);
  }
  friend Rational operator-(const Rational &a, const Rational &b) { return a + (-b); }
  friend Rational operator*(const Rational &a, const Rational &b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    const auto div = [](std::int64_t x, std::int64_t g) { return g == 0 ? x : x / g; };
    const __int128 n = static_cast<__int128>(div(a.num_, g1)) * div(b.num_, g2);
    const __int128 d = static_cast<__int128>(div(a.den_, g2)) * div(b.den_, g1);
    return from_wide(n, d);
  }
  friend Rational operator/(const Rational &a, const Rational &b) {
    if (b.num_ == 0) {
      throw RangeError("rational division by zero");
    }
    return a * Rational(b.den_, b.num_);
  }
  Rational &operator+=(const Rational &o) { return *this = *this + o; }
  Rational &operator-=(const Rational &o) { return *this = *this - o; }
  Rational &operator*=(const Rational &o) { return *this = *this * o; }
  Rational &operator/=(const Rational &o) { return *this = *this / o; }

  friend bool operator==(const Rational &a, const Rational &b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational &a, const Rational &b) noexcept {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l <=> r;
  }

  /// Parses "p/q", an integer, or a terminating decimal such as "0.5".
  static Rational parse(std::string_view text);

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }
  friend std::ostream &operator<<(std::ostream &os, const Rational &r) { return os << r.str(); }

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;

  void assign(std::int64_t num, std::int64_t den) {
    if (den == 0) {
      throw RangeError("rational with zero denominator");
    }
    *this = from_wide(num, den);
  }

  static Rational from_wide(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
    if (n > lim || n < -lim || d > lim) {
      throw RangeError("rational overflow");
    }
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }
};

} // namespace codedmm
