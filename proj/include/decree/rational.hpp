#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include "decree/error.hpp"

namespace decree {

// Exact rational with a positive denominator, always in lowest terms.
// Used for simulator factors so that cost arithmetic never rounds.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
    if (d == 0) throw Error("rational with zero denominator");
    normalize();
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Accepts "-12", "1.25", "3/4".
  static std::optional<Rational> parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      auto n = parse_int(text.substr(0, slash));
      auto d = parse_int(text.substr(slash + 1));
      if (!n || !d || *d <= 0) return std::nullopt;
      return Rational(*n, *d);
    }
    bool negative = text.front() == '-';
    std::string_view body = negative ? text.substr(1) : text;
    auto dot = body.find('.');
    std::string_view whole = body.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
    if (whole.empty() || (dot != std::string_view::npos && frac.empty())) return std::nullopt;
    if (frac.size() > 12) return std::nullopt;
    std::string digits(whole);
    digits += frac;
    auto n = parse_int(digits);
    if (!n) return std::nullopt;
    std::int64_t d = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) d *= 10;
    return Rational(negative ? -*n : *n, d);
  }

  // Decimal when the value terminates, "n/d" otherwise.
  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    std::int64_t d = den_;
    int twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
    int places = std::max(twos, fives);
    __int128 scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    __int128 scaled = static_cast<__int128>(num_) * (scale / den_);
    bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string digits = to_string_i128(scaled);
    while (digits.size() <= static_cast<std::size_t>(places)) digits.insert(digits.begin(), '0');
    digits.insert(digits.end() - places, '.');
    return (negative ? "-" : "") + digits;
  }

  // ceil(value * this) for a non-negative integer value.
  std::int64_t ceil_mul(std::int64_t value) const {
    __int128 p = static_cast<__int128>(value) * num_;
    __int128 q = p / den_;
    if (p % den_ != 0 && p > 0) ++q;
    return static_cast<std::int64_t>(q);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 l = static_cast<__int128>(a.num_) * b.den_;
    __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less
                 : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  static std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    if (s.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  }

  static std::string to_string_i128(__int128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
      out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return out;
  }

  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace decree
