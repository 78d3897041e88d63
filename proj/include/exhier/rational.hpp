#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace exhier {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Comparison policy per scalar type. Doubles use an absolute tolerance,
// rationals compare exactly.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  static constexpr double tol = 1e-12;
  static bool eq(double a, double b) { return std::abs(a - b) <= tol; }
  static bool le(double a, double b) { return a <= b + tol; }
  static bool lt(double a, double b) { return a < b - tol; }
  static bool positive(double a) { return a > tol; }
  static double to_double(double a) { return a; }
  static double from_rational(const Rational& r) { return r.convert_to<double>(); }
  static double from_int(std::int64_t v) { return static_cast<double>(v); }
};

template <>
struct scalar_traits<Rational> {
  static bool eq(const Rational& a, const Rational& b) { return a == b; }
  static bool le(const Rational& a, const Rational& b) { return a <= b; }
  static bool lt(const Rational& a, const Rational& b) { return a < b; }
  static bool positive(const Rational& a) { return a > 0; }
  static double to_double(const Rational& a) { return a.convert_to<double>(); }
  static Rational from_rational(const Rational& r) { return r; }
  static Rational from_int(std::int64_t v) { return Rational(v); }
};

inline Rational pow2_inv(unsigned d) {
  BigInt den = 1;
  den <<= d;
  return Rational(BigInt(1), den);
}

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "p/q", integers and plain decimals ("0.25" -> 1/4).
inline Rational parse_rational(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty rational");
  auto parse_int = [](std::string_view s) {
    if (s.empty()) throw std::invalid_argument("bad integer");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw std::invalid_argument("bad integer");
    for (std::size_t k = i; k < s.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(s[k])))
        throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    return BigInt(std::string(s));
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt p = parse_int(trim(text.substr(0, slash)));
    BigInt q = parse_int(trim(text.substr(slash + 1)));
    if (q == 0) throw std::invalid_argument("zero denominator");
    return Rational(p, q);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string digits(text.substr(0, dot));
    std::string frac(text.substr(dot + 1));
    if (digits.empty() || digits == "-" || digits == "+") digits += "0";
    BigInt den = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) den *= 10;
    bool neg = !digits.empty() && digits[0] == '-';
    BigInt whole = parse_int(digits);
    BigInt f = frac.empty() ? BigInt(0) : parse_int(frac);
    if (neg) f = -f;
    return Rational(whole * den + f, den);
  }
  return Rational(parse_int(text));
}

}  // namespace exhier
