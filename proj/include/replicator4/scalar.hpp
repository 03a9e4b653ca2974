#pragma once

// Scalar types shared by the exact and floating-point pipelines.

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "replicator4/errors.hpp"

namespace replicator4 {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

template <class T>
inline constexpr bool is_exact_v = false;
template <>
inline constexpr bool is_exact_v<Rational> = true;

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

inline double to_double(double v) { return v; }
inline double to_double(const Rational& v) { return v.convert_to<double>(); }

/// Zero test: exact for rationals, |v| <= atol for doubles.
template <Scalar T>
bool is_zero(const T& v, double atol) {
  if constexpr (is_exact_v<T>) {
    (void)atol;
    return v == 0;
  } else {
    return std::abs(v) <= atol;
  }
}

/// Sign in {-1, 0, +1} with the same zero convention as is_zero.
template <Scalar T>
int sign_of(const T& v, double atol) {
  if (is_zero(v, atol)) return 0;
  return v > 0 ? 1 : -1;
}

template <Scalar T>
T abs_value(const T& v) {
  return v < 0 ? T(-v) : v;
}

inline std::string format_scalar(const Rational& v) {
  const BigInt num = boost::multiprecision::numerator(v);
  const BigInt den = boost::multiprecision::denominator(v);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline std::string format_scalar(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

// Parses an optionally signed decimal literal with optional fraction and
// exponent ("-1", "0.25", "3e-2", ".5") into an exact rational.
inline Rational parse_decimal(std::string_view s, std::string_view whole) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    negative = s[pos] == '-';
    ++pos;
  }
  BigInt mantissa = 0;
  int frac_digits = 0;
  bool any_digit = false;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    mantissa = mantissa * 10 + (s[pos] - '0');
    any_digit = true;
    ++pos;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      mantissa = mantissa * 10 + (s[pos] - '0');
      ++frac_digits;
      any_digit = true;
      ++pos;
    }
  }
  if (!any_digit) fail(ErrorKind::ParseError, "not a number: '" + std::string(whole) + "'");
  long exponent = 0;
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    ++pos;
    bool exp_negative = false;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      exp_negative = s[pos] == '-';
      ++pos;
    }
    bool exp_digit = false;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      exponent = exponent * 10 + (s[pos] - '0');
      if (exponent > 4000) fail(ErrorKind::ParseError, "exponent out of range: '" + std::string(whole) + "'");
      exp_digit = true;
      ++pos;
    }
    if (!exp_digit) fail(ErrorKind::ParseError, "bad exponent: '" + std::string(whole) + "'");
    if (exp_negative) exponent = -exponent;
  }
  if (pos != s.size()) fail(ErrorKind::ParseError, "not a number: '" + std::string(whole) + "'");
  exponent -= frac_digits;
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(exponent < 0 ? -exponent : exponent));
  Rational value = exponent < 0 ? Rational(mantissa, scale) : Rational(mantissa * scale);
  return negative ? Rational(-value) : value;
}

}  // namespace detail

/// Parses "p/q", a decimal literal, or scientific notation exactly.
inline Rational parse_rational(std::string_view token) {
  if (token.empty()) fail(ErrorKind::ParseError, "empty number");
  const auto slash = token.find('/');
  if (slash == std::string_view::npos) return detail::parse_decimal(token, token);
  const Rational num = detail::parse_decimal(token.substr(0, slash), token);
  const Rational den = detail::parse_decimal(token.substr(slash + 1), token);
  if (den == 0) fail(ErrorKind::ParseError, "zero denominator: '" + std::string(token) + "'");
  return num / den;
}

template <Scalar T>
T scalar_from_rational(const Rational& r) {
  if constexpr (is_exact_v<T>) {
    return r;
  } else {
    return r.convert_to<double>();
  }
}

}  // namespace replicator4
