#ifndef CERTEVAL_RATIONAL_HPP_
#define CERTEVAL_RATIONAL_HPP_

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace certeval {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// "num/den" in lowest terms; integers render without the "/1".
inline std::string to_fraction_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace detail

// Exact parse of an integer, decimal, fraction, or scientific-notation
// literal. "0.5" becomes 1/2, "1.5e2" becomes 150, "3/2" stays 3/2.
// Returns nullopt on anything else; never loses precision.
inline std::optional<Rational> parse_rational(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;

  // a/b form
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::string_view num = s.substr(0, slash);
    std::string_view den = s.substr(slash + 1);
    if (!detail::all_digits(num) || !detail::all_digits(den)) return std::nullopt;
    BigInt d{std::string(den)};
    if (d == 0) return std::nullopt;
    Rational r{BigInt{std::string(num)}, d};
    return negative ? -r : r;
  }

  // [digits][.digits][e[sign]digits]
  long long exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp = s.substr(e + 1);
    bool exp_neg = false;
    if (!exp.empty() && (exp.front() == '+' || exp.front() == '-')) {
      exp_neg = exp.front() == '-';
      exp.remove_prefix(1);
    }
    if (!detail::all_digits(exp) || exp.size() > 6) return std::nullopt;
    exp10 = std::stoll(std::string(exp));
    if (exp_neg) exp10 = -exp10;
    s = s.substr(0, e);
  }

  std::string digits;
  long long frac_digits = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot);
    std::string_view fp = s.substr(dot + 1);
    if (ip.empty() && fp.empty()) return std::nullopt;
    if (!ip.empty() && !detail::all_digits(ip)) return std::nullopt;
    if (!fp.empty() && !detail::all_digits(fp)) return std::nullopt;
    digits = std::string(ip) + std::string(fp);
    frac_digits = static_cast<long long>(fp.size());
  } else {
    if (!detail::all_digits(s)) return std::nullopt;
    digits = std::string(s);
  }
  if (digits.empty()) return std::nullopt;

  Rational r{BigInt{digits}};
  long long net = exp10 - frac_digits;
  BigInt scale = 1;
  for (long long i = 0; i < (net < 0 ? -net : net); ++i) scale *= 10;
  if (net >= 0)
    r *= scale;
  else
    r /= scale;
  return negative ? -r : r;
}

}  // namespace certeval

#endif  // CERTEVAL_RATIONAL_HPP_
