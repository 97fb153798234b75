#pragma once

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cmdim {

using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& q) {
  if (q.denominator() == 1) return std::to_string(q.numerator());
  return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

inline double to_double(const Rational& q) {
  return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

// accepts "p", "p/q" and finite decimals like "0.25"
inline Rational parse_rational(const std::string& text) {
  auto fail = [&] { throw std::invalid_argument("not a rational: '" + text + "'"); };
  if (text.empty()) fail();
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      std::size_t used = 0;
      auto num = std::stoll(text.substr(0, slash), &used);
      if (used != slash) fail();
      auto den_text = text.substr(slash + 1);
      auto den = std::stoll(den_text, &used);
      if (used != den_text.size() || den == 0) fail();
      return Rational(num, den);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
      std::size_t used = 0;
      auto v = std::stoll(text, &used);
      if (used != text.size()) fail();
      return Rational(v);
    }
    bool neg = text[0] == '-';
    std::string whole = text.substr(neg ? 1 : 0, dot - (neg ? 1 : 0));
    std::string frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 15) fail();
    for (char c : whole + frac)
      if (c < '0' || c > '9') fail();
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    std::int64_t num = (whole.empty() ? 0 : std::stoll(whole)) * den + std::stoll(frac);
    return Rational(neg ? -num : num, den);
  } catch (const std::invalid_argument&) {
    fail();
  } catch (const std::out_of_range&) {
    fail();
  }
  return {};
}

inline std::int64_t ceil_of(const Rational& q) {
  auto n = q.numerator(), d = q.denominator();
  return n >= 0 ? (n + d - 1) / d : -((-n) / d);
}

inline std::int64_t floor_of(const Rational& q) {
  auto n = q.numerator(), d = q.denominator();
  return n >= 0 ? n / d : -((-n + d - 1) / d);
}

}  // namespace cmdim
