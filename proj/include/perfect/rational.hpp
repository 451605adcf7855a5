#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "perfect/error.hpp"

namespace perfect {

/// Exact probabilities. Everything outside the stats module stays rational.
using Rational = mpq_class;

/// Parses "p/q" or "p" (optional leading '-'). Decimal notation is rejected.
inline Rational parse_rational(const std::string& text) {
  static const std::regex kPattern(R"(^-?[0-9]+(/[0-9]+)?$)");
  if (!std::regex_match(text, kPattern)) {
    fail(ErrorKind::Validation, "not an exact rational \"p/q\": \"" + text + "\"");
  }
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    mpz_class den(text.substr(slash + 1), 10);
    if (den == 0) fail(ErrorKind::Validation, "zero denominator in \"" + text + "\"");
  }
  Rational value(text, 10);
  value.canonicalize();
  return value;
}

/// Always renders "p/q", including integers ("1/1", "0/1").
inline std::string to_string(const Rational& value) {
  return value.get_num().get_str() + "/" + value.get_den().get_str();
}

inline double to_double(const Rational& value) { return value.get_d(); }

inline Rational sum(std::span<const Rational> values) {
  Rational total = 0;
  for (const auto& v : values) total += v;
  return total;
}

inline std::vector<double> to_doubles(std::span<const Rational> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(v.get_d());
  return out;
}

}  // namespace perfect
