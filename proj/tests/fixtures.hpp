#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "perfect/perfect.hpp"

namespace fixtures {

using perfect::Kernel;
using perfect::Rational;
using perfect::TransitionRule;

inline Rational r(const char* s) { return perfect::parse_rational(s); }

inline Kernel kernel(const std::vector<std::vector<const char*>>& rows) {
  std::vector<std::vector<Rational>> q;
  for (const auto& row : rows) {
    q.emplace_back();
    for (const char* v : row) q.back().push_back(r(v));
  }
  return Kernel::from_rows(q);
}

/// Lazy walk on {0,1,2} with reflection at the ends.
inline Kernel toy_kernel() { return kernel({{"1/2", "1/2", "0"}, {"1/2", "0", "1/2"}, {"0", "1/2", "1/2"}}); }

/// u = 0 maps 0,1,2 to 0,0,1; u = 1 maps them to 1,2,2.
inline TransitionRule toy_monotone_rule() {
  return TransitionRule(3, {"0", "1"}, {r("1/2"), r("1/2")}, {{0, 0, 1}, {1, 2, 2}});
}

inline Kernel sticky_kernel() { return kernel({{"3/4", "1/4", "0"}, {"1/2", "0", "1/2"}, {"0", "1/4", "3/4"}}); }

inline perfect::Dist uniform3() { return perfect::Dist::uniform(3); }

inline perfect::Dist sticky_pi() { return perfect::Dist({r("2/5"), r("1/5"), r("2/5")}); }

inline std::vector<Rational> rats(const std::vector<const char*>& v) {
  std::vector<Rational> out;
  for (const char* s : v) out.push_back(r(s));
  return out;
}

}  // namespace fixtures

namespace fixtures {

/// A chain driven by a random explicit rule, kept only if irreducible with
/// strictly positive stationary law.
struct RandomChain {
  perfect::TransitionRule rule;
  perfect::Kernel kernel;
  perfect::Dist pi;
};

inline std::optional<RandomChain> try_random_chain(perfect::RngStream& rng, std::size_t n, std::size_t labels) {
  std::vector<std::string> names;
  std::vector<Rational> mu;
  std::vector<std::vector<perfect::State>> table;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> raw;
  for (std::size_t u = 0; u < labels; ++u) {
    raw.push_back(1 + rng.uniform_below(4));
    total += raw.back();
  }
  for (std::size_t u = 0; u < labels; ++u) {
    names.push_back("u" + std::to_string(u));
    mu.emplace_back(static_cast<unsigned long>(raw[u]), static_cast<unsigned long>(total));
    mu.back().canonicalize();
    std::vector<perfect::State> images;
    for (std::size_t x = 0; x < n; ++x) images.push_back(rng.uniform_below(n));
    table.push_back(std::move(images));
  }
  perfect::TransitionRule rule(n, names, mu, table);
  perfect::Kernel k = perfect::kernel_from_rule(rule);
  try {
    perfect::Dist pi = perfect::solve_stationary(k);
    if (!pi.strictly_positive()) return std::nullopt;
    return RandomChain{std::move(rule), std::move(k), std::move(pi)};
  } catch (const perfect::Error&) {
    return std::nullopt;
  }
}

inline RandomChain random_chain(perfect::RngStream& rng, std::size_t max_states = 4, std::size_t max_labels = 3) {
  for (;;) {
    const std::size_t n = 1 + rng.uniform_below(max_states);
    const std::size_t labels = 1 + rng.uniform_below(max_labels);
    if (auto c = try_random_chain(rng, n, labels)) return std::move(*c);
  }
}

/// Random rule that is monotone for the chain order 0 < 1 < ... < n-1:
/// each label is a nondecreasing map.
inline std::optional<RandomChain> try_random_monotone_chain(perfect::RngStream& rng, std::size_t n,
                                                            std::size_t labels) {
  std::vector<std::string> names;
  std::vector<Rational> mu;
  std::vector<std::vector<perfect::State>> table;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> raw;
  for (std::size_t u = 0; u < labels; ++u) {
    raw.push_back(1 + rng.uniform_below(4));
    total += raw.back();
  }
  for (std::size_t u = 0; u < labels; ++u) {
    names.push_back("u" + std::to_string(u));
    mu.emplace_back(static_cast<unsigned long>(raw[u]), static_cast<unsigned long>(total));
    mu.back().canonicalize();
    std::vector<perfect::State> images;
    for (std::size_t x = 0; x < n; ++x) images.push_back(rng.uniform_below(n));
    std::sort(images.begin(), images.end());
    table.push_back(std::move(images));
  }
  perfect::TransitionRule rule(n, names, mu, table);
  perfect::Kernel k = perfect::kernel_from_rule(rule);
  try {
    perfect::Dist pi = perfect::solve_stationary(k);
    if (!pi.strictly_positive()) return std::nullopt;
    return RandomChain{std::move(rule), std::move(k), std::move(pi)};
  } catch (const perfect::Error&) {
    return std::nullopt;
  }
}

inline RandomChain random_monotone_chain(perfect::RngStream& rng, std::size_t max_states = 4,
                                         std::size_t max_labels = 3) {
  for (;;) {
    const std::size_t n = 1 + rng.uniform_below(max_states);
    const std::size_t labels = 1 + rng.uniform_below(max_labels);
    if (auto c = try_random_monotone_chain(rng, n, labels)) return std::move(*c);
  }
}

}  // namespace fixtures
