#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "perfect/chain.hpp"

namespace perfect {

struct EmpiricalLaw {
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;

  EmpiricalLaw() = default;
  explicit EmpiricalLaw(std::size_t states) : counts(states, 0) {}

  void add(State x, std::uint64_t times = 1) {
    counts.at(x) += times;
    n += times;
  }
};

inline double tv_distance(const EmpiricalLaw& e, const std::vector<double>& target) {
  require(e.n > 0, ErrorKind::EmptySample, "empty sample");
  require(e.counts.size() == target.size(), ErrorKind::Validation, "law sizes differ");
  double total = 0.0;
  for (std::size_t x = 0; x < target.size(); ++x)
    total += std::abs(static_cast<double>(e.counts[x]) / static_cast<double>(e.n) - target[x]);
  return total / 2;
}

inline double tv_distance(const EmpiricalLaw& e, const Dist& target) {
  return tv_distance(e, to_doubles(target.weights()));
}

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  bool low_expected = false;  // some expected count below 5
};

/// Upper tail of the chi-square law with `dof` degrees of freedom.
inline double chi_square_tail(double statistic, std::size_t dof) {
  if (dof == 0) return 1.0;
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(dof) / 2, statistic / 2);
}

/// Pearson goodness of fit. Cells with zero target mass must be empty and
/// are dropped from the degrees of freedom.
inline ChiSquare chi_square_gof(const EmpiricalLaw& e, const std::vector<double>& target) {
  require(e.n > 0, ErrorKind::EmptySample, "empty sample");
  require(e.counts.size() == target.size(), ErrorKind::Validation, "law sizes differ");
  ChiSquare out;
  std::size_t cells = 0;
  for (std::size_t x = 0; x < target.size(); ++x) {
    const double expected = static_cast<double>(e.n) * target[x];
    if (target[x] == 0) {
      if (e.counts[x] > 0) out.statistic = INFINITY;
      continue;
    }
    ++cells;
    if (expected < 5) out.low_expected = true;
    const double diff = static_cast<double>(e.counts[x]) - expected;
    out.statistic += diff * diff / expected;
  }
  out.dof = cells > 0 ? cells - 1 : 0;
  out.p_value = std::isinf(out.statistic) ? 0.0 : chi_square_tail(out.statistic, out.dof);
  return out;
}

inline ChiSquare chi_square_gof(const EmpiricalLaw& e, const Dist& target) {
  return chi_square_gof(e, to_doubles(target.weights()));
}

/// Contingency-table test of independence between the two coordinates.
/// Categories are taken as given; bucket unbounded ones before calling.
inline ChiSquare independence_chi_square(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs) {
  require(!pairs.empty(), ErrorKind::EmptySample, "empty sample");
  std::map<std::uint64_t, std::size_t> rows, cols;
  for (const auto& [a, b] : pairs) {
    rows.emplace(a, 0);
    cols.emplace(b, 0);
  }
  std::size_t i = 0;
  for (auto& [key, idx] : rows) idx = i++;
  i = 0;
  for (auto& [key, idx] : cols) idx = i++;

  std::vector<std::vector<double>> table(rows.size(), std::vector<double>(cols.size(), 0.0));
  for (const auto& [a, b] : pairs) table[rows[a]][cols[b]] += 1;
  std::vector<double> row_sum(rows.size(), 0.0), col_sum(cols.size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      row_sum[r] += table[r][c];
      col_sum[c] += table[r][c];
    }
  const double n = static_cast<double>(pairs.size());

  ChiSquare out;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double expected = row_sum[r] * col_sum[c] / n;
      if (expected < 5) out.low_expected = true;
      const double diff = table[r][c] - expected;
      out.statistic += diff * diff / expected;
    }
  out.dof = (rows.size() - 1) * (cols.size() - 1);
  out.p_value = chi_square_tail(out.statistic, out.dof);
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& xs) {
  require(!xs.empty(), ErrorKind::EmptySample, "empty sample");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace perfect
