#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "perfect/error.hpp"
#include "perfect/rational.hpp"
#include "perfect/rng.hpp"

namespace perfect {

/// States are dense indices into a StateSpace.
using State = std::size_t;

class StateSpace {
 public:
  StateSpace() = default;

  explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    require(!labels_.empty(), ErrorKind::Validation, "state space must be nonempty");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const bool inserted = index_.emplace(labels_[i], i).second;
      require(inserted, ErrorKind::Validation, "duplicate state label \"" + labels_[i] + "\"");
    }
  }

  /// States named "0", "1", ..., "n-1".
  static StateSpace indexed(std::size_t n) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    return StateSpace(std::move(labels));
  }

  std::size_t size() const { return labels_.size(); }
  const std::string& label(State s) const { return labels_.at(s); }
  const std::vector<std::string>& labels() const { return labels_; }

  std::optional<State> find(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  State index_of(std::string_view label) const {
    const auto found = find(label);
    if (!found) fail(ErrorKind::Validation, "unknown state \"" + std::string(label) + "\"");
    return *found;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, State> index_;
};

/// Probability vector with exact rational weights summing to one.
class Dist {
 public:
  Dist() = default;

  explicit Dist(std::vector<Rational> weights) : weights_(std::move(weights)) {
    require(!weights_.empty(), ErrorKind::Validation, "distribution must be nonempty");
    Rational total = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      require(weights_[i] >= 0, ErrorKind::Validation, "negative weight at index " + std::to_string(i));
      total += weights_[i];
    }
    require(total == 1, ErrorKind::Validation, "weights sum to " + perfect::to_string(total) + ", not 1");
  }

  static Dist point_mass(std::size_t n, State s) {
    std::vector<Rational> w(n, Rational(0));
    w.at(s) = 1;
    return Dist(std::move(w));
  }

  static Dist uniform(std::size_t n) { return Dist(std::vector<Rational>(n, Rational(1, n))); }

  std::size_t size() const { return weights_.size(); }
  const Rational& operator[](State s) const { return weights_[s]; }
  const std::vector<Rational>& weights() const { return weights_; }

  std::vector<State> support() const {
    std::vector<State> out;
    for (State s = 0; s < weights_.size(); ++s)
      if (weights_[s] > 0) out.push_back(s);
    return out;
  }

  bool strictly_positive() const {
    for (const auto& w : weights_)
      if (w <= 0) return false;
    return true;
  }

  friend bool operator==(const Dist& a, const Dist& b) { return a.weights_ == b.weights_; }

 private:
  std::vector<Rational> weights_;
};

/// Row-stochastic matrix over a finite state space.
class Kernel {
 public:
  Kernel() = default;

  explicit Kernel(std::vector<Dist> rows) : rows_(std::move(rows)) {
    require(!rows_.empty(), ErrorKind::Validation, "kernel must have at least one row");
    for (std::size_t x = 0; x < rows_.size(); ++x) {
      require(rows_[x].size() == rows_.size(), ErrorKind::Validation,
              "kernel row " + std::to_string(x) + " has wrong length");
    }
  }

  /// Builds a kernel from raw rows, validating each as a distribution.
  static Kernel from_rows(const std::vector<std::vector<Rational>>& rows) {
    std::vector<Dist> dists;
    dists.reserve(rows.size());
    for (const auto& r : rows) dists.emplace_back(r);
    return Kernel(std::move(dists));
  }

  static Kernel identity(std::size_t n) {
    std::vector<Dist> rows;
    for (State x = 0; x < n; ++x) rows.push_back(Dist::point_mass(n, x));
    return Kernel(std::move(rows));
  }

  std::size_t size() const { return rows_.size(); }
  const Rational& operator()(State x, State y) const { return rows_[x][y]; }
  const Dist& row(State x) const { return rows_.at(x); }

  Kernel operator*(const Kernel& other) const {
    require(size() == other.size(), ErrorKind::Validation, "kernel size mismatch");
    const std::size_t n = size();
    std::vector<std::vector<Rational>> out(n, std::vector<Rational>(n, Rational(0)));
    for (State x = 0; x < n; ++x)
      for (State m = 0; m < n; ++m) {
        if ((*this)(x, m) == 0) continue;
        for (State y = 0; y < n; ++y) out[x][y] += (*this)(x, m) * other(m, y);
      }
    return from_rows(out);
  }

  Kernel power(std::size_t t) const {
    Kernel result = identity(size());
    for (std::size_t i = 0; i < t; ++i) result = result * *this;
    return result;
  }

  /// Row vector times kernel: (v K)(y) = sum_x v(x) K(x, y).
  std::vector<Rational> apply_left(const std::vector<Rational>& v) const {
    std::vector<Rational> out(size(), Rational(0));
    for (State x = 0; x < size(); ++x) {
      if (v[x] == 0) continue;
      for (State y = 0; y < size(); ++y) out[y] += v[x] * (*this)(x, y);
    }
    return out;
  }

  friend bool operator==(const Kernel& a, const Kernel& b) { return a.rows_ == b.rows_; }

 private:
  std::vector<Dist> rows_;
};

inline bool is_stationary(const Kernel& k, const Dist& pi) {
  return pi.size() == k.size() && k.apply_left(pi.weights()) == pi.weights();
}

/// Solves pi K = pi, sum(pi) = 1 exactly.
///
/// Transient states are allowed and receive zero mass; more than one closed
/// communicating class is rejected because the solution is then not unique.
inline Dist solve_stationary(const Kernel& k) {
  const std::size_t n = k.size();
  // reach[x][y]: y reachable from x in zero or more steps.
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (State x = 0; x < n; ++x) {
    std::vector<State> stack{x};
    reach[x][x] = 1;
    while (!stack.empty()) {
      const State a = stack.back();
      stack.pop_back();
      for (State b = 0; b < n; ++b)
        if (k(a, b) > 0 && !reach[x][b]) {
          reach[x][b] = 1;
          stack.push_back(b);
        }
    }
  }
  // x is recurrent iff everything reachable from x reaches back.
  std::vector<char> assigned(n, 0);
  std::size_t closed_classes = 0;
  for (State x = 0; x < n; ++x) {
    if (assigned[x]) continue;
    bool closed = true;
    for (State y = 0; y < n; ++y)
      if (reach[x][y] && !reach[y][x]) closed = false;
    if (!closed) continue;
    ++closed_classes;
    for (State y = 0; y < n; ++y)
      if (reach[x][y]) assigned[y] = 1;
  }
  require(closed_classes == 1, ErrorKind::ReducibleChain,
          "chain has " + std::to_string(closed_classes) + " closed communicating classes");

  // (K^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1, Rational(0)));
  for (State y = 0; y + 1 < n; ++y) {
    for (State x = 0; x < n; ++x) a[y][x] = k(x, y);
    a[y][y] -= 1;
  }
  for (State x = 0; x < n; ++x) a[n - 1][x] = 1;
  a[n - 1][n] = 1;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    require(pivot < n, ErrorKind::ReducibleChain, "singular stationary system");
    std::swap(a[pivot], a[col]);
    const Rational inv = 1 / a[col][col];
    for (std::size_t j = col; j <= n; ++j) a[col][j] *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational factor = a[r][col];
      for (std::size_t j = col; j <= n; ++j) a[r][j] -= factor * a[col][j];
    }
  }
  std::vector<Rational> pi(n);
  for (State x = 0; x < n; ++x) pi[x] = a[x][n];
  return Dist(std::move(pi));
}

/// Time reversal: Krev(y, x) = pi(x) K(x, y) / pi(y).
inline Kernel reverse_kernel(const Kernel& k, const Dist& pi) {
  require(pi.size() == k.size(), ErrorKind::Validation, "pi and kernel sizes differ");
  for (State x = 0; x < pi.size(); ++x)
    require(pi[x] > 0, ErrorKind::ZeroMassState, "pi(" + std::to_string(x) + ") = 0");
  require(is_stationary(k, pi), ErrorKind::NotStationary, "pi K != pi");
  const std::size_t n = k.size();
  std::vector<std::vector<Rational>> rows(n, std::vector<Rational>(n));
  for (State y = 0; y < n; ++y)
    for (State x = 0; x < n; ++x) rows[y][x] = pi[x] * k(x, y) / pi[y];
  return Kernel::from_rows(rows);
}

/// Time reversal restricted to supp(pi). Rows of pi-null states are never
/// reached from the support and are left as point masses.
inline Kernel reverse_kernel_on_support(const Kernel& k, const Dist& pi) {
  require(pi.size() == k.size(), ErrorKind::Validation, "pi and kernel sizes differ");
  require(is_stationary(k, pi), ErrorKind::NotStationary, "pi K != pi");
  const std::size_t n = k.size();
  std::vector<std::vector<Rational>> rows(n, std::vector<Rational>(n));
  for (State y = 0; y < n; ++y) {
    if (pi[y] == 0) {
      rows[y][y] = 1;
      continue;
    }
    for (State x = 0; x < n; ++x) rows[y][x] = pi[x] * k(x, y) / pi[y];
  }
  return Kernel::from_rows(rows);
}

/// One exact sampler per kernel row.
class KernelSampler {
 public:
  KernelSampler() = default;

  explicit KernelSampler(const Kernel& k) {
    rows_.reserve(k.size());
    for (State x = 0; x < k.size(); ++x) rows_.emplace_back(k.row(x).weights());
  }

  State step(State x, RngStream& rng) const { return rows_[x].draw(rng); }

 private:
  std::vector<DiscreteSampler> rows_;
};

}  // namespace perfect
