#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "perfect/chain.hpp"
#include "perfect/rule.hpp"
#include "perfect/trajectory.hpp"

namespace perfect {

/// Conditional law of U given phi(x_prev, U) = x_next.
///
/// Explicit rules store the support list. Product (independent-transitions)
/// rules store one marginal per coordinate: coordinate x_prev is pinned to
/// x_next and every other coordinate keeps its unconditioned marginal.
class ImputedDist {
 public:
  struct Coordinate {
    std::size_t digit;
    Rational weight;
  };

  static ImputedDist from_support(State prev, State next, std::vector<Label> support, std::vector<Rational> weights) {
    ImputedDist d;
    d.prev_ = prev;
    d.next_ = next;
    d.support_ = std::move(support);
    d.weights_ = std::move(weights);
    return d;
  }

  static ImputedDist factored(const TransitionRule& rule, State prev, State next, std::size_t pinned_digit) {
    ImputedDist d;
    d.prev_ = prev;
    d.next_ = next;
    d.rule_ = rule;
    d.coordinates_.resize(rule.state_count());
    for (State x = 0; x < rule.state_count(); ++x) {
      if (x == prev) {
        d.coordinates_[x].push_back({pinned_digit, Rational(1)});
        continue;
      }
      const auto& m = rule.marginals()[x];
      for (std::size_t j = 0; j < m.size(); ++j) d.coordinates_[x].push_back({j, m[j].weight});
    }
    return d;
  }

  bool is_factored() const { return rule_.has_value(); }
  State x_prev() const { return prev_; }
  State x_next() const { return next_; }
  const std::vector<std::vector<Coordinate>>& coordinates() const { return coordinates_; }

  std::uint64_t support_size() const {
    if (!is_factored()) return support_.size();
    std::uint64_t count = 1;
    for (const auto& c : coordinates_) count *= c.size();
    return count;
  }

  /// f(label, weight) for every support point.
  template <class F>
  void for_each(F&& f) const {
    if (!is_factored()) {
      for (std::size_t i = 0; i < support_.size(); ++i) f(support_[i], weights_[i]);
      return;
    }
    const std::size_t n = coordinates_.size();
    std::vector<std::size_t> pos(n, 0), digits(n);
    for (;;) {
      Rational w = 1;
      for (std::size_t x = 0; x < n; ++x) {
        digits[x] = coordinates_[x][pos[x]].digit;
        w *= coordinates_[x][pos[x]].weight;
      }
      f(rule_->encode(digits), w);
      std::size_t x = 0;
      while (x < n && ++pos[x] == coordinates_[x].size()) pos[x++] = 0;
      if (x == n) return;
    }
  }

  Rational weight(Label u) const {
    if (!is_factored()) {
      for (std::size_t i = 0; i < support_.size(); ++i)
        if (support_[i] == u) return weights_[i];
      return 0;
    }
    Rational w = 1;
    for (State x = 0; x < coordinates_.size(); ++x) {
      const std::size_t d = rule_->digit(x, u);
      Rational wx = 0;
      for (const auto& c : coordinates_[x])
        if (c.digit == d) wx = c.weight;
      w *= wx;
    }
    return w;
  }

 private:
  State prev_ = 0;
  State next_ = 0;
  std::vector<Label> support_;
  std::vector<Rational> weights_;
  std::optional<TransitionRule> rule_;
  std::vector<std::vector<Coordinate>> coordinates_;
};

/// weights(u) = mu(u) / K(x_prev, x_next) on {u : phi(x_prev, u) = x_next}.
inline ImputedDist impute_dist(const TransitionRule& rule, State x_prev, State x_next) {
  if (rule.is_product()) {
    const auto& m = rule.marginals()[x_prev];
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m[j].target == x_next) return ImputedDist::factored(rule, x_prev, x_next, j);
    fail(ErrorKind::ImpossibleTransition,
         "K(" + std::to_string(x_prev) + ", " + std::to_string(x_next) + ") = 0");
  }
  std::vector<Label> support;
  std::vector<Rational> weights;
  Rational mass = 0;
  for (Label u = 0; u < rule.label_count(); ++u) {
    if (rule.apply(x_prev, u) != x_next) continue;
    support.push_back(u);
    weights.push_back(rule.weight(u));
    mass += weights.back();
  }
  require(mass > 0, ErrorKind::ImpossibleTransition,
          "K(" + std::to_string(x_prev) + ", " + std::to_string(x_next) + ") = 0");
  for (auto& w : weights) w /= mass;
  return ImputedDist::from_support(x_prev, x_next, std::move(support), std::move(weights));
}

/// Cached samplers for repeated imputation draws.
class Imputer {
 public:
  explicit Imputer(const TransitionRule& rule) : rule_(rule), n_(rule.state_count()) {
    if (rule.is_product()) {
      for (const auto& m : rule.marginals()) {
        std::vector<Rational> w;
        for (const auto& c : m) w.push_back(c.weight);
        coordinates_.emplace_back(w);
      }
      return;
    }
    cells_.resize(n_ * n_);
    for (State prev = 0; prev < n_; ++prev) {
      std::vector<std::vector<Label>> support(n_);
      std::vector<std::vector<Rational>> weights(n_);
      for (Label u = 0; u < rule.label_count(); ++u) {
        const State next = rule.apply(prev, u);
        support[next].push_back(u);
        weights[next].push_back(rule.weight(u));
      }
      for (State next = 0; next < n_; ++next) {
        if (support[next].empty()) continue;
        const Rational mass = sum(weights[next]);
        for (auto& w : weights[next]) w /= mass;
        cells_[prev * n_ + next] = Cell{std::move(support[next]), DiscreteSampler(weights[next])};
      }
    }
  }

  Label draw(State prev, State next, RngStream& rng) const {
    if (rule_.is_product()) {
      const auto& m = rule_.marginals()[prev];
      std::vector<std::size_t> digits(n_);
      std::optional<std::size_t> pinned;
      for (std::size_t j = 0; j < m.size(); ++j)
        if (m[j].target == next) pinned = j;
      if (!pinned) {
        fail(ErrorKind::ImpossibleTransition, "K(" + std::to_string(prev) + ", " + std::to_string(next) + ") = 0");
      }
      for (State x = 0; x < n_; ++x) digits[x] = x == prev ? *pinned : coordinates_[x].draw(rng);
      return rule_.encode(digits);
    }
    const auto& cell = cells_[prev * n_ + next];
    if (!cell) {
      fail(ErrorKind::ImpossibleTransition, "K(" + std::to_string(prev) + ", " + std::to_string(next) + ") = 0");
    }
    return cell->support[cell->sampler.draw(rng)];
  }

 private:
  struct Cell {
    std::vector<Label> support;
    DiscreteSampler sampler;
  };

  TransitionRule rule_;
  std::size_t n_;
  std::vector<std::optional<Cell>> cells_;
  std::vector<DiscreteSampler> coordinates_;
};

/// u_s ~ impute_dist(rule, x_{s-1}, x_s) independently for s = 1..t.
inline DrivingSequence impute_sequence(const TransitionRule& rule, const Trajectory& traj, RngStream& rng) {
  const Imputer imputer(rule);
  DrivingSequence u;
  for (std::size_t s = 1; s < traj.states.size(); ++s) u.labels.push_back(imputer.draw(traj.at(s - 1), traj.at(s), rng));
  return u;
}

}  // namespace perfect
