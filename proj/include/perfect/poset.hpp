#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfect/chain.hpp"
#include "perfect/rule.hpp"

namespace perfect {

inline constexpr std::uint64_t kDefaultDownSetCap = std::uint64_t{1} << 20;

/// Finite partial order with a bottom and a top element.
class Poset {
 public:
  Poset() = default;

  /// Reflexive-transitive closure of `relations` (pairs x <= y).
  Poset(std::size_t n, const std::vector<std::pair<State, State>>& relations) : n_(n), leq_(n * n, 0) {
    require(n > 0, ErrorKind::Validation, "poset must be nonempty");
    for (State x = 0; x < n; ++x) leq_[x * n + x] = 1;
    for (const auto& [a, b] : relations) {
      require(a < n && b < n, ErrorKind::Validation, "poset relation references unknown state");
      leq_[a * n + b] = 1;
    }
    for (State m = 0; m < n; ++m)
      for (State a = 0; a < n; ++a)
        if (leq_[a * n + m])
          for (State b = 0; b < n; ++b)
            if (leq_[m * n + b]) leq_[a * n + b] = 1;
    for (State a = 0; a < n; ++a)
      for (State b = 0; b < n; ++b)
        require(a == b || !(leq(a, b) && leq(b, a)), ErrorKind::Validation,
                "poset relation is not antisymmetric (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    bool found_bottom = false;
    bool found_top = false;
    for (State c = 0; c < n; ++c) {
      bool below_all = true;
      bool above_all = true;
      for (State x = 0; x < n; ++x) {
        below_all = below_all && leq(c, x);
        above_all = above_all && leq(x, c);
      }
      if (below_all) bottom_ = c, found_bottom = true;
      if (above_all) top_ = c, found_top = true;
    }
    require(found_bottom, ErrorKind::Validation, "poset has no bottom element");
    require(found_top, ErrorKind::Validation, "poset has no top element");
  }

  /// The chain order[0] < order[1] < ...
  static Poset total_order(const std::vector<State>& order) {
    std::vector<std::pair<State, State>> rel;
    for (std::size_t i = 1; i < order.size(); ++i) rel.emplace_back(order[i - 1], order[i]);
    return Poset(order.size(), rel);
  }

  /// 0 < 1 < ... < n-1.
  static Poset chain(std::size_t n) {
    std::vector<State> order(n);
    for (State i = 0; i < n; ++i) order[i] = i;
    return total_order(order);
  }

  std::size_t size() const { return n_; }
  bool leq(State x, State y) const { return leq_[x * n_ + y] != 0; }
  State bottom() const { return bottom_; }
  State top() const { return top_; }

  /// States sorted so every element precedes everything strictly above it.
  std::vector<State> linear_extension() const {
    std::vector<State> order(n_);
    std::vector<std::size_t> below(n_, 0);
    for (State x = 0; x < n_; ++x) {
      order[x] = x;
      for (State y = 0; y < n_; ++y) below[x] += leq(y, x);
    }
    std::stable_sort(order.begin(), order.end(), [&](State a, State b) { return below[a] < below[b]; });
    return order;
  }

  /// Calls visit(membership) once per down-set. Throws PosetTooLarge past cap.
  void for_each_down_set(const std::function<void(const std::vector<char>&)>& visit,
                         std::uint64_t cap = kDefaultDownSetCap) const {
    const auto order = linear_extension();
    std::vector<char> member(n_, 0);
    std::uint64_t count = 0;
    std::function<void(std::size_t)> recurse = [&](std::size_t i) {
      if (i == order.size()) {
        require(++count <= cap, ErrorKind::PosetTooLarge, "down-set count exceeds cap " + std::to_string(cap));
        visit(member);
        return;
      }
      const State x = order[i];
      recurse(i + 1);
      for (State y = 0; y < n_; ++y)
        if (y != x && leq(y, x) && !member[y]) return;
      member[x] = 1;
      recurse(i + 1);
      member[x] = 0;
    };
    recurse(0);
  }

  std::vector<std::vector<State>> down_sets(std::uint64_t cap = kDefaultDownSetCap) const {
    std::vector<std::vector<State>> out;
    for_each_down_set(
        [&](const std::vector<char>& m) {
          std::vector<State> set;
          for (State x = 0; x < n_; ++x)
            if (m[x]) set.push_back(x);
          out.push_back(std::move(set));
        },
        cap);
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<char> leq_;
  State bottom_ = 0;
  State top_ = 0;
};

struct DominanceWitness {
  State x;
  State y;
  std::vector<State> down_set;
};

struct DominanceCheck {
  bool holds = true;
  std::optional<DominanceWitness> witness;
};

namespace detail {

/// Checks first(x, .) <= second(y, .) stochastically for x <= y (x != y
/// unless include_diagonal), over every down-set.
inline DominanceCheck check_dominance(const Kernel& first, const Kernel& second, const Poset& p, bool include_diagonal,
                                      std::uint64_t cap) {
  require(first.size() == p.size() && second.size() == p.size(), ErrorKind::Validation, "kernel/poset size mismatch");
  const std::size_t n = p.size();
  std::vector<std::pair<State, State>> pairs;
  for (State x = 0; x < n; ++x)
    for (State y = 0; y < n; ++y)
      if (p.leq(x, y) && (include_diagonal || x != y)) pairs.emplace_back(x, y);
  DominanceCheck result;
  p.for_each_down_set(
      [&](const std::vector<char>& member) {
        if (!result.holds) return;
        for (const auto& [x, y] : pairs) {
          Rational mass_x = 0, mass_y = 0;
          for (State z = 0; z < n; ++z)
            if (member[z]) {
              mass_x += first(x, z);
              mass_y += second(y, z);
            }
          if (mass_x < mass_y) {
            std::vector<State> set;
            for (State z = 0; z < n; ++z)
              if (member[z]) set.push_back(z);
            result.holds = false;
            result.witness = DominanceWitness{x, y, std::move(set)};
            return;
          }
        }
      },
      cap);
  return result;
}

}  // namespace detail

/// K(x, .) <= K(y, .) stochastically whenever x <= y.
inline DominanceCheck is_stochastically_monotone(const Kernel& k, const Poset& p,
                                                 std::uint64_t cap = kDefaultDownSetCap) {
  return detail::check_dominance(k, k, p, false, cap);
}

/// K(x, .) <= L(y, .) stochastically whenever x <= y.
inline DominanceCheck is_cross_monotone(const Kernel& k, const Kernel& l, const Poset& p,
                                        std::uint64_t cap = kDefaultDownSetCap) {
  return detail::check_dominance(k, l, p, true, cap);
}

struct RuleMonotonicityWitness {
  State x;
  State y;
  Label u;
};

struct RuleMonotonicity {
  bool holds = true;
  std::optional<RuleMonotonicityWitness> witness;
};

/// phi_lower(x, u) <= phi_upper(y, u) for every u and every x <= y.
inline RuleMonotonicity is_cross_monotone(const TransitionRule& lower, const TransitionRule& upper, const Poset& p) {
  require(lower.label_count() == upper.label_count(), ErrorKind::Validation,
          "cross-monotone rules must share their label set");
  for (Label u = 0; u < lower.label_count(); ++u)
    for (State x = 0; x < p.size(); ++x)
      for (State y = 0; y < p.size(); ++y)
        if (p.leq(x, y) && !p.leq(lower.apply(x, u), upper.apply(y, u)))
          return {false, RuleMonotonicityWitness{x, y, u}};
  return {};
}

inline RuleMonotonicity is_realizably_monotone(const TransitionRule& rule, const Poset& p) {
  require(rule.state_count() == p.size(), ErrorKind::Validation, "rule/poset size mismatch");
  return is_cross_monotone(rule, rule, p);
}

/// Kernels M_{xy}, x <= y, stored row by row: row(x, y, x') = M_{xy}(x', .).
/// Rows may be undefined where they can never be consulted.
class UpwardKernelFamily {
 public:
  UpwardKernelFamily() = default;
  explicit UpwardKernelFamily(std::size_t n) : n_(n), rows_(n * n * n) {}

  std::size_t size() const { return n_; }

  void set_row(State x, State y, State from, Dist row) {
    require(row.size() == n_, ErrorKind::Validation, "upward row has wrong length");
    rows_[index(x, y, from)] = std::move(row);
  }

  bool has_row(State x, State y, State from) const { return rows_[index(x, y, from)].has_value(); }

  const Dist& row(State x, State y, State from) const {
    const auto& r = rows_[index(x, y, from)];
    if (!r) {
      fail(ErrorKind::UndefinedUpwardRow, "M_{" + std::to_string(x) + "," + std::to_string(y) + "}(" +
                                              std::to_string(from) + ", .) is undefined");
    }
    return *r;
  }

 private:
  std::size_t index(State x, State y, State from) const { return (x * n_ + y) * n_ + from; }

  std::size_t n_ = 0;
  std::vector<std::optional<Dist>> rows_;
};

struct UpwardFamilyCheck {
  bool upward = true;
  bool consistent = true;
  std::string problem;
  bool ok() const { return upward && consistent; }
};

/// Verifies M_{xy}(x', z) > 0 => x' <= z and sum_{x'} K(x, x') M_{xy}(x', z) = target(y, z)
/// for all x <= y. target is K for single-kernel families, L for cross-SM.
inline UpwardFamilyCheck check_upward_family(const UpwardKernelFamily& m, const Kernel& k, const Kernel& target,
                                             const Poset& p) {
  UpwardFamilyCheck out;
  const std::size_t n = p.size();
  for (State x = 0; x < n; ++x)
    for (State y = 0; y < n; ++y) {
      if (!p.leq(x, y)) continue;
      std::vector<Rational> mix(n, Rational(0));
      for (State from = 0; from < n; ++from) {
        if (k(x, from) == 0) continue;
        if (!m.has_row(x, y, from)) {
          out.consistent = false;
          out.problem = "missing row M_{" + std::to_string(x) + "," + std::to_string(y) + "}(" + std::to_string(from) + ")";
          return out;
        }
        const Dist& r = m.row(x, y, from);
        for (State z = 0; z < n; ++z) {
          if (r[z] > 0 && !p.leq(from, z)) {
            out.upward = false;
            out.problem = "row M_{" + std::to_string(x) + "," + std::to_string(y) + "}(" + std::to_string(from) +
                          ") puts mass below its start";
            return out;
          }
          mix[z] += k(x, from) * r[z];
        }
      }
      if (mix != target.row(y).weights()) {
        out.consistent = false;
        out.problem = "mixing identity fails for x=" + std::to_string(x) + ", y=" + std::to_string(y);
        return out;
      }
    }
  return out;
}

/// Law of phi_upper(y, U) given phi_lower(x, U) = from, U ~ mu.
/// Throws UnreachableConditioning when the conditioning event is null.
inline Dist conditional_upward_row(const TransitionRule& lower, const TransitionRule& upper, State x, State y,
                                   State from) {
  const std::size_t n = lower.state_count();
  std::vector<Rational> row(n, Rational(0));
  Rational mass = 0;
  for (Label u = 0; u < lower.label_count(); ++u) {
    if (lower.apply(x, u) != from) continue;
    const Rational w = lower.weight(u);
    row[upper.apply(y, u)] += w;
    mass += w;
  }
  require(mass > 0, ErrorKind::UnreachableConditioning,
          "K(" + std::to_string(x) + ", " + std::to_string(from) + ") = 0");
  for (auto& v : row) v /= mass;
  return Dist(std::move(row));
}

/// M_{xy}(x', .) = law of phi_upper(y, U) given phi_lower(x, U) = x'.
/// Rows with K(x, x') = 0 are left undefined.
inline UpwardKernelFamily upward_family_from_rules(const TransitionRule& lower, const TransitionRule& upper,
                                                   const Poset& p) {
  const auto mono = is_cross_monotone(lower, upper, p);
  require(mono.holds, ErrorKind::NotMonotone, "rules are not (cross-)monotone for the poset");
  for (Label u = 0; u < lower.label_count(); ++u)
    require(lower.weight(u) == upper.weight(u), ErrorKind::Validation, "coupled rules must share mu");
  const std::size_t n = p.size();
  const Kernel k = kernel_from_rule(lower);
  UpwardKernelFamily family(n);
  for (State x = 0; x < n; ++x)
    for (State y = 0; y < n; ++y) {
      if (!p.leq(x, y)) continue;
      for (State from = 0; from < n; ++from)
        if (k(x, from) > 0) family.set_row(x, y, from, conditional_upward_row(lower, upper, x, y, from));
    }
  return family;
}

inline UpwardKernelFamily upward_family_from_rule(const TransitionRule& rule, const Poset& p) {
  return upward_family_from_rules(rule, rule, p);
}

/// Cross-SM setup: K drives the reversed chain, L the upper chain.
struct CrossSmConfig {
  Kernel k;
  Kernel l;
  Dist sigma;  // stationary for l
  Rational rho;  // sigma(bottom) / pi(bottom)
};

inline CrossSmConfig make_cross_sm_config(const Kernel& k, const Kernel& l, const Dist& pi, const Poset& p) {
  const auto cross = is_cross_monotone(k, l, p);
  require(cross.holds, ErrorKind::NotMonotone, "K(x, .) <= L(y, .) fails for some x <= y");
  Dist sigma = solve_stationary(l);
  require(pi[p.bottom()] > 0, ErrorKind::ZeroBottomMass, "pi(bottom) = 0");
  Rational rho = sigma[p.bottom()] / pi[p.bottom()];
  return CrossSmConfig{k, l, std::move(sigma), std::move(rho)};
}

}  // namespace perfect
