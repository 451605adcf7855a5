#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "perfect/chain.hpp"

namespace perfect {

/// Index of a driving value u in a rule's label set.
using Label = std::uint64_t;

inline constexpr std::uint64_t kDefaultLabelCap = 1'000'000;

/// A transition rule (phi, mu): X_s = phi(X_{s-1}, U_s) with U_s ~ mu.
///
/// Two representations share one interface:
///  - explicit: a finite label list, weights, and a table phi(x, u);
///  - product: the independent-transitions rule, where a label is a function
///    u : X -> X encoded in mixed radix over the per-state supports and
///    mu(u) = prod_x K(x, u(x)). Labels are never materialized.
class TransitionRule {
 public:
  struct Choice {
    State target;
    Rational weight;
  };

  TransitionRule() = default;

  /// Explicit rule. table[u][x] = phi(x, u). Zero-weight labels are dropped.
  TransitionRule(std::size_t state_count, std::vector<std::string> names, std::vector<Rational> mu,
                 std::vector<std::vector<State>> table)
      : state_count_(state_count) {
    require(state_count > 0, ErrorKind::Validation, "rule needs at least one state");
    require(names.size() == mu.size() && mu.size() == table.size(), ErrorKind::Validation,
            "rule labels, mu and table disagree in length");
    static_cast<void>(Dist(mu));  // nonnegative, unit mass
    std::set<std::string> seen;
    for (std::size_t u = 0; u < names.size(); ++u) {
      require(seen.insert(names[u]).second, ErrorKind::Validation, "duplicate rule label \"" + names[u] + "\"");
      require(table[u].size() == state_count, ErrorKind::Validation,
              "table for label \"" + names[u] + "\" is not total on states");
      for (State y : table[u])
        require(y < state_count, ErrorKind::Validation, "table for label \"" + names[u] + "\" leaves the state space");
      if (mu[u] == 0) continue;
      names_.push_back(std::move(names[u]));
      mu_.push_back(std::move(mu[u]));
      table_.push_back(std::move(table[u]));
    }
    label_count_ = names_.size();
  }

  /// Product form built from per-state marginal supports (positive weights only).
  static TransitionRule product(std::vector<std::vector<Choice>> marginals) {
    TransitionRule rule;
    rule.product_ = true;
    rule.state_count_ = marginals.size();
    rule.marginals_ = std::move(marginals);
    rule.strides_.resize(rule.state_count_);
    Label stride = 1;
    for (State x = 0; x < rule.state_count_; ++x) {
      rule.strides_[x] = stride;
      stride *= rule.marginals_[x].size();
    }
    rule.label_count_ = stride;
    return rule;
  }

  std::size_t state_count() const { return state_count_; }
  Label label_count() const { return label_count_; }
  bool is_product() const { return product_; }

  State apply(State x, Label u) const {
    if (!product_) return table_[static_cast<std::size_t>(u)][x];
    return marginals_[x][digit(x, u)].target;
  }

  Rational weight(Label u) const {
    if (!product_) return mu_[static_cast<std::size_t>(u)];
    Rational w = 1;
    for (State x = 0; x < state_count_; ++x) w *= marginals_[x][digit(x, u)].weight;
    return w;
  }

  std::string label_name(Label u) const {
    if (!product_) return names_[static_cast<std::size_t>(u)];
    std::string name = "(";
    for (State x = 0; x < state_count_; ++x) {
      if (x) name += ",";
      name += std::to_string(apply(x, u));
    }
    return name + ")";
  }

  std::optional<Label> find_label(const std::string& name) const {
    for (Label u = 0; u < label_count_; ++u)
      if (label_name(u) == name) return u;
    return std::nullopt;
  }

  // Product-form accessors.
  const std::vector<std::vector<Choice>>& marginals() const { return marginals_; }
  std::size_t digit(State x, Label u) const {
    return static_cast<std::size_t>((u / strides_[x]) % marginals_[x].size());
  }
  Label encode(const std::vector<std::size_t>& digits) const {
    Label u = 0;
    for (State x = 0; x < state_count_; ++x) u += strides_[x] * digits[x];
    return u;
  }

 private:
  bool product_ = false;
  std::size_t state_count_ = 0;
  Label label_count_ = 0;
  // explicit
  std::vector<std::string> names_;
  std::vector<Rational> mu_;
  std::vector<std::vector<State>> table_;
  // product
  std::vector<std::vector<Choice>> marginals_;
  std::vector<Label> strides_;
};

/// K(x, B) = mu{u : phi(x, u) in B}, by direct enumeration of the labels.
inline Kernel kernel_from_rule(const TransitionRule& rule) {
  const std::size_t n = rule.state_count();
  std::vector<std::vector<Rational>> rows(n, std::vector<Rational>(n, Rational(0)));
  for (Label u = 0; u < rule.label_count(); ++u) {
    const Rational w = rule.weight(u);
    for (State x = 0; x < n; ++x) rows[x][rule.apply(x, u)] += w;
  }
  return Kernel::from_rows(rows);
}

/// Labels are all functions u : X -> X with positive product weight.
inline TransitionRule independent_transitions_rule(const Kernel& k, std::uint64_t cap = kDefaultLabelCap) {
  std::vector<std::vector<TransitionRule::Choice>> marginals(k.size());
  std::uint64_t count = 1;
  for (State x = 0; x < k.size(); ++x) {
    for (State y = 0; y < k.size(); ++y)
      if (k(x, y) > 0) marginals[x].push_back({y, k(x, y)});
    count *= marginals[x].size();
    require(count <= cap, ErrorKind::StateSpaceTooLarge,
            "independent-transitions label count exceeds cap " + std::to_string(cap));
  }
  return TransitionRule::product(std::move(marginals));
}

/// Discretized inverse-CDF rules on one shared label set: labels are the
/// cells of the common refinement of every row's CDF breakpoints, over all
/// kernels, under `order`. Rules built together are driven by the same U.
inline std::vector<TransitionRule> inverse_transform_rules(const std::vector<Kernel>& kernels,
                                                           const std::vector<State>& order) {
  require(!kernels.empty(), ErrorKind::Validation, "need at least one kernel");
  const std::size_t n = kernels.front().size();
  {
    std::vector<State> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<State> expect(n);
    std::iota(expect.begin(), expect.end(), State{0});
    require(sorted == expect, ErrorKind::Validation, "order must be a permutation of the states");
  }
  std::vector<Rational> cuts{Rational(0), Rational(1)};
  for (const auto& k : kernels) {
    require(k.size() == n, ErrorKind::Validation, "kernel sizes differ");
    for (State x = 0; x < n; ++x) {
      Rational running = 0;
      for (State y : order) {
        running += k(x, y);
        cuts.push_back(running);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<std::string> names;
  std::vector<Rational> mu;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    names.push_back("[" + to_string(cuts[i]) + "," + to_string(cuts[i + 1]) + ")");
    mu.push_back(cuts[i + 1] - cuts[i]);
  }
  std::vector<TransitionRule> out;
  for (const auto& k : kernels) {
    std::vector<std::vector<State>> table;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      std::vector<State> images(n);
      for (State x = 0; x < n; ++x) {
        Rational running = 0;
        for (State y : order) {
          running += k(x, y);
          if (running > cuts[i]) {
            images[x] = y;
            break;
          }
        }
      }
      table.push_back(std::move(images));
    }
    out.emplace_back(n, names, mu, std::move(table));
  }
  return out;
}

inline TransitionRule inverse_transform_rule(const Kernel& k, const std::vector<State>& order) {
  return inverse_transform_rules({k}, order).front();
}

/// Draws labels from mu. Product rules draw coordinate-wise.
class LabelSampler {
 public:
  explicit LabelSampler(const TransitionRule& rule) : rule_(rule) {
    if (rule.is_product()) {
      for (const auto& m : rule.marginals()) {
        std::vector<Rational> w;
        for (const auto& c : m) w.push_back(c.weight);
        coordinates_.emplace_back(w);
      }
    } else {
      std::vector<Rational> w;
      for (Label u = 0; u < rule.label_count(); ++u) w.push_back(rule.weight(u));
      labels_ = DiscreteSampler(w);
    }
  }

  Label draw(RngStream& rng) const {
    if (!rule_.is_product()) return labels_.draw(rng);
    std::vector<std::size_t> digits(coordinates_.size());
    for (std::size_t x = 0; x < coordinates_.size(); ++x) digits[x] = coordinates_[x].draw(rng);
    return rule_.encode(digits);
  }

 private:
  TransitionRule rule_;
  DiscreteSampler labels_;
  std::vector<DiscreteSampler> coordinates_;
};

}  // namespace perfect
