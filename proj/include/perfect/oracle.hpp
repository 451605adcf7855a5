#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "perfect/chain.hpp"
#include "perfect/detection.hpp"
#include "perfect/imputation.hpp"
#include "perfect/poset.hpp"
#include "perfect/rule.hpp"
#include "perfect/samplers.hpp"

namespace perfect {

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// Exact law of one fixed-window run, summed over every backward path and
/// every imputed driving sequence.
struct AcceptanceReport {
  Rational p_accept = 0;
  std::vector<Dist> cond_law;  // L(X_s | C), s = 0..t; empty when p_accept = 0
  std::vector<Rational> rnd_density;  // seed law / pi, per state
  Rational p_first_space = 0;  // P(C, X_t in supp(seed)) with X_0 ~ pi, U iid mu
  std::vector<Rational> first_space_by_terminal;  // P(C, X_t = x)
  std::uint64_t terms = 0;
};

namespace detail {

class Budget {
 public:
  explicit Budget(std::uint64_t cap) : cap_(cap) {}
  void charge(std::uint64_t n = 1) {
    used_ += n;
    if (used_ > cap_) fail(ErrorKind::EnumerationTooLarge, "enumeration exceeded " + std::to_string(cap_) + " terms");
  }
  std::uint64_t used() const { return used_; }

 private:
  std::uint64_t cap_;
  std::uint64_t used_ = 0;
};

using Weighted = std::vector<std::pair<Label, Rational>>;

/// impute_dist for every positive-probability transition, materialized.
inline std::vector<std::vector<Weighted>> imputation_table(const TransitionRule& rule, const Kernel& k,
                                                           Budget& budget) {
  const std::size_t n = k.size();
  std::vector<std::vector<Weighted>> table(n, std::vector<Weighted>(n));
  for (State a = 0; a < n; ++a)
    for (State b = 0; b < n; ++b) {
      if (k(a, b) == 0) continue;
      const auto d = impute_dist(rule, a, b);
      budget.charge(d.support_size());
      d.for_each([&](Label u, const Rational& w) { table[a][b].emplace_back(u, w); });
    }
  return table;
}

inline Weighted label_table(const TransitionRule& rule, Budget& budget) {
  budget.charge(rule.label_count());
  Weighted out;
  for (Label u = 0; u < rule.label_count(); ++u) out.emplace_back(u, rule.weight(u));
  return out;
}

/// Detector state law with an absorbing "fired" atom.
struct DetLaw {
  Rational fired = 0;
  std::map<DetState, Rational> live;
};

inline DetLaw det_start(const DetectionProcess& det) {
  DetLaw law;
  const DetState d0 = det.initial();
  if (det.in_target(d0)) law.fired = 1;
  else law.live[d0] = 1;
  return law;
}

inline DetLaw det_advance(const DetectionProcess& det, const DetLaw& law, const Weighted& labels, Budget& budget) {
  DetLaw next;
  next.fired = law.fired;
  for (const auto& [d, m] : law.live) {
    budget.charge(labels.size());
    for (const auto& [u, q] : labels) {
      DetState e = det.step(d, u);
      if (det.in_target(e)) next.fired += m * q;
      else next.live[std::move(e)] += m * q;
    }
  }
  return next;
}

inline std::vector<Dist> normalize_laws(const std::vector<std::vector<Rational>>& mass, const Rational& total) {
  std::vector<Dist> out;
  if (total == 0) return out;
  for (const auto& row : mass) {
    std::vector<Rational> w = row;
    for (auto& v : w) v /= total;
    out.emplace_back(std::move(w));
  }
  return out;
}

}  // namespace detail

/// P(C) and L(X_s | C) for the fixed-window algorithm with X_t ~ seed.
///
/// Paths are enumerated forward using pi(x_0) prod K(x_{s-1}, x_s) * seed(x_t) / pi(x_t),
/// which equals seed(x_t) prod Krev(x_s, x_{s-1}).
inline AcceptanceReport enumerate_fill(const Kernel& k, const Dist& pi, const TransitionRule& rule,
                                       const DetectionProcess& det, std::size_t t, const Dist& seed,
                                       std::uint64_t cap = kDefaultEnumerationCap) {
  const std::size_t n = k.size();
  require(pi.size() == n && seed.size() == n && rule.state_count() == n, ErrorKind::Validation, "size mismatch");
  require(kernel_from_rule(rule) == k, ErrorKind::Validation, "rule does not realize the kernel");
  require(is_stationary(k, pi), ErrorKind::NotStationary, "pi K != pi");
  for (State x = 0; x < n; ++x)
    require(seed[x] == 0 || pi[x] > 0, ErrorKind::ZeroMassSeed, "seed law charges a pi-null state");

  detail::Budget budget(cap);
  const auto imputed = detail::imputation_table(rule, k, budget);

  AcceptanceReport report;
  report.rnd_density.resize(n);
  for (State x = 0; x < n; ++x) report.rnd_density[x] = pi[x] > 0 ? Rational(seed[x] / pi[x]) : Rational(0);

  std::vector<std::vector<Rational>> mass(t + 1, std::vector<Rational>(n, Rational(0)));
  std::vector<State> path;
  auto visit = [&](auto&& self, const Rational& w, const detail::DetLaw& law) -> void {
    budget.charge();
    const State x = path.back();
    if (path.size() == t + 1) {
      if (seed[x] == 0 || law.fired == 0) return;
      const Rational contrib = w * report.rnd_density[x] * law.fired;
      report.p_accept += contrib;
      for (std::size_t s = 0; s <= t; ++s) mass[s][path[s]] += contrib;
      return;
    }
    for (State y = 0; y < n; ++y) {
      if (k(x, y) == 0) continue;
      path.push_back(y);
      self(self, w * k(x, y), detail::det_advance(det, law, imputed[x][y], budget));
      path.pop_back();
    }
  };
  const detail::DetLaw start = detail::det_start(det);
  for (State x0 = 0; x0 < n; ++x0) {
    if (pi[x0] == 0) continue;
    path.assign(1, x0);
    visit(visit, pi[x0], start);
  }
  report.cond_law = detail::normalize_laws(mass, report.p_accept);

  // First space: X_0 ~ pi and U_1..U_t iid mu, state (X_s, detector).
  const auto labels = detail::label_table(rule, budget);
  std::map<std::pair<State, DetState>, Rational> live;
  std::vector<Rational> fired(n, Rational(0));
  {
    const DetState d0 = det.initial();
    for (State x = 0; x < n; ++x) {
      if (pi[x] == 0) continue;
      if (det.in_target(d0)) fired[x] += pi[x];
      else live[{x, d0}] += pi[x];
    }
  }
  for (std::size_t s = 0; s < t; ++s) {
    std::vector<Rational> next_fired(n, Rational(0));
    for (State x = 0; x < n; ++x)
      for (const auto& [u, q] : labels) next_fired[rule.apply(x, u)] += fired[x] * q;
    budget.charge(n * labels.size());
    std::map<std::pair<State, DetState>, Rational> next_live;
    for (const auto& [key, m] : live) {
      budget.charge(labels.size());
      for (const auto& [u, q] : labels) {
        const State y = rule.apply(key.first, u);
        DetState e = det.step(key.second, u);
        if (det.in_target(e)) next_fired[y] += m * q;
        else next_live[{y, std::move(e)}] += m * q;
      }
    }
    fired = std::move(next_fired);
    live = std::move(next_live);
  }
  report.first_space_by_terminal = fired;
  for (State x = 0; x < n; ++x)
    if (seed[x] > 0) report.p_first_space += fired[x];
  report.terms = budget.used();
  return report;
}

/// Exact joint law of backward coalescence time and output for the
/// backward-search algorithm, restricted to runs finishing by t_max.
struct AltAlgReport {
  Rational p_coalesced = 0;  // P(T <= t_max)
  Rational p_success = 0;  // P(T' <= t_max)
  std::vector<Rational> output_law;  // L(W | success); empty when p_success = 0
  std::map<std::size_t, std::vector<Rational>> joint_t;  // P(T = tau, W = w, success)
  std::map<std::size_t, std::vector<Rational>> joint_t_prime;  // P(T' = tau, W = w, success)
  std::map<std::size_t, std::vector<Rational>> exit_law;  // P(T = tau, X_{-T} = x), T <= t_max
  std::uint64_t terms = 0;
};

/// joint(a, b) * total == row(a) * col(b) for every cell.
inline bool factorizes(const std::map<std::size_t, std::vector<Rational>>& joint) {
  if (joint.empty()) return true;
  const std::size_t n = joint.begin()->second.size();
  Rational total = 0;
  std::vector<Rational> col(n, Rational(0));
  std::map<std::size_t, Rational> row;
  for (const auto& [a, v] : joint)
    for (std::size_t b = 0; b < n; ++b) {
      total += v[b];
      col[b] += v[b];
      row[a] += v[b];
    }
  for (const auto& [a, v] : joint)
    for (std::size_t b = 0; b < n; ++b)
      if (v[b] * total != row[a] * col[b]) return false;
  return true;
}

inline AltAlgReport enumerate_altalg(const Kernel& k, const Dist& pi, const TransitionRule& rule, const Dist& pi_hat,
                                     std::size_t t_max, SearchSchedule search,
                                     std::uint64_t cap = kDefaultEnumerationCap) {
  const std::size_t n = k.size();
  require(kernel_from_rule(rule) == k, ErrorKind::Validation, "rule does not realize the kernel");
  const Kernel rev = reverse_kernel(k, pi);
  detail::Budget budget(cap);
  const auto imputed = detail::imputation_table(rule, k, budget);

  AltAlgReport report;
  auto add = [&](std::map<std::size_t, std::vector<Rational>>& table, std::size_t key, State x, const Rational& m) {
    auto& row = table[key];
    if (row.empty()) row.assign(n, Rational(0));
    row[x] += m;
  };
  auto is_constant = [](const std::vector<State>& f) {
    for (auto v : f)
      if (v != f[0]) return false;
    return true;
  };

  std::vector<State> identity(n);
  for (State z = 0; z < n; ++z) identity[z] = z;
  std::map<std::pair<State, std::vector<State>>, Rational> live;
  for (State x = 0; x < n; ++x) {
    if (pi_hat[x] == 0) continue;
    if (is_constant(identity)) add(report.exit_law, 0, x, pi_hat[x]);
    else live[{x, identity}] += pi_hat[x];
  }
  for (std::size_t t = 1; t <= t_max && !live.empty(); ++t) {
    std::map<std::pair<State, std::vector<State>>, Rational> next;
    for (const auto& [key, m] : live) {
      const auto& [later, f] = key;
      for (State earlier = 0; earlier < n; ++earlier) {
        if (rev(later, earlier) == 0) continue;
        const auto& labels = imputed[earlier][later];
        budget.charge(labels.size());
        for (const auto& [u, q] : labels) {
          std::vector<State> g(n);
          for (State z = 0; z < n; ++z) g[z] = f[rule.apply(z, u)];
          const Rational w = m * rev(later, earlier) * q;
          if (is_constant(g)) add(report.exit_law, t, earlier, w);
          else next[{earlier, std::move(g)}] += w;
        }
      }
    }
    live = std::move(next);
  }

  for (const auto& [tau, law] : report.exit_law) {
    const std::size_t t_prime = search.conservative(tau);
    for (State x = 0; x < n; ++x) report.p_coalesced += law[x];
    if (t_prime > t_max) continue;
    // W = X_{-T'} is T' - T further reversed steps from X_{-T}.
    std::vector<Rational> w = law;
    for (std::size_t s = tau; s < t_prime; ++s) w = rev.apply_left(w);
    for (State x = 0; x < n; ++x) {
      if (w[x] == 0) continue;
      add(report.joint_t, tau, x, w[x]);
      add(report.joint_t_prime, t_prime, x, w[x]);
      report.p_success += w[x];
    }
  }
  if (report.p_success > 0) {
    report.output_law.assign(n, Rational(0));
    for (const auto& [tau, v] : report.joint_t)
      for (State x = 0; x < n; ++x) report.output_law[x] += v[x] / report.p_success;
  }
  report.terms = budget.used();
  return report;
}

/// Exact law of the monotone variant. `target` is K for a single SM kernel
/// and L in the cross-SM case; formula = target^t(top, bottom) / pi(bottom).
struct SmReport {
  AcceptanceReport report;
  Rational formula = 0;
};

inline SmReport enumerate_sm(const Kernel& k, const Dist& pi, const Poset& p, const UpwardKernelFamily& m,
                             std::size_t t, const Kernel& target, std::uint64_t cap = kDefaultEnumerationCap) {
  const std::size_t n = k.size();
  const State bottom = p.bottom(), top = p.top();
  require(pi[bottom] > 0, ErrorKind::ZeroBottomMass, "pi(bottom) = 0");
  require(is_stationary(k, pi), ErrorKind::NotStationary, "pi K != pi");
  detail::Budget budget(cap);

  SmReport out;
  auto& report = out.report;
  report.rnd_density.assign(n, Rational(0));
  report.rnd_density[bottom] = 1 / pi[bottom];
  out.formula = target.power(t)(top, bottom) / pi[bottom];

  auto advance = [&](const std::vector<Rational>& ys, State x, State from) {
    std::vector<Rational> next(n, Rational(0));
    budget.charge(n);
    for (State y = 0; y < n; ++y) {
      if (ys[y] == 0) continue;
      const Dist& row = m.row(x, y, from);
      for (State z = 0; z < n; ++z) next[z] += ys[y] * row[z];
    }
    return next;
  };

  std::vector<std::vector<Rational>> mass(t + 1, std::vector<Rational>(n, Rational(0)));
  std::vector<State> path;
  auto visit = [&](auto&& self, const Rational& w, const std::vector<Rational>& ys) -> void {
    budget.charge();
    const State x = path.back();
    if (path.size() == t + 1) {
      if (x != bottom || ys[bottom] == 0) return;
      const Rational contrib = w / pi[bottom] * ys[bottom];
      report.p_accept += contrib;
      for (std::size_t s = 0; s <= t; ++s) mass[s][path[s]] += contrib;
      return;
    }
    for (State y = 0; y < n; ++y) {
      if (k(x, y) == 0) continue;
      path.push_back(y);
      self(self, w * k(x, y), advance(ys, x, y));
      path.pop_back();
    }
  };
  std::vector<Rational> y0(n, Rational(0));
  y0[top] = 1;
  for (State x0 = 0; x0 < n; ++x0) {
    if (pi[x0] == 0) continue;
    path.assign(1, x0);
    visit(visit, pi[x0], y0);
  }
  report.cond_law = detail::normalize_laws(mass, report.p_accept);

  // First space: (X, Y) forward with X_0 ~ pi, Y_0 = top.
  std::vector<std::vector<Rational>> joint(n, std::vector<Rational>(n, Rational(0)));
  for (State x = 0; x < n; ++x) joint[x][top] = pi[x];
  for (std::size_t s = 0; s < t; ++s) {
    std::vector<std::vector<Rational>> next(n, std::vector<Rational>(n, Rational(0)));
    for (State x = 0; x < n; ++x)
      for (State y = 0; y < n; ++y) {
        if (joint[x][y] == 0) continue;
        budget.charge(n);
        for (State from = 0; from < n; ++from) {
          if (k(x, from) == 0) continue;
          const Dist& row = m.row(x, y, from);
          for (State z = 0; z < n; ++z) next[from][z] += joint[x][y] * k(x, from) * row[z];
        }
      }
    joint = std::move(next);
  }
  report.first_space_by_terminal.assign(n, Rational(0));
  for (State x = 0; x < n; ++x) report.first_space_by_terminal[x] = joint[x][bottom];
  report.p_first_space = joint[bottom][bottom];
  report.terms = budget.used();
  return out;
}

inline SmReport enumerate_sm(const Kernel& k, const Dist& pi, const Poset& p, const UpwardKernelFamily& m,
                             std::size_t t, std::uint64_t cap = kDefaultEnumerationCap) {
  return enumerate_sm(k, pi, p, m, t, k, cap);
}

/// Both sides of the dominance identity
///   inf_y L^t(y, bottom) / pi(bottom) = rho * inf_y Lrev^t(bottom, y) / sigma(y).
struct DominanceIdentity {
  Rational lhs;
  Rational rhs;
};

inline DominanceIdentity cross_sm_dominance_identity(const CrossSmConfig& cfg, const Dist& pi, const Poset& p,
                                                     std::size_t t) {
  const State bottom = p.bottom();
  const Kernel lt = cfg.l.power(t);
  const Kernel lrev_t = reverse_kernel(cfg.l, cfg.sigma).power(t);
  std::optional<Rational> lhs, rhs;
  for (State y = 0; y < p.size(); ++y) {
    const Rational a = lt(y, bottom) / pi[bottom];
    const Rational b = lrev_t(bottom, y) / cfg.sigma[y];
    if (!lhs || a < *lhs) lhs = a;
    if (!rhs || b < *rhs) rhs = b;
  }
  return {*lhs, cfg.rho * *rhs};
}

/// P(all starts coalesce within t steps) = sum over mu^t of the coalescence indicator.
inline Rational enumerate_cftp_window(const TransitionRule& rule, std::size_t t,
                                      std::uint64_t cap = kDefaultEnumerationCap) {
  detail::Budget budget(cap);
  const auto labels = detail::label_table(rule, budget);
  std::map<std::vector<State>, Rational> layer;
  std::vector<State> all(rule.state_count());
  for (State z = 0; z < all.size(); ++z) all[z] = z;
  layer[all] = 1;
  for (std::size_t s = 0; s < t; ++s) {
    std::map<std::vector<State>, Rational> next;
    for (const auto& [set, m] : layer) {
      budget.charge(labels.size());
      for (const auto& [u, q] : labels) {
        std::vector<State> img;
        for (State y : set) img.push_back(rule.apply(y, u));
        std::sort(img.begin(), img.end());
        img.erase(std::unique(img.begin(), img.end()), img.end());
        next[std::move(img)] += m * q;
      }
    }
    layer = std::move(next);
  }
  Rational p = 0;
  for (const auto& [set, m] : layer)
    if (set.size() == 1) p += m;
  return p;
}

/// Block structure of read-once CFTP with width-t blocks.
struct ReadOnceReport {
  Rational c = 0;  // P(block coalesces)
  std::vector<Rational> nu;  // law of the coalesced value
  std::vector<std::vector<Rational>> q;  // Q(x, y) = P(block does not coalesce, F(x) = y)
  std::vector<Rational> output_law;  // c nu (I - Q)^{-1}
  std::uint64_t terms = 0;

  /// P(blocks_used = b, output = y), b >= 2.
  std::vector<Rational> joint(std::size_t b) const {
    const std::size_t n = nu.size();
    std::vector<Rational> out(n, Rational(0));
    if (b < 2) return out;
    // sum over the first coalescing block i = 1..b-1
    std::vector<Rational> v = nu;  // nu Q^{b-1-i}, starting at i = b-1
    Rational geo = 1;
    std::vector<Rational> geos;
    for (std::size_t i = 1; i < b; ++i) {
      geos.push_back(geo * c);
      geo *= 1 - c;
    }
    for (std::size_t i = b - 1; i >= 1; --i) {
      for (State y = 0; y < n; ++y) out[y] += geos[i - 1] * v[y] * c;
      std::vector<Rational> w(n, Rational(0));
      for (State x = 0; x < n; ++x)
        for (State y = 0; y < n; ++y) w[y] += v[x] * q[x][y];
      v = std::move(w);
    }
    return out;
  }

  /// L(output | blocks_used = b).
  std::vector<Rational> conditional(std::size_t b) const {
    auto j = joint(b);
    const Rational total = sum(j);
    if (total != 0)
      for (auto& v : j) v /= total;
    return j;
  }
};

inline ReadOnceReport enumerate_read_once(const TransitionRule& rule, std::size_t t,
                                          std::uint64_t cap = kDefaultEnumerationCap) {
  const std::size_t n = rule.state_count();
  detail::Budget budget(cap);
  const auto labels = detail::label_table(rule, budget);
  std::vector<State> identity(n);
  for (State z = 0; z < n; ++z) identity[z] = z;
  std::map<std::vector<State>, Rational> maps{{identity, Rational(1)}};
  for (std::size_t s = 0; s < t; ++s) {
    std::map<std::vector<State>, Rational> next;
    for (const auto& [f, m] : maps) {
      budget.charge(labels.size());
      for (const auto& [u, w] : labels) {
        std::vector<State> g(n);
        for (State z = 0; z < n; ++z) g[z] = rule.apply(f[z], u);
        next[std::move(g)] += m * w;
      }
    }
    maps = std::move(next);
  }

  ReadOnceReport r;
  r.nu.assign(n, Rational(0));
  r.q.assign(n, std::vector<Rational>(n, Rational(0)));
  for (const auto& [f, m] : maps) {
    const bool coalesced = std::all_of(f.begin(), f.end(), [&](State y) { return y == f[0]; });
    if (coalesced) {
      r.c += m;
      r.nu[f[0]] += m;
    } else {
      for (State x = 0; x < n; ++x) r.q[x][f[x]] += m;
    }
  }
  if (r.c > 0) {
    for (auto& v : r.nu) v /= r.c;
    // Solve x (I - Q) = c nu by Gauss-Jordan on the transpose.
    std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1, Rational(0)));
    for (State y = 0; y < n; ++y) {
      for (State x = 0; x < n; ++x) a[y][x] = (x == y ? Rational(1) : Rational(0)) - r.q[x][y];
      a[y][n] = r.c * r.nu[y];
    }
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t pivot = col;
      while (a[pivot][col] == 0) ++pivot;
      std::swap(a[pivot], a[col]);
      const Rational inv = 1 / a[col][col];
      for (std::size_t j = col; j <= n; ++j) a[col][j] *= inv;
      for (std::size_t row = 0; row < n; ++row) {
        if (row == col || a[row][col] == 0) continue;
        const Rational f = a[row][col];
        for (std::size_t j = col; j <= n; ++j) a[row][j] -= f * a[col][j];
      }
    }
    for (State y = 0; y < n; ++y) r.output_law.push_back(a[y][n]);
  }
  r.terms = budget.used();
  return r;
}

/// Attempt-indexed law of repeated fixed-window runs.
struct FillSampleReport {
  std::vector<std::size_t> windows;  // t of attempt a (1-based order)
  std::vector<Rational> p_accept;  // per attempt
  std::map<std::size_t, std::vector<Rational>> joint;  // P(attempts = a, output = y)
  Rational p_success = 0;  // P(accept within max_attempts)
};

inline FillSampleReport enumerate_fill_sample(const Kernel& k, const Dist& pi, const TransitionRule& rule,
                                              const DetectionProcess& det, std::size_t t0, State x_t,
                                              std::size_t max_attempts, WindowSchedule schedule,
                                              std::uint64_t cap = kDefaultEnumerationCap) {
  FillSampleReport out;
  const Dist seed = Dist::point_mass(k.size(), x_t);
  Rational survive = 1;
  std::size_t t = t0;
  std::map<std::size_t, AcceptanceReport> cache;
  for (std::size_t a = 1; a <= max_attempts; ++a) {
    if (!cache.count(t)) cache.emplace(t, enumerate_fill(k, pi, rule, det, t, seed, cap));
    const auto& rep = cache.at(t);
    out.windows.push_back(t);
    out.p_accept.push_back(rep.p_accept);
    if (rep.p_accept > 0) {
      auto& row = out.joint[a];
      row.assign(k.size(), Rational(0));
      for (State y = 0; y < k.size(); ++y) row[y] = survive * rep.p_accept * rep.cond_law[0][y];
      out.p_success += survive * rep.p_accept;
    }
    survive *= 1 - rep.p_accept;
    if (schedule == WindowSchedule::Doubling) t = t == 0 ? 1 : 2 * t;
  }
  return out;
}

}  // namespace perfect
