#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "perfect/chain.hpp"
#include "perfect/detection.hpp"
#include "perfect/imputation.hpp"
#include "perfect/poset.hpp"
#include "perfect/rule.hpp"
#include "perfect/trajectory.hpp"

namespace perfect {

struct RunOutcome {
  bool accepted = false;
  std::optional<State> output;
  std::uint64_t t_used = 0;  // backward + forward Markov steps
  std::uint64_t attempts = 0;
  State seed_state = 0;
  std::uint64_t rng_seed = 0;
  std::size_t horizon = 0;  // t of the last attempt, or T' for backward search
  std::optional<std::size_t> coalescence_time;
};

/// One run of the fixed-window rejection algorithm with its randomness.
struct FillTrace {
  RunOutcome outcome;
  Trajectory path;  // X_0..X_t
  DrivingSequence u;
};

class FillSampler {
 public:
  FillSampler(const Kernel& k, const Dist& pi, TransitionRule rule, DetectorPtr det)
      : pi_(pi), rule_(std::move(rule)), det_(std::move(det)), reversed_(reverse_kernel_on_support(k, pi)), imputer_(rule_) {
    require(kernel_from_rule(rule_) == k, ErrorKind::Validation, "rule does not realize the kernel");
  }

  FillTrace trace(std::size_t t, State x_t, RngStream& rng) const {
    require(x_t < pi_.size(), ErrorKind::Validation, "seed state out of range");
    require(pi_[x_t] > 0, ErrorKind::ZeroMassSeed, "pi(seed) = 0");
    FillTrace out;
    out.path.states.assign(t + 1, x_t);
    for (std::size_t s = t; s > 0; --s) out.path.states[s - 1] = reversed_.step(out.path.states[s], rng);
    for (std::size_t s = 1; s <= t; ++s)
      out.u.labels.push_back(imputer_.draw(out.path.at(s - 1), out.path.at(s), rng));
    auto& o = out.outcome;
    o.coalescence_time = first_detection(*det_, out.u);
    o.accepted = o.coalescence_time.has_value();
    if (o.accepted) o.output = out.path.at(0);
    o.t_used = 2 * static_cast<std::uint64_t>(t);
    o.attempts = 1;
    o.seed_state = x_t;
    o.rng_seed = rng.seed();
    o.horizon = t;
    return out;
  }

  RunOutcome run(std::size_t t, State x_t, RngStream& rng) const { return trace(t, x_t, rng).outcome; }

  const TransitionRule& rule() const { return rule_; }
  const DetectionProcess& detector() const { return *det_; }

 private:
  Dist pi_;
  TransitionRule rule_;
  DetectorPtr det_;
  KernelSampler reversed_;
  Imputer imputer_;
};

inline RunOutcome fill_run(const Kernel& k, const Dist& pi, const TransitionRule& rule, DetectorPtr det, std::size_t t,
                           State x_t, RngStream& rng) {
  return FillSampler(k, pi, rule, std::move(det)).run(t, x_t, rng);
}

enum class WindowSchedule { Doubling, Fixed };

/// Independent attempts with t = t0, 2 t0, 4 t0, ... (or t0 throughout when
/// fixed) until the first acceptance.
inline RunOutcome fill_sample(const FillSampler& sampler, std::size_t t0, State x_t, std::uint64_t max_attempts,
                              RngStream& rng, WindowSchedule schedule = WindowSchedule::Doubling) {
  std::uint64_t t_used = 0;
  std::size_t t = t0;
  for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    RunOutcome o = sampler.run(t, x_t, rng);
    t_used += o.t_used;
    if (o.accepted) {
      o.attempts = attempt;
      o.t_used = t_used;
      return o;
    }
    if (schedule == WindowSchedule::Doubling) {
      require(t <= (std::size_t{1} << 30), ErrorKind::MaxAttemptsExceeded, "window grew past 2^30 without acceptance");
      t = t == 0 ? 1 : 2 * t;
    }
  }
  fail(ErrorKind::MaxAttemptsExceeded, "no acceptance in " + std::to_string(max_attempts) + " attempts");
}

struct SearchSchedule {
  enum class Kind { EveryT, PowersOf2, Guarantee };
  Kind kind = Kind::EveryT;
  std::size_t t0 = 1;

  static SearchSchedule every_t() { return {}; }
  static SearchSchedule powers_of_2() { return {Kind::PowersOf2, 1}; }
  static SearchSchedule guarantee(std::size_t t0) { return {Kind::Guarantee, t0}; }

  /// Conservative stopping time T' given the exact backward coalescence time T.
  std::size_t conservative(std::size_t t) const {
    switch (kind) {
      case Kind::EveryT: return t;
      case Kind::PowersOf2: {
        std::size_t p = 1;
        while (p < t) p *= 2;
        return p;
      }
      case Kind::Guarantee: return std::max(t, t0 == 0 ? 0 : t0 - 1);
    }
    return t;
  }
};

/// Backward search: X_{-1}, X_{-2}, ... via the reversed kernel with labels
/// imputed once and reused as t grows.
struct AltAlgTrace {
  RunOutcome outcome;
  std::vector<State> backward;  // backward[j] = X_{-j}, j = 0..T'
  std::size_t coalescence_time = 0;  // T
};

class AltAlgSampler {
 public:
  AltAlgSampler(const Kernel& k, const Dist& pi, TransitionRule rule, const Dist& pi_hat)
      : pi_(pi), rule_(std::move(rule)), reversed_(reverse_kernel_on_support(k, pi)), imputer_(rule_), seed_(pi_hat.weights()) {
    require(kernel_from_rule(rule_) == k, ErrorKind::Validation, "rule does not realize the kernel");
    require(pi_hat.size() == pi.size(), ErrorKind::Validation, "pi_hat has wrong length");
    for (State x = 0; x < pi.size(); ++x)
      require(pi_hat[x] == 0 || pi[x] > 0, ErrorKind::Validation, "pi_hat is not absolutely continuous wrt pi");
  }

  AltAlgTrace trace(std::size_t t_max, SearchSchedule search, RngStream& rng) const {
    const State x0 = seed_.draw(rng);
    return trace_from(x0, t_max, search, rng);
  }

  AltAlgTrace trace_from(State x0, std::size_t t_max, SearchSchedule search, RngStream& rng) const {
    const std::size_t n = rule_.state_count();
    AltAlgTrace out;
    out.backward.push_back(x0);
    // f[z] = state at time 0 when started from z at time -t.
    std::vector<State> f(n);
    for (State z = 0; z < n; ++z) f[z] = z;
    auto constant = [&] {
      for (State z = 1; z < n; ++z)
        if (f[z] != f[0]) return false;
      return true;
    };
    std::size_t t = 0;
    while (!constant()) {
      if (t == t_max) fail(ErrorKind::HorizonExceeded, "no backward coalescence by t_max = " + std::to_string(t_max));
      const State later = out.backward.back();
      const State earlier = reversed_.step(later, rng);
      out.backward.push_back(earlier);
      const Label u = imputer_.draw(earlier, later, rng);
      std::vector<State> next(n);
      for (State z = 0; z < n; ++z) next[z] = f[rule_.apply(z, u)];
      f = std::move(next);
      ++t;
    }
    out.coalescence_time = t;
    const std::size_t t_prime = search.conservative(t);
    require(t_prime <= t_max, ErrorKind::HorizonExceeded,
            "conservative time " + std::to_string(t_prime) + " exceeds t_max = " + std::to_string(t_max));
    while (out.backward.size() <= t_prime) out.backward.push_back(reversed_.step(out.backward.back(), rng));

    auto& o = out.outcome;
    o.accepted = true;
    o.output = out.backward[t_prime];
    o.t_used = 2 * static_cast<std::uint64_t>(t_prime);
    o.attempts = 1;
    o.seed_state = x0;
    o.rng_seed = rng.seed();
    o.horizon = t_prime;
    o.coalescence_time = t;
    return out;
  }

  RunOutcome run(std::size_t t_max, SearchSchedule search, RngStream& rng) const {
    return trace(t_max, search, rng).outcome;
  }

 private:
  Dist pi_;
  TransitionRule rule_;
  KernelSampler reversed_;
  Imputer imputer_;
  DiscreteSampler seed_;
};

inline RunOutcome altalg_run(const Kernel& k, const Dist& pi, const TransitionRule& rule, const Dist& pi_hat,
                             std::size_t t_max, SearchSchedule search, RngStream& rng) {
  return AltAlgSampler(k, pi, rule, pi_hat).run(t_max, search, rng);
}

/// Monotone variant: X_t = bottom, reversed run to X_0, then an upper chain
/// Y from top coupled through the upward kernels. Accept iff Y_t = bottom.
/// For cross-SM the family couples K to a dominating kernel L.
class SmSampler {
 public:
  SmSampler(const Kernel& k, const Dist& pi, Poset poset, UpwardKernelFamily m)
      : poset_(std::move(poset)), m_(std::move(m)), reversed_(reverse_kernel_on_support(k, pi)) {
    require(pi[poset_.bottom()] > 0, ErrorKind::ZeroBottomMass, "pi(bottom) = 0");
    const std::size_t n = poset_.size();
    require(m_.size() == n && k.size() == n, ErrorKind::Validation, "upward family size mismatch");
    samplers_.resize(n * n * n);
    for (State x = 0; x < n; ++x)
      for (State y = 0; y < n; ++y)
        for (State from = 0; from < n; ++from)
          if (poset_.leq(x, y) && m_.has_row(x, y, from))
            samplers_[(x * n + y) * n + from] = DiscreteSampler(m_.row(x, y, from).weights());
  }

  struct Trace {
    RunOutcome outcome;
    Trajectory lower;  // X_0..X_t
    Trajectory upper;  // Y_0..Y_t
  };

  Trace trace(std::size_t t, RngStream& rng) const {
    const std::size_t n = poset_.size();
    Trace out;
    out.lower.states.assign(t + 1, poset_.bottom());
    for (std::size_t s = t; s > 0; --s) out.lower.states[s - 1] = reversed_.step(out.lower.states[s], rng);
    out.upper.states.push_back(poset_.top());
    for (std::size_t s = 1; s <= t; ++s) {
      const State x = out.lower.at(s - 1), y = out.upper.back(), from = out.lower.at(s);
      const auto& sampler = samplers_[(x * n + y) * n + from];
      if (!sampler) static_cast<void>(m_.row(x, y, from));  // raises UndefinedUpwardRow
      out.upper.states.push_back(sampler->draw(rng));
    }
    auto& o = out.outcome;
    o.accepted = out.upper.back() == poset_.bottom();
    if (o.accepted) o.output = out.lower.at(0);
    o.t_used = 2 * static_cast<std::uint64_t>(t);
    o.attempts = 1;
    o.seed_state = poset_.bottom();
    o.rng_seed = rng.seed();
    o.horizon = t;
    return out;
  }

  RunOutcome run(std::size_t t, RngStream& rng) const { return trace(t, rng).outcome; }

 private:
  Poset poset_;
  UpwardKernelFamily m_;
  KernelSampler reversed_;
  std::vector<std::optional<DiscreteSampler>> samplers_;
};

inline RunOutcome sm_fill_run(const Kernel& k, const Dist& pi, const Poset& p, const UpwardKernelFamily& m,
                              std::size_t t, RngStream& rng) {
  return SmSampler(k, pi, p, m).run(t, rng);
}

struct CftpResult {
  State output = 0;
  std::size_t backward_time = 0;
};

/// Doubling CFTP over windows t0, 2 t0, 4 t0, ... Labels for the most recent
/// times are kept and reused when the window grows.
inline CftpResult cftp_run(const TransitionRule& rule, std::size_t t0, std::size_t t_max, RngStream& rng) {
  require(t0 >= 1, ErrorKind::Validation, "cftp needs t0 >= 1");
  const std::size_t n = rule.state_count();
  const LabelSampler draw(rule);
  std::vector<Label> labels;  // labels[j] drives time -(j+1) -> -j
  for (std::size_t window = t0;; window *= 2) {
    if (window > t_max) fail(ErrorKind::HorizonExceeded, "no coalescence by t_max = " + std::to_string(t_max));
    while (labels.size() < window) labels.push_back(draw.draw(rng));
    std::vector<State> ys(n);
    for (State z = 0; z < n; ++z) ys[z] = z;
    for (std::size_t j = window; j > 0; --j)
      for (auto& y : ys) y = rule.apply(y, labels[j - 1]);
    if (std::all_of(ys.begin(), ys.end(), [&](State y) { return y == ys[0]; })) return {ys[0], window};
  }
}

struct ReadOnceResult {
  State output = 0;
  std::size_t blocks_used = 0;
};

/// Read-once CFTP with width-t blocks of fresh labels. The output is the state
/// entering the second coalescing block.
inline ReadOnceResult read_once_cftp_run(const TransitionRule& rule, std::size_t t, RngStream& rng,
                                         std::size_t max_blocks = 1'000'000) {
  const std::size_t n = rule.state_count();
  const LabelSampler draw(rule);
  std::vector<State> ys(n);
  std::optional<State> current;
  for (std::size_t block = 1; block <= max_blocks; ++block) {
    for (State z = 0; z < n; ++z) ys[z] = z;
    for (std::size_t s = 0; s < t; ++s) {
      const Label u = draw.draw(rng);
      for (auto& y : ys) y = rule.apply(y, u);
    }
    const bool coalesced = std::all_of(ys.begin(), ys.end(), [&](State y) { return y == ys[0]; });
    if (current && coalesced) return {*current, block};
    if (current) current = ys[*current];
    else if (coalesced) current = ys[0];
  }
  fail(ErrorKind::HorizonExceeded, "read-once CFTP exceeded " + std::to_string(max_blocks) + " blocks");
}

struct TourBatch {
  std::vector<Trajectory> tours;  // each tour has t0 states
  std::size_t t0 = 0;
  bool approximate = false;  // seed not known to be pi-distributed
  State first_seed = 0;
};

/// Chained guarantee-time backward runs. Tour i is (X_{-(t0-1)}, ..., X_0) of
/// run i; the next run is seeded with X_{-T'}. Without a caller seed, the
/// first seed comes from a preliminary backward-search run.
inline TourBatch tours_generate(const Kernel& k, const Dist& pi, const TransitionRule& rule, std::size_t t0,
                                std::size_t nu, std::optional<State> seed, std::size_t t_max, RngStream& rng) {
  require(t0 >= 1, ErrorKind::Validation, "tours need t0 >= 1");
  const AltAlgSampler sampler(k, pi, rule, pi);
  TourBatch batch;
  batch.t0 = t0;
  batch.approximate = seed.has_value();
  State x0 = seed ? *seed : *sampler.run(t_max, SearchSchedule::every_t(), rng).output;
  batch.first_seed = x0;
  const auto search = SearchSchedule::guarantee(t0);
  for (std::size_t i = 0; i < nu; ++i) {
    const auto tr = sampler.trace_from(x0, t_max, search, rng);
    Trajectory tour;
    for (std::size_t j = t0; j > 0; --j) tour.states.push_back(tr.backward[j - 1]);
    batch.tours.push_back(std::move(tour));
    x0 = *tr.outcome.output;
  }
  return batch;
}

}  // namespace perfect
