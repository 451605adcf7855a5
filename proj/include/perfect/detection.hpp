#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfect/poset.hpp"
#include "perfect/rule.hpp"
#include "perfect/trajectory.hpp"

namespace perfect {

using DetState = std::vector<std::uint32_t>;

/// A process D_s computed from the driving labels alone. Entry into the
/// target set must certify coalescence of every forward trajectory.
class DetectionProcess {
 public:
  virtual ~DetectionProcess() = default;
  virtual DetState initial() const = 0;
  virtual DetState step(const DetState& d, Label u) const = 0;
  virtual bool in_target(const DetState& d) const = 0;
  virtual std::string name() const = 0;
};

using DetectorPtr = std::shared_ptr<const DetectionProcess>;

/// Tracks the image set {Y_s(x) : x}; fires exactly on coalescence.
class FullTrackingDetector final : public DetectionProcess {
 public:
  explicit FullTrackingDetector(TransitionRule rule) : rule_(std::move(rule)) {}

  DetState initial() const override {
    DetState d(rule_.state_count());
    for (std::size_t x = 0; x < d.size(); ++x) d[x] = static_cast<std::uint32_t>(x);
    return d;
  }

  DetState step(const DetState& d, Label u) const override {
    DetState next;
    next.reserve(d.size());
    for (auto y : d) next.push_back(static_cast<std::uint32_t>(rule_.apply(y, u)));
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    return next;
  }

  bool in_target(const DetState& d) const override { return d.size() == 1; }
  std::string name() const override { return "full"; }

 private:
  TransitionRule rule_;
};

/// Bounding interval [Y_s(bottom), Y_s(top)] for a monotone rule.
class BoundingDetector final : public DetectionProcess {
 public:
  BoundingDetector(TransitionRule rule, Poset poset) : rule_(std::move(rule)), poset_(std::move(poset)) {
    require(poset_.size() == rule_.state_count(), ErrorKind::Validation, "poset and rule sizes differ");
    const auto check = is_realizably_monotone(rule_, poset_);
    if (!check.holds) {
      const auto& w = *check.witness;
      fail(ErrorKind::NotMonotone, "rule is not monotone: x=" + std::to_string(w.x) + " y=" + std::to_string(w.y) +
                                       " label=" + rule_.label_name(w.u));
    }
  }

  DetState initial() const override {
    return {static_cast<std::uint32_t>(poset_.bottom()), static_cast<std::uint32_t>(poset_.top())};
  }

  DetState step(const DetState& d, Label u) const override {
    return {static_cast<std::uint32_t>(rule_.apply(d[0], u)), static_cast<std::uint32_t>(rule_.apply(d[1], u))};
  }

  bool in_target(const DetState& d) const override { return d[0] == d[1]; }
  std::string name() const override { return "bounding"; }

 private:
  TransitionRule rule_;
  Poset poset_;
};

/// Move-to-front: the set of records requested so far. Labels are record
/// indices. Fires once at least n-1 distinct records have been requested.
class MtfDetector final : public DetectionProcess {
 public:
  explicit MtfDetector(std::size_t records) : n_(records) {
    require(records >= 1 && records <= 31, ErrorKind::Validation, "MTF detector needs 1..31 records");
  }

  DetState initial() const override { return {0}; }
  DetState step(const DetState& d, Label u) const override { return {d[0] | (std::uint32_t{1} << u)}; }
  bool in_target(const DetState& d) const override {
    return static_cast<std::size_t>(std::popcount(d[0])) + 1 >= n_;
  }
  std::string name() const override { return "mtf"; }

 private:
  std::size_t n_;
};

/// First s in 0..t with D_s in the target set.
inline std::optional<std::size_t> first_detection(const DetectionProcess& det, const DrivingSequence& u) {
  DetState d = det.initial();
  if (det.in_target(d)) return 0;
  for (std::size_t s = 0; s < u.labels.size(); ++s) {
    d = det.step(d, u.labels[s]);
    if (det.in_target(d)) return s + 1;
  }
  return std::nullopt;
}

/// Y_s(x) = phi(Y_{s-1}(x), u_s) from every start x; result indexed by x.
inline std::vector<Trajectory> coupled_forward(const TransitionRule& rule, const DrivingSequence& u) {
  std::vector<Trajectory> out(rule.state_count());
  for (State x = 0; x < rule.state_count(); ++x) {
    out[x].states.push_back(x);
    for (Label l : u.labels) out[x].states.push_back(rule.apply(out[x].back(), l));
  }
  return out;
}

inline bool is_coalesced(const std::vector<Trajectory>& trajs) {
  for (const auto& tr : trajs)
    if (tr.back() != trajs.front().back()) return false;
  return true;
}

struct BoundingInterval {
  State lo;
  State hi;
  friend bool operator==(const BoundingInterval&, const BoundingInterval&) = default;
};

inline std::vector<BoundingInterval> bounding_forward(const TransitionRule& rule, const Poset& p,
                                                      const DrivingSequence& u) {
  const auto check = is_realizably_monotone(rule, p);
  require(check.holds, ErrorKind::NotMonotone, "bounding_forward needs a monotone rule");
  std::vector<BoundingInterval> out{{p.bottom(), p.top()}};
  for (Label l : u.labels) out.push_back({rule.apply(out.back().lo, l), rule.apply(out.back().hi, l)});
  return out;
}

struct SoundnessCheck {
  bool sound = true;
  std::optional<DrivingSequence> counterexample;
};

/// Exhaustive check over all |labels|^t sequences that firing by time t
/// implies coalescence at time t.
inline SoundnessCheck detection_soundness_check(const TransitionRule& rule, const DetectionProcess& det, std::size_t t,
                                                std::uint64_t cap = 1'000'000) {
  const Label labels = rule.label_count();
  long double count = 1;
  for (std::size_t s = 0; s < t; ++s) count *= static_cast<long double>(labels);
  require(count <= static_cast<long double>(cap), ErrorKind::EnumerationTooLarge,
          "soundness check would enumerate more than " + std::to_string(cap) + " sequences");

  SoundnessCheck result;
  DrivingSequence path;
  std::vector<std::uint32_t> images(rule.state_count());
  for (std::size_t x = 0; x < images.size(); ++x) images[x] = static_cast<std::uint32_t>(x);

  auto visit = [&](auto&& self, const std::vector<std::uint32_t>& ys, const DetState& d, bool fired) -> bool {
    fired = fired || det.in_target(d);
    if (path.labels.size() == t) {
      const bool coalesced = std::all_of(ys.begin(), ys.end(), [&](auto y) { return y == ys.front(); });
      if (fired && !coalesced) {
        result.sound = false;
        result.counterexample = path;
        return false;
      }
      return true;
    }
    for (Label u = 0; u < labels; ++u) {
      std::vector<std::uint32_t> next(ys.size());
      for (std::size_t x = 0; x < ys.size(); ++x) next[x] = static_cast<std::uint32_t>(rule.apply(ys[x], u));
      path.labels.push_back(u);
      const bool keep_going = self(self, next, det.step(d, u), fired);
      path.labels.pop_back();
      if (!keep_going) return false;
    }
    return true;
  };
  visit(visit, images, det.initial(), false);
  return result;
}

}  // namespace perfect
