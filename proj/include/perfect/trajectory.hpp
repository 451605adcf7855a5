#pragma once

#include <vector>

#include "perfect/chain.hpp"
#include "perfect/rule.hpp"

namespace perfect {

/// States at times 0..t.
struct Trajectory {
  std::vector<State> states;

  std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
  State at(std::size_t s) const { return states.at(s); }
  State back() const { return states.back(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Driving labels u_1..u_t.
struct DrivingSequence {
  std::vector<Label> labels;

  std::size_t length() const { return labels.size(); }
  friend bool operator==(const DrivingSequence&, const DrivingSequence&) = default;
};

}  // namespace perfect
