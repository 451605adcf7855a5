#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "perfect/detection.hpp"

namespace perfect {

/// Move-to-front chain on orderings of n records.
struct MtfChain {
  StateSpace states;  // permutations, front first, lexicographic
  std::vector<std::vector<std::size_t>> permutations;
  Kernel kernel;
  TransitionRule rule;  // label r = "request record r+1"
  DetectorPtr detector;
};

inline MtfChain mtf_chain(const std::vector<Rational>& weights) {
  const std::size_t n = weights.size();
  require(n >= 1, ErrorKind::Validation, "MTF needs at least one record");
  require(n <= 5, ErrorKind::TooManyRecords, "MTF supports at most 5 records, got " + std::to_string(n));
  Rational total = 0;
  for (const auto& w : weights) {
    require(w > 0, ErrorKind::Validation, "MTF record weights must be positive");
    total += w;
  }

  MtfChain out;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::string> names;
  do {
    out.permutations.push_back(perm);
    std::string name;
    for (auto r : perm) name += std::to_string(r + 1);
    names.push_back(name);
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.states = StateSpace(names);

  std::vector<std::string> labels;
  std::vector<Rational> mu;
  std::vector<std::vector<State>> table;
  for (std::size_t r = 0; r < n; ++r) {
    labels.push_back(std::to_string(r + 1));
    mu.push_back(weights[r] / total);
    std::vector<State> images;
    for (const auto& p : out.permutations) {
      std::vector<std::size_t> moved{r};
      for (auto q : p)
        if (q != r) moved.push_back(q);
      const auto it = std::find(out.permutations.begin(), out.permutations.end(), moved);
      images.push_back(static_cast<State>(it - out.permutations.begin()));
    }
    table.push_back(std::move(images));
  }
  out.rule = TransitionRule(out.permutations.size(), std::move(labels), std::move(mu), std::move(table));
  out.kernel = kernel_from_rule(out.rule);
  out.detector = std::make_shared<MtfDetector>(n);
  return out;
}

}  // namespace perfect
