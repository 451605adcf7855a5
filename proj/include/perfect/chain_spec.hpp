#pragma once

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "perfect/chain.hpp"
#include "perfect/mtf.hpp"
#include "perfect/poset.hpp"
#include "perfect/rule.hpp"

namespace perfect {

/// A validated chain description loaded from JSON.
///
///   {
///     "states": ["a", "b", ...],
///     "pi":     ["1/3", ...],                        optional, solved if absent
///     "kernel": [["1/2", "1/2", "0"], ...],          optional if a rule is given
///     "rule":   {"labels": [...], "mu": [...], "table": {"label": [image per state]}}
///             | {"kind": "independent"}
///             | {"kind": "inverse-transform", "order": [...]},
///     "poset":  {"relations": [["a", "b"], ...], "bottom": "a", "top": "c"},
///     "mtf":    {"weights": ["1", "2", "1"]}         replaces states/kernel/rule
///   }
///
/// All probabilities are exact "p/q" strings.
struct ChainSpec {
  StateSpace states;
  Kernel kernel;
  Dist pi;
  TransitionRule rule;
  std::string rule_kind;  // "explicit", "independent", "inverse-transform", "mtf"
  std::optional<Poset> poset;
  std::optional<MtfChain> mtf;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void spec_error(ErrorKind kind, const std::string& path, const std::string& msg) {
  fail(kind, path + ": " + msg);
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) spec_error(ErrorKind::Validation, path, "missing field \"" + key + "\"");
  return obj.at(key);
}

inline const json& array_at(const json& v, const std::string& path) {
  if (!v.is_array()) spec_error(ErrorKind::Parse, path, "expected an array");
  return v;
}

inline std::string string_at(const json& v, const std::string& path) {
  if (!v.is_string()) spec_error(ErrorKind::Parse, path, "expected a string");
  return v.get<std::string>();
}

inline Rational rational_at(const json& v, const std::string& path) {
  if (!v.is_string()) spec_error(ErrorKind::Parse, path, "rationals must be strings of the form \"p/q\"");
  try {
    return parse_rational(v.get<std::string>());
  } catch (const Error& e) {
    spec_error(e.kind(), path, e.what());
  }
}

inline std::vector<Rational> rationals_at(const json& v, const std::string& path, std::size_t expected) {
  array_at(v, path);
  if (v.size() != expected)
    spec_error(ErrorKind::Validation, path, "expected " + std::to_string(expected) + " entries, got " +
                                                std::to_string(v.size()));
  std::vector<Rational> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(rational_at(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline State state_at(const StateSpace& states, const json& v, const std::string& path) {
  const std::string label = string_at(v, path);
  const auto s = states.find(label);
  if (!s) spec_error(ErrorKind::Validation, path, "unknown state \"" + label + "\"");
  return *s;
}

template <class F>
decltype(auto) with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    spec_error(e.kind(), path, e.what());
  }
}

inline TransitionRule explicit_rule(const StateSpace& states, const json& r) {
  const auto& labels = array_at(field(r, "labels", "rule"), "rule.labels");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < labels.size(); ++i)
    names.push_back(string_at(labels[i], "rule.labels[" + std::to_string(i) + "]"));
  const auto mu = rationals_at(field(r, "mu", "rule"), "rule.mu", names.size());
  const auto& table = field(r, "table", "rule");
  if (!table.is_object()) spec_error(ErrorKind::Parse, "rule.table", "expected an object keyed by label");
  std::vector<std::vector<State>> images;
  for (const auto& name : names) {
    const std::string path = "rule.table." + name;
    if (!table.contains(name)) spec_error(ErrorKind::Validation, path, "missing images for label");
    const auto& row = array_at(table.at(name), path);
    if (row.size() != states.size())
      spec_error(ErrorKind::Validation, path, "table is not total on states");
    std::vector<State> img;
    for (std::size_t x = 0; x < row.size(); ++x) img.push_back(state_at(states, row[x], path + "[" + std::to_string(x) + "]"));
    images.push_back(std::move(img));
  }
  for (const auto& [key, value] : table.items()) {
    static_cast<void>(value);
    if (std::find(names.begin(), names.end(), key) == names.end())
      spec_error(ErrorKind::Validation, "rule.table." + key, "label not listed in rule.labels");
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] <= 0) spec_error(ErrorKind::Validation, "rule.mu[" + std::to_string(i) + "]", "weight must be positive");
  return with_path("rule", [&] { return TransitionRule(states.size(), names, mu, images); });
}

}  // namespace detail

inline ChainSpec parse_chain_spec(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("$: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Parse, "$: expected a JSON object");

  ChainSpec spec;
  if (doc.contains("mtf")) {
    const auto& m = doc.at("mtf");
    const auto& w = detail::array_at(detail::field(m, "weights", "mtf"), "mtf.weights");
    const auto weights = detail::rationals_at(w, "mtf.weights", w.size());
    spec.mtf = detail::with_path("mtf", [&] { return mtf_chain(weights); });
    spec.states = spec.mtf->states;
    spec.kernel = spec.mtf->kernel;
    spec.rule = spec.mtf->rule;
    spec.rule_kind = "mtf";
    spec.pi = detail::with_path("mtf", [&] { return solve_stationary(spec.kernel); });
    return spec;
  }

  const auto& states = detail::array_at(detail::field(doc, "states", "$"), "states");
  if (states.empty()) fail(ErrorKind::Validation, "states: state list must be nonempty");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < states.size(); ++i)
    labels.push_back(detail::string_at(states[i], "states[" + std::to_string(i) + "]"));
  spec.states = detail::with_path("states", [&] { return StateSpace(labels); });
  const std::size_t n = spec.states.size();

  std::optional<Kernel> kernel;
  if (doc.contains("kernel")) {
    const auto& rows = detail::array_at(doc.at("kernel"), "kernel");
    if (rows.size() != n) fail(ErrorKind::Validation, "kernel: expected " + std::to_string(n) + " rows");
    std::vector<Dist> dists;
    for (std::size_t x = 0; x < n; ++x) {
      const std::string path = "kernel[" + std::to_string(x) + "]";
      auto row = detail::rationals_at(rows[x], path, n);
      dists.push_back(detail::with_path(path, [&] { return Dist(std::move(row)); }));
    }
    kernel = Kernel(std::move(dists));
  }

  std::optional<TransitionRule> rule;
  std::string kind = "independent";
  if (doc.contains("rule")) {
    const auto& r = doc.at("rule");
    if (!r.is_object()) fail(ErrorKind::Parse, "rule: expected an object");
    if (r.contains("kind")) kind = detail::string_at(r.at("kind"), "rule.kind");
    else kind = "explicit";
    if (kind == "explicit") {
      rule = detail::explicit_rule(spec.states, r);
    } else if (kind == "independent" || kind == "inverse-transform") {
      if (!kernel) fail(ErrorKind::Validation, "rule.kind: \"" + kind + "\" needs a kernel");
      if (kind == "independent") {
        rule = detail::with_path("rule", [&] { return independent_transitions_rule(*kernel); });
      } else {
        std::vector<State> order;
        const auto& o = detail::array_at(detail::field(r, "order", "rule"), "rule.order");
        for (std::size_t i = 0; i < o.size(); ++i)
          order.push_back(detail::state_at(spec.states, o[i], "rule.order[" + std::to_string(i) + "]"));
        rule = detail::with_path("rule.order", [&] { return inverse_transform_rule(*kernel, order); });
      }
    } else {
      fail(ErrorKind::Validation, "rule.kind: unknown rule kind \"" + kind + "\"");
    }
  }
  if (!kernel && !rule) fail(ErrorKind::Validation, "$: at least one of \"kernel\" and \"rule\" is required");
  if (!rule) rule = detail::with_path("rule", [&] { return independent_transitions_rule(*kernel); });
  const Kernel from_rule = kernel_from_rule(*rule);
  if (kernel && !(*kernel == from_rule)) fail(ErrorKind::Validation, "rule: does not reproduce the kernel exactly");
  spec.kernel = from_rule;
  spec.rule = std::move(*rule);
  spec.rule_kind = kind;

  if (doc.contains("pi")) {
    auto w = detail::rationals_at(doc.at("pi"), "pi", n);
    spec.pi = detail::with_path("pi", [&] { return Dist(std::move(w)); });
    if (!is_stationary(spec.kernel, spec.pi)) fail(ErrorKind::Validation, "pi: not stationary for the kernel");
  } else {
    spec.pi = detail::with_path("kernel", [&] { return solve_stationary(spec.kernel); });
  }

  if (doc.contains("poset")) {
    const auto& p = doc.at("poset");
    std::vector<std::pair<State, State>> rel;
    const auto& rs = detail::array_at(detail::field(p, "relations", "poset"), "poset.relations");
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const std::string path = "poset.relations[" + std::to_string(i) + "]";
      const auto& pair = detail::array_at(rs[i], path);
      if (pair.size() != 2) fail(ErrorKind::Validation, path + ": expected a pair");
      rel.emplace_back(detail::state_at(spec.states, pair[0], path + "[0]"),
                       detail::state_at(spec.states, pair[1], path + "[1]"));
    }
    spec.poset = detail::with_path("poset", [&] { return Poset(n, rel); });
    if (p.contains("bottom") && detail::state_at(spec.states, p.at("bottom"), "poset.bottom") != spec.poset->bottom())
      fail(ErrorKind::Validation, "poset.bottom: is not the least element");
    if (p.contains("top") && detail::state_at(spec.states, p.at("top"), "poset.top") != spec.poset->top())
      fail(ErrorKind::Validation, "poset.top: is not the greatest element");
  }
  return spec;
}

}  // namespace perfect
