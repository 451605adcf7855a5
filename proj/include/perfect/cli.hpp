#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "perfect/chain_spec.hpp"
#include "perfect/detection.hpp"
#include "perfect/oracle.hpp"
#include "perfect/samplers.hpp"
#include "perfect/stats.hpp"

namespace perfect {

namespace cli {

using Json = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::string spec;
  std::size_t t = 2;
  std::optional<std::size_t> t0;
  std::optional<std::string> seed_state;
  std::uint64_t rng_seed = 1;
  std::size_t reps = 1;
  std::string detector = "full";
  std::string search = "every";
  std::optional<std::string> out;
  std::string format = "json";
  std::uint64_t max_attempts = 0;
  std::string schedule = "doubling";
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Parse: return 2;
    case ErrorKind::HorizonExceeded:
    case ErrorKind::MaxAttemptsExceeded: return 3;
    case ErrorKind::EnumerationTooLarge: return 4;
    default: return 1;
  }
}

inline std::uint64_t enumeration_cap() {
  if (const char* env = std::getenv("PERFECT_MCMC_ENUM_CAP")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      fail(ErrorKind::Validation, "PERFECT_MCMC_ENUM_CAP is not an integer: \"" + std::string(env) + "\"");
    }
  }
  return kDefaultEnumerationCap;
}

inline ChainSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open spec file \"" + path + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_chain_spec(buf.str());
}

inline DetectorPtr make_detector(const ChainSpec& spec, const std::string& name) {
  if (name == "full") return std::make_shared<FullTrackingDetector>(spec.rule);
  if (name == "bounding") {
    if (!spec.poset) fail(ErrorKind::Validation, "--detector bounding needs a poset in the spec");
    return std::make_shared<BoundingDetector>(spec.rule, *spec.poset);
  }
  if (name == "mtf") {
    if (!spec.mtf) fail(ErrorKind::Validation, "--detector mtf needs an mtf spec");
    return spec.mtf->detector;
  }
  fail(ErrorKind::Validation, "unknown detector \"" + name + "\"");
}

inline SearchSchedule make_search(const Options& o) {
  if (o.search == "every") return SearchSchedule::every_t();
  if (o.search == "pow2") return SearchSchedule::powers_of_2();
  if (o.search == "guarantee") return SearchSchedule::guarantee(o.t0.value_or(1));
  fail(ErrorKind::Validation, "unknown search schedule \"" + o.search + "\"");
}

inline State seed_state(const ChainSpec& spec, const Options& o, State fallback) {
  return o.seed_state ? spec.states.index_of(*o.seed_state) : fallback;
}

inline Json law_json(const StateSpace& states, const std::vector<Rational>& law) {
  Json j = Json::object();
  for (State x = 0; x < law.size(); ++x) j[states.label(x)] = to_string(law[x]);
  return j;
}

/// Per-replication rows: a header plus one vector of cells each.
struct Table {
  std::vector<std::string> columns;
  std::vector<Json> rows;
};

inline Json outcome_json(const ChainSpec& spec, std::size_t rep, const RunOutcome& o) {
  Json j;
  j["replication"] = rep;
  j["accepted"] = o.accepted;
  j["output"] = o.output ? Json(spec.states.label(*o.output)) : Json(nullptr);
  j["t_used"] = o.t_used;
  j["attempts"] = o.attempts;
  j["seed_state"] = spec.states.label(o.seed_state);
  j["rng_seed"] = o.rng_seed;
  j["horizon"] = o.horizon;
  j["coalescence_time"] = o.coalescence_time ? Json(*o.coalescence_time) : Json(nullptr);
  return j;
}

inline const std::vector<std::string> kOutcomeColumns{"replication", "accepted",   "output",
                                                      "t_used",      "attempts",   "seed_state",
                                                      "rng_seed",    "horizon",    "coalescence_time"};

inline std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

inline void write_result(const Options& o, const Json& doc, const Table& table, std::ostream& out) {
  std::ostringstream text;
  if (o.format == "json") {
    text << doc.dump(2) << "\n";
  } else if (o.format == "csv") {
    for (std::size_t c = 0; c < table.columns.size(); ++c) text << (c ? "," : "") << table.columns[c];
    text << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < table.columns.size(); ++c) text << (c ? "," : "") << (row.contains(table.columns[c]) ? csv_cell(row.at(table.columns[c])) : "");
      text << "\n";
    }
  } else {
    fail(ErrorKind::Validation, "unknown format \"" + o.format + "\"");
  }
  if (o.out) {
    std::ofstream file(*o.out, std::ios::binary);
    if (!file) fail(ErrorKind::Validation, "cannot write \"" + *o.out + "\"");
    file << text.str();
  } else {
    out << text.str();
  }
}

inline Json header(const Options& o) {
  Json j;
  j["command"] = o.command;
  j["spec"] = o.spec;
  j["rng_seed"] = o.rng_seed;
  return j;
}

inline std::string decimal(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

inline int run_fill(const ChainSpec& spec, const Options& o, std::ostream& out) {
  const FillSampler sampler(spec.kernel, spec.pi, spec.rule, make_detector(spec, o.detector));
  const State x_t = seed_state(spec, o, 0);
  const auto schedule = o.schedule == "fixed" ? WindowSchedule::Fixed : WindowSchedule::Doubling;
  const RngStream root(o.rng_seed);
  Json doc = header(o);
  doc["t"] = o.t;
  doc["detector"] = o.detector;
  doc["seed_state"] = spec.states.label(x_t);
  doc["max_attempts"] = o.max_attempts;
  Table table{kOutcomeColumns, {}};
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < o.reps; ++i) {
    RngStream rng = root.split(i);
    const RunOutcome r = o.max_attempts == 0 ? sampler.run(o.t, x_t, rng)
                                             : fill_sample(sampler, o.t, x_t, o.max_attempts, rng, schedule);
    accepted += r.accepted;
    table.rows.push_back(outcome_json(spec, i, r));
  }
  doc["accepted"] = accepted;
  doc["results"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_altalg(const ChainSpec& spec, const Options& o, std::ostream& out) {
  const Dist pi_hat = o.seed_state ? Dist::point_mass(spec.states.size(), seed_state(spec, o, 0)) : spec.pi;
  const AltAlgSampler sampler(spec.kernel, spec.pi, spec.rule, pi_hat);
  const RngStream root(o.rng_seed);
  Json doc = header(o);
  doc["t_max"] = o.t;
  doc["search"] = o.search;
  Table table{kOutcomeColumns, {}};
  for (std::size_t i = 0; i < o.reps; ++i) {
    RngStream rng = root.split(i);
    table.rows.push_back(outcome_json(spec, i, sampler.run(o.t, make_search(o), rng)));
  }
  doc["results"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_sm(const ChainSpec& spec, const Options& o, std::ostream& out) {
  if (!spec.poset) fail(ErrorKind::Validation, "sm needs a poset in the spec");
  const SmSampler sampler(spec.kernel, spec.pi, *spec.poset, upward_family_from_rule(spec.rule, *spec.poset));
  const RngStream root(o.rng_seed);
  Json doc = header(o);
  doc["t"] = o.t;
  Table table{kOutcomeColumns, {}};
  for (std::size_t i = 0; i < o.reps; ++i) {
    RngStream rng = root.split(i);
    table.rows.push_back(outcome_json(spec, i, sampler.run(o.t, rng)));
  }
  doc["results"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_cftp(const ChainSpec& spec, const Options& o, std::ostream& out) {
  const RngStream root(o.rng_seed);
  Json doc = header(o);
  doc["t0"] = o.t0.value_or(1);
  doc["t_max"] = o.t;
  Table table{{"replication", "rng_seed", "output", "backward_time"}, {}};
  for (std::size_t i = 0; i < o.reps; ++i) {
    RngStream rng = root.split(i);
    const auto r = cftp_run(spec.rule, o.t0.value_or(1), o.t, rng);
    Json row;
    row["replication"] = i;
    row["rng_seed"] = rng.seed();
    row["output"] = spec.states.label(r.output);
    row["backward_time"] = r.backward_time;
    table.rows.push_back(row);
  }
  doc["results"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_read_once(const ChainSpec& spec, const Options& o, std::ostream& out) {
  const RngStream root(o.rng_seed);
  Json doc = header(o);
  doc["t"] = o.t;
  Table table{{"replication", "rng_seed", "output", "blocks_used"}, {}};
  for (std::size_t i = 0; i < o.reps; ++i) {
    RngStream rng = root.split(i);
    const auto r = read_once_cftp_run(spec.rule, o.t, rng);
    Json row;
    row["replication"] = i;
    row["rng_seed"] = rng.seed();
    row["output"] = spec.states.label(r.output);
    row["blocks_used"] = r.blocks_used;
    table.rows.push_back(row);
  }
  doc["results"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_tours(const ChainSpec& spec, const Options& o, std::ostream& out) {
  RngStream rng(o.rng_seed);
  const std::size_t t0 = o.t0.value_or(1);
  std::optional<State> seed;
  if (o.seed_state) seed = spec.states.index_of(*o.seed_state);
  const auto batch = tours_generate(spec.kernel, spec.pi, spec.rule, t0, o.reps, seed, o.t, rng);
  Json doc = header(o);
  doc["t0"] = t0;
  doc["t_max"] = o.t;
  doc["approximate"] = batch.approximate;
  doc["first_seed"] = spec.states.label(batch.first_seed);
  Table table{{"tour"}, {}};
  for (std::size_t j = 0; j < t0; ++j) table.columns.push_back("w" + std::to_string(j + 1));
  for (std::size_t i = 0; i < batch.tours.size(); ++i) {
    Json row;
    row["tour"] = i;
    for (std::size_t j = 0; j < t0; ++j) row["w" + std::to_string(j + 1)] = spec.states.label(batch.tours[i].at(j));
    table.rows.push_back(row);
  }
  doc["tours"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_oracle(const ChainSpec& spec, const Options& o, std::ostream& out) {
  const auto det = make_detector(spec, o.detector);
  const Dist seed = o.seed_state ? Dist::point_mass(spec.states.size(), seed_state(spec, o, 0)) : spec.pi;
  const std::uint64_t cap = enumeration_cap();
  const auto rep = enumerate_fill(spec.kernel, spec.pi, spec.rule, *det, o.t, seed, cap);
  Json doc;
  doc["command"] = o.command;
  doc["spec"] = o.spec;
  doc["t"] = o.t;
  doc["detector"] = o.detector;
  doc["seed"] = o.seed_state ? Json(*o.seed_state) : Json("pi");
  doc["pi"] = law_json(spec.states, spec.pi.weights());
  doc["p_accept"] = to_string(rep.p_accept);
  doc["p_first_space"] = to_string(rep.p_first_space);
  doc["rnd_density"] = law_json(spec.states, rep.rnd_density);
  Table table{{"s"}, {}};
  for (const auto& l : spec.states.labels()) table.columns.push_back(l);
  for (std::size_t s = 0; s < rep.cond_law.size(); ++s) {
    Json row;
    row["s"] = s;
    for (State x = 0; x < spec.states.size(); ++x) row[spec.states.label(x)] = to_string(rep.cond_law[s][x]);
    table.rows.push_back(row);
  }
  doc["cond_law"] = table.rows;
  doc["cftp_window"] = to_string(enumerate_cftp_window(spec.rule, o.t, cap));
  doc["terms"] = rep.terms;
  write_result(o, doc, table, out);
  return 0;
}

inline int run_validate(const ChainSpec& spec, const Options& o, std::ostream& out) {
  const FillSampler sampler(spec.kernel, spec.pi, spec.rule, make_detector(spec, o.detector));
  const State x_t = seed_state(spec, o, 0);
  const auto schedule = o.schedule == "fixed" ? WindowSchedule::Fixed : WindowSchedule::Doubling;
  const std::uint64_t max_attempts = o.max_attempts == 0 ? 64 : o.max_attempts;
  const RngStream root(o.rng_seed);
  EmpiricalLaw law(spec.states.size());
  std::vector<double> attempts;
  for (std::size_t i = 0; i < o.reps; ++i) {
    RngStream rng = root.split(i);
    const auto r = fill_sample(sampler, o.t, x_t, max_attempts, rng, schedule);
    law.add(*r.output);
    attempts.push_back(static_cast<double>(r.attempts));
  }
  Json doc = header(o);
  doc["t0"] = o.t;
  doc["schedule"] = o.schedule;
  doc["detector"] = o.detector;
  doc["seed_state"] = spec.states.label(x_t);
  doc["n"] = law.n;
  Table table{{"state", "count", "empirical", "pi"}, {}};
  if (law.n > 0) {
    const auto tv = tv_distance(law, spec.pi);
    const auto chi = chi_square_gof(law, spec.pi);
    const auto ms = mean_and_se(attempts);
    doc["tv_distance"] = decimal(tv);
    doc["chi_square"] = {{"statistic", decimal(chi.statistic)},
                         {"dof", chi.dof},
                         {"p_value", decimal(chi.p_value)},
                         {"low_expected", chi.low_expected}};
    doc["mean_attempts"] = decimal(ms.mean);
    doc["mean_attempts_se"] = decimal(ms.se);
    for (State x = 0; x < spec.states.size(); ++x) {
      Json row;
      row["state"] = spec.states.label(x);
      row["count"] = law.counts[x];
      row["empirical"] = decimal(static_cast<double>(law.counts[x]) / static_cast<double>(law.n));
      row["pi"] = decimal(to_double(spec.pi[x]));
      table.rows.push_back(row);
    }
  }
  doc["law"] = table.rows;
  write_result(o, doc, table, out);
  return 0;
}

}  // namespace cli

/// Entry point shared by the executable and the tests. args excludes argv[0].
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  cli::Options o;
  CLI::App app{"Perfect sampling for finite Markov chains", "perfect_mcmc"};
  app.require_subcommand(1);
  const std::vector<std::string> commands{"fill", "altalg", "sm", "cftp", "read-once", "tours", "oracle", "validate"};
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--spec", o.spec, "chain spec JSON")->required();
    sub->add_option("--t", o.t, "window length, block width or horizon");
    sub->add_option("--t0", o.t0, "initial window or guarantee length");
    sub->add_option("--seed-state", o.seed_state, "seed state label");
    sub->add_option("--rng-seed", o.rng_seed, "root RNG seed");
    sub->add_option("--reps", o.reps, "replications (tours: number of tours)");
    sub->add_option("--detector", o.detector)->check(CLI::IsMember({"full", "bounding", "mtf"}));
    sub->add_option("--search", o.search)->check(CLI::IsMember({"every", "pow2", "guarantee"}));
    sub->add_option("--out", o.out, "output file");
    sub->add_option("--format", o.format)->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--max-attempts", o.max_attempts, "fill: retry until acceptance, at most this many attempts");
    sub->add_option("--schedule", o.schedule)->check(CLI::IsMember({"doubling", "fixed"}));
    sub->callback([&o, name] { o.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, out, msg);
    err << msg.str();
    return code == 0 ? 0 : 2;
  }

  try {
    const ChainSpec spec = cli::load_spec(o.spec);
    if (o.command == "fill") return cli::run_fill(spec, o, out);
    if (o.command == "altalg") return cli::run_altalg(spec, o, out);
    if (o.command == "sm") return cli::run_sm(spec, o, out);
    if (o.command == "cftp") return cli::run_cftp(spec, o, out);
    if (o.command == "read-once") return cli::run_read_once(spec, o, out);
    if (o.command == "tours") return cli::run_tours(spec, o, out);
    if (o.command == "oracle") return cli::run_oracle(spec, o, out);
    if (o.command == "validate") return cli::run_validate(spec, o, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return cli::exit_code(e.kind());
  }
  return 1;
}

}  // namespace perfect
