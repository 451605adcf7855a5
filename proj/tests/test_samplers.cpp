#include <gtest/gtest.h>

#include <memory>

#include "fixtures.hpp"

using namespace perfect;
using fixtures::r;

namespace {

std::vector<double> to_double(const std::vector<Rational>& w) {
  std::vector<double> out;
  for (const auto& x : w) out.push_back(x.get_d());
  return out;
}

DetectorPtr full(const TransitionRule& rule) { return std::make_shared<FullTrackingDetector>(rule); }

}  // namespace

TEST(FillSampler, TraceIsConsistent) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = independent_transitions_rule(k);
  const FillSampler sampler(k, fixtures::uniform3(), rule, full(rule));
  RngStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto tr = sampler.trace(3, 1, rng);
    ASSERT_EQ(tr.path.length(), 3u);
    EXPECT_EQ(tr.path.back(), 1u);
    for (std::size_t s = 1; s <= 3; ++s) EXPECT_EQ(rule.apply(tr.path.at(s - 1), tr.u.labels[s - 1]), tr.path.at(s));
    EXPECT_EQ(tr.outcome.accepted, is_coalesced(coupled_forward(rule, tr.u)));
    EXPECT_EQ(tr.outcome.t_used, 6u);
    if (tr.outcome.accepted) {
      EXPECT_EQ(*tr.outcome.output, tr.path.at(0));
    }
  }
}

TEST(FillSampler, RejectsBadInputs) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = fixtures::toy_monotone_rule();
  const auto other = independent_transitions_rule(fixtures::sticky_kernel());
  EXPECT_THROW(FillSampler(k, fixtures::uniform3(), other, full(other)), Error);
  const FillSampler sampler(k, fixtures::uniform3(), rule, full(rule));
  RngStream rng(1);
  EXPECT_THROW(sampler.run(2, 7, rng), Error);
}

TEST(FillSampler, ZeroMassSeed) {
  // State 2 is transient.
  const Kernel k = fixtures::kernel({{"1/2", "1/2", "0"}, {"1/2", "1/2", "0"}, {"1", "0", "0"}});
  const auto rule = independent_transitions_rule(k);
  const Dist pi({r("1/2"), r("1/2"), r("0")});
  const FillSampler sampler(k, pi, rule, full(rule));
  RngStream rng(1);
  try {
    sampler.run(2, 2, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroMassSeed);
  }
}

TEST(FillSampler, AcceptanceRateMatchesOracle) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = fixtures::toy_monotone_rule();
  const FillSampler sampler(k, fixtures::uniform3(), rule, full(rule));
  RngStream rng(11);
  int accepted = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) accepted += sampler.run(2, 0, rng).accepted;
  EXPECT_NEAR(accepted / double(n), 0.75, 0.015);
  for (int i = 0; i < 200; ++i) EXPECT_FALSE(sampler.run(2, 1, rng).accepted);
}

TEST(FillSample, ExhaustsAttempts) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = fixtures::toy_monotone_rule();
  const FillSampler sampler(k, fixtures::uniform3(), rule, full(rule));
  RngStream rng(2);
  try {
    fill_sample(sampler, 1, 1, 5, rng, WindowSchedule::Fixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxAttemptsExceeded);
  }
  const auto o = fill_sample(sampler, 1, 1, 20, rng, WindowSchedule::Doubling);
  EXPECT_TRUE(o.accepted);
  EXPECT_GE(o.attempts, 2u);
}

TEST(FillSample, OutputLawMatchesOracle) {
  const Kernel k = fixtures::toy_kernel();
  const Dist pi = fixtures::uniform3();
  const auto rule = fixtures::toy_monotone_rule();
  const FillSampler sampler(k, pi, rule, full(rule));
  const FullTrackingDetector det(rule);
  const auto exact = enumerate_fill_sample(k, pi, rule, det, 1, 1, 4, WindowSchedule::Doubling);
  ASSERT_GT(exact.p_success, 0);
  std::vector<Rational> law(3, Rational(0));
  for (const auto& [a, row] : exact.joint)
    for (State y = 0; y < 3; ++y) law[y] += row[y] / exact.p_success;
  RngStream rng(17);
  EmpiricalLaw e(3);
  for (int i = 0; i < 20000; ++i) {
    try {
      e.add(*fill_sample(sampler, 1, 1, 4, rng).output);
    } catch (const Error& err) {
      ASSERT_EQ(err.kind(), ErrorKind::MaxAttemptsExceeded);
    }
  }
  EXPECT_GT(chi_square_gof(e, to_double(law)).p_value, 1e-6);
}

TEST(SingleState, AllSamplersReturnIt) {
  const Kernel k = Kernel::from_rows({{Rational(1)}});
  const TransitionRule rule(1, {"a"}, {Rational(1)}, {{0}});
  const Dist pi = Dist::point_mass(1, 0);
  RngStream rng(1);
  EXPECT_EQ(*fill_run(k, pi, rule, full(rule), 0, 0, rng).output, 0u);
  const auto a = altalg_run(k, pi, rule, pi, 10, SearchSchedule::every_t(), rng);
  EXPECT_EQ(*a.output, 0u);
  EXPECT_EQ(*a.coalescence_time, 0u);
  EXPECT_EQ(cftp_run(rule, 1, 4, rng).output, 0u);
  EXPECT_EQ(read_once_cftp_run(rule, 1, rng).output, 0u);
  const Poset p = Poset::chain(1);
  EXPECT_TRUE(sm_fill_run(k, pi, p, upward_family_from_rule(rule, p), 0, rng).accepted);
}

TEST(AltAlg, ConservativeTimes) {
  EXPECT_EQ(SearchSchedule::every_t().conservative(5), 5u);
  EXPECT_EQ(SearchSchedule::powers_of_2().conservative(0), 1u);
  EXPECT_EQ(SearchSchedule::powers_of_2().conservative(5), 8u);
  EXPECT_EQ(SearchSchedule::powers_of_2().conservative(8), 8u);
  EXPECT_EQ(SearchSchedule::guarantee(4).conservative(1), 3u);
  EXPECT_EQ(SearchSchedule::guarantee(4).conservative(6), 6u);
}

TEST(AltAlg, TraceShape) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = fixtures::toy_monotone_rule();
  const AltAlgSampler sampler(k, fixtures::uniform3(), rule, fixtures::uniform3());
  RngStream rng(8);
  for (const auto search : {SearchSchedule::every_t(), SearchSchedule::powers_of_2(), SearchSchedule::guarantee(5)}) {
    for (int i = 0; i < 200; ++i) {
      const auto tr = sampler.trace(1000, search, rng);
      const std::size_t tp = tr.outcome.horizon;
      EXPECT_GE(tp, tr.coalescence_time);
      EXPECT_EQ(tp, search.conservative(tr.coalescence_time));
      EXPECT_EQ(tr.backward.size(), tp + 1);
      EXPECT_EQ(*tr.outcome.output, tr.backward[tp]);
      EXPECT_EQ(tr.outcome.t_used, 2 * tp);
      for (std::size_t j = 1; j <= tp; ++j) EXPECT_GT(k(tr.backward[j], tr.backward[j - 1]), 0);
    }
  }
}

TEST(AltAlg, HorizonExceeded) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = independent_transitions_rule(k);
  const AltAlgSampler sampler(k, fixtures::uniform3(), rule, fixtures::uniform3());
  RngStream rng(3);
  try {
    sampler.run(0, SearchSchedule::every_t(), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HorizonExceeded);
  }
  // T is at least 1 here, so the guarantee time is what overflows.
  EXPECT_THROW(sampler.run(10, SearchSchedule::guarantee(20), rng), Error);
}

TEST(AltAlg, OutputIsStationary) {
  const Kernel k = fixtures::sticky_kernel();
  const Dist pi = fixtures::sticky_pi();
  const auto rule = independent_transitions_rule(k);
  RngStream rng(12);
  const AltAlgSampler sampler(k, pi, rule, Dist::point_mass(3, 1));
  EmpiricalLaw e(3);
  for (int i = 0; i < 20000; ++i) e.add(*sampler.run(10000, SearchSchedule::every_t(), rng).output);
  EXPECT_GT(chi_square_gof(e, pi).p_value, 1e-6);
}

TEST(SmSampler, AcceptanceAndOutput) {
  const Kernel k = fixtures::toy_kernel();
  const Poset p = Poset::chain(3);
  const auto m = upward_family_from_rule(fixtures::toy_monotone_rule(), p);
  const SmSampler sampler(k, fixtures::uniform3(), p, m);
  RngStream rng(4);
  int accepted = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto tr = sampler.trace(2, rng);
    for (std::size_t s = 0; s <= 2; ++s) EXPECT_TRUE(p.leq(tr.lower.at(s), tr.upper.at(s)));
    accepted += tr.outcome.accepted;
  }
  EXPECT_NEAR(accepted / double(n), 0.75, 0.015);
}

TEST(SmSampler, ZeroBottomMass) {
  const Kernel k = fixtures::kernel({{"0", "1"}, {"0", "1"}});
  const Poset p = Poset::chain(2);
  try {
    SmSampler(k, Dist::point_mass(2, 1), p, UpwardKernelFamily(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroBottomMass);
  }
}

TEST(Cftp, WindowsDoubleAndOutputIsStationary) {
  const auto rule = independent_transitions_rule(fixtures::sticky_kernel());
  RngStream rng(6);
  EmpiricalLaw e(3);
  for (int i = 0; i < 20000; ++i) {
    const auto res = cftp_run(rule, 1, 1 << 20, rng);
    EXPECT_EQ(res.backward_time & (res.backward_time - 1), 0u);
    e.add(res.output);
  }
  EXPECT_GT(chi_square_gof(e, fixtures::sticky_pi()).p_value, 1e-6);
  const TransitionRule still(2, {"a"}, {Rational(1)}, {{0, 1}});
  EXPECT_THROW(cftp_run(still, 1, 64, rng), Error);
}

TEST(ReadOnce, OutputIsStationary) {
  const auto rule = independent_transitions_rule(fixtures::sticky_kernel());
  RngStream rng(7);
  EmpiricalLaw e(3);
  for (int i = 0; i < 20000; ++i) {
    const auto res = read_once_cftp_run(rule, 2, rng);
    EXPECT_GE(res.blocks_used, 2u);
    e.add(res.output);
  }
  EXPECT_GT(chi_square_gof(e, fixtures::sticky_pi()).p_value, 1e-6);
}

TEST(Tours, ShapeAndChaining) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = fixtures::toy_monotone_rule();
  RngStream rng(10);
  const auto batch = tours_generate(k, fixtures::uniform3(), rule, 3, 50, std::nullopt, 10000, rng);
  EXPECT_FALSE(batch.approximate);
  EXPECT_EQ(batch.tours.size(), 50u);
  for (const auto& tour : batch.tours) {
    ASSERT_EQ(tour.states.size(), 3u);
    for (std::size_t s = 1; s < 3; ++s) EXPECT_GT(k(tour.at(s - 1), tour.at(s)), 0);
  }
  const auto seeded = tours_generate(k, fixtures::uniform3(), rule, 2, 5, State{1}, 10000, rng);
  EXPECT_TRUE(seeded.approximate);
  EXPECT_EQ(seeded.first_seed, 1u);
  EXPECT_EQ(seeded.tours.front().back(), 1u);
}

TEST(Replay, SameSeedSameOutputs) {
  const Kernel k = fixtures::toy_kernel();
  const auto rule = independent_transitions_rule(k);
  const FillSampler sampler(k, fixtures::uniform3(), rule, full(rule));
  RngStream a(99), b(99);
  for (int i = 0; i < 50; ++i) {
    const auto x = fill_sample(sampler, 2, 0, 64, a);
    const auto y = fill_sample(sampler, 2, 0, 64, b);
    EXPECT_EQ(x.output, y.output);
    EXPECT_EQ(x.attempts, y.attempts);
  }
}
