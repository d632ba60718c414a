// Copyright 2026 The vnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "vnn/mle.hpp"
#include "vnn/sumcheck.hpp"

namespace vnn {
namespace {

using F = Fp61;
using Oracle = ProductOracle<F>;

F f(std::int64_t v) { return from_int<F>(v); }

// g(x1, x2) = x1 * x2 as the product of two multilinear tables.
Oracle x1_times_x2() { return Oracle({{{f(0), f(0), f(1), f(1)}, 1}, {{f(0), f(1), f(0), f(1)}, 1}}); }

// g evaluated directly at a point from the original tables.
F evaluate_product(const std::vector<Oracle::Factor>& factors, const Point<F>& point) {
  F acc = F::one();
  for (const auto& fac : factors) {
    const F v = mle_evaluate_vector<F>(fac.table, point);
    for (unsigned p = 0; p < fac.power; ++p) acc *= v;
  }
  return acc;
}

struct Instance {
  std::vector<Oracle::Factor> factors;
  unsigned vars;
  unsigned degree;
};

Instance random_instance(std::mt19937_64& rng) {
  Instance in;
  in.vars = 1 + static_cast<unsigned>(rng() % 6);
  const std::size_t count = 1 + rng() % 3;
  in.degree = 0;
  for (std::size_t k = 0; k < count; ++k) {
    in.factors.push_back({testing::random_vector<F>(rng, std::size_t{1} << in.vars), 1});
    ++in.degree;
  }
  return in;
}

template <class Channels>
SumcheckVerdict<F> run(Oracle oracle, const std::vector<Oracle::Factor>& factors, F claim, Channels& ch) {
  const unsigned vars = oracle.num_vars(), degree = oracle.degree();
  auto w = ch.writer();
  w.begin_phase(PhaseKind::kSumcheck);
  sumcheck_prove<F>(oracle, vars, degree, w);
  w.end_phase();
  auto r = ch.reader();
  r.begin_phase(PhaseKind::kSumcheck);
  return sumcheck_verify<F>(claim, vars, degree, r,
                            [&](const Point<F>& p, F v) { return v == evaluate_product(factors, p); });
}

TEST(Sumcheck, ProductOfTwoVariables) {
  Oracle oracle = x1_times_x2();
  EXPECT_EQ(oracle.sum(), f(1));
  const auto h = oracle.round_polynomial();
  EXPECT_EQ(h.evals, (std::vector<F>{f(0), f(1), f(2)}));  // h1(x1) = x1
  testing::LoopbackChannels<F> ch;
  const auto factors = std::vector<Oracle::Factor>{{{f(0), f(0), f(1), f(1)}, 1}, {{f(0), f(1), f(0), f(1)}, 1}};
  const auto v = run(x1_times_x2(), factors, f(1), ch);
  EXPECT_TRUE(v.accepted);
  EXPECT_EQ(v.point.size(), 2u);
}

TEST(Sumcheck, WrongClaimRejectedInFirstRound) {
  testing::LoopbackChannels<F> ch;
  const auto factors = std::vector<Oracle::Factor>{{{f(0), f(0), f(1), f(1)}, 1}, {{f(0), f(1), f(0), f(1)}, 1}};
  const auto v = run(x1_times_x2(), factors, f(2), ch);
  EXPECT_FALSE(v.accepted);
  ASSERT_TRUE(v.failed_round.has_value());
  EXPECT_EQ(*v.failed_round, 0u);
}

TEST(Sumcheck, ZeroPolynomial) {
  testing::LoopbackChannels<F> ch;
  const std::vector<Oracle::Factor> factors{{std::vector<F>(16, F::zero()), 2}};
  const auto v = run(Oracle(factors), factors, F::zero(), ch);
  EXPECT_TRUE(v.accepted);
  for (const auto& phase : ch.transcript.phases())
    for (auto b : phase.payload) EXPECT_EQ(b, 0);
}

TEST(Sumcheck, SingleVariable) {
  const std::vector<Oracle::Factor> factors{{{f(0), f(1)}, 1}};
  Oracle oracle(factors);
  EXPECT_EQ(oracle.round_polynomial().evals, (std::vector<F>{f(0), f(1)}));
  testing::LoopbackChannels<F> ch;
  EXPECT_TRUE(run(Oracle(factors), factors, f(1), ch).accepted);
}

TEST(Sumcheck, TamperedFinalValueRejected) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng);
    testing::LoopbackChannels<F> ch;
    Oracle oracle(in.factors);
    const F claim = oracle.sum();
    auto w = ch.writer();
    w.begin_phase(PhaseKind::kSumcheck);
    const auto proof = sumcheck_prove<F>(oracle, in.vars, in.degree, w);
    w.end_phase();
    const F forged = proof.value + F::from_u64(1 + rng() % 1000);
    auto r = ch.reader();
    r.begin_phase(PhaseKind::kSumcheck);
    const auto v = sumcheck_verify<F>(claim, in.vars, in.degree, r, [&](const Point<F>&, F running) {
      return running == forged;  // prover's asserted final value
    });
    EXPECT_FALSE(v.accepted);
    EXPECT_FALSE(v.failed_round.has_value());
  }
}

TEST(Sumcheck, WrongEvaluationCountIsMalformed) {
  testing::LoopbackChannels<F> ch;
  auto w = ch.writer();
  w.begin_phase(PhaseKind::kSumcheck);
  const F two[2] = {f(0), f(1)};
  w.send(std::span<const F>(two));
  w.end_phase();
  auto r = ch.reader();
  r.begin_phase(PhaseKind::kSumcheck);
  EXPECT_THROW(sumcheck_verify<F>(f(1), 1, 2, r, nullptr), MalformedTranscript);
}

TEST(Sumcheck, CompletenessOnRandomInstances) {
  std::mt19937_64 rng(12);
  int accepted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    testing::LoopbackChannels<F> ch(ChallengeMode::kInteractive, rng());
    const F claim = Oracle(in.factors).sum();
    accepted += run(Oracle(in.factors), in.factors, claim, ch).accepted ? 1 : 0;
  }
  EXPECT_EQ(accepted, 1000);
}

// Shifts every evaluation of the first round polynomial so it sums to claim + delta,
// then behaves honestly.
class LyingOracle {
 public:
  LyingOracle(Oracle inner, F delta) : inner_(std::move(inner)), half_delta_(delta * F::from_u64(2).inverse()) {}
  RoundPolynomial<F> round_polynomial() {
    auto h = inner_.round_polynomial();
    if (first_)
      for (auto& e : h.evals) e += half_delta_;
    return h;
  }
  void bind(F c) {
    first_ = false;
    inner_.bind(c);
  }
  F value() const { return inner_.value(); }

 private:
  Oracle inner_;
  F half_delta_;
  bool first_ = true;
};

TEST(Sumcheck, LyingProverRejected) {
  std::mt19937_64 rng(13);
  int rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto in = random_instance(rng);
    if (in.vars < 2) in.vars = 2, in.factors = {{testing::random_vector<F>(rng, 4), 1}, {testing::random_vector<F>(rng, 4), 1}}, in.degree = 2;
    const F delta = F::from_u64(1 + rng() % 1000000);
    const F false_claim = Oracle(in.factors).sum() + delta;
    testing::LoopbackChannels<F> ch(ChallengeMode::kInteractive, rng());
    LyingOracle liar(Oracle(in.factors), delta);
    auto w = ch.writer();
    w.begin_phase(PhaseKind::kSumcheck);
    sumcheck_prove<F>(liar, in.vars, in.degree, w);
    auto r = ch.reader();
    r.begin_phase(PhaseKind::kSumcheck);
    const auto v = sumcheck_verify<F>(false_claim, in.vars, in.degree, r,
                                      [&](const Point<F>& p, F val) { return val == evaluate_product(in.factors, p); });
    rejected += v.accepted ? 0 : 1;
  }
  EXPECT_GE(rejected, 999);
}

TEST(Sumcheck, InterpolationMatchesDirectEvaluation) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng);
    const Oracle oracle(in.factors);
    const auto h = oracle.round_polynomial();
    const F x = testing::random_element<F>(rng);
    // h(x) = sum over the remaining cube of g(x, rest), computed from the original tables
    F direct = F::zero();
    for (std::size_t rest = 0; rest < (std::size_t{1} << (in.vars - 1)); ++rest) {
      Point<F> p{x};
      for (unsigned i = 1; i < in.vars; ++i) p.push_back(F::from_u64((rest >> (in.vars - 1 - i)) & 1));
      direct += evaluate_product(in.factors, p);
    }
    ASSERT_EQ(interpolate(h, x), direct);
  }
}

TEST(Lagrange, CubicThroughFourPoints) {
  // h(x) = x^3 - 2x + 5
  auto h = [](F x) { return x * x * x - f(2) * x + f(5); };
  RoundPolynomial<F> rp{{h(f(0)), h(f(1)), h(f(2)), h(f(3))}};
  std::mt19937_64 rng(15);
  for (int i = 0; i < 20; ++i) {
    const F x = testing::random_element<F>(rng);
    EXPECT_EQ(interpolate(rp, x), h(x));
  }
}

}  // namespace
}  // namespace vnn
