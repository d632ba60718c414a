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

#include "test_util.hpp"
#include "vnn/session.hpp"

namespace vnn {
namespace {

using F = Fp61;
F f(std::int64_t v) { return from_int<F>(v); }

// 2 -> 2 -> 2, b = 2
FieldModel<F> toy_model() {
  FieldModel<F> m;
  m.layers.push_back({Matrix<F>(2, 2, std::vector<F>{f(1), f(2), f(-1), f(3)}), {f(1), f(0)}});
  m.layers.push_back({Matrix<F>(2, 2, std::vector<F>{f(2), f(0), f(1), f(1)}), {f(0), f(0)}});
  m.original_dims = {2, 2, 2};
  return m;
}

Matrix<F> toy_input() { return Matrix<F>(2, 2, std::vector<F>{f(1), f(0), f(2), f(-1)}); }

TEST(Session, ToyNetworkAccepts) {
  const auto m = toy_model();
  const auto proof = prove(m, toy_input());
  // z0 = [[6, -1], [5, -3]], y1 = [[36, 1], [25, 9]], z1 = [[72, 2], [61, 10]]
  EXPECT_EQ(proof.z_last, Matrix<F>(2, 2, std::vector<F>{f(72), f(2), f(61), f(10)}));
  const auto res = verify(m, toy_input(), proof.z_last, proof.transcript);
  EXPECT_TRUE(res.accepted) << res.reason;
}

TEST(Session, ZeroModelAccepts) {
  FieldModel<F> m;
  m.layers.push_back({Matrix<F>(4, 4), std::vector<F>(4)});
  m.layers.push_back({Matrix<F>(2, 4), std::vector<F>(2)});
  const Matrix<F> x(4, 4, f(9));
  const auto proof = prove(m, x);
  EXPECT_EQ(proof.z_last, Matrix<F>(2, 4));
  EXPECT_TRUE(verify(m, x, proof.z_last, proof.transcript).accepted);
}

TEST(Session, FiatShamirIsByteDeterministic) {
  const auto a = prove(toy_model(), toy_input());
  const auto b = prove(toy_model(), toy_input());
  EXPECT_EQ(a.transcript.serialize(), b.transcript.serialize());
  const auto c = prove(toy_model(), toy_input(), ChallengeMode::kFiatShamir, 12345);
  EXPECT_EQ(a.transcript.serialize(), c.transcript.serialize());  // seed is ignored
}

TEST(Session, InteractiveModeNeedsMatchingRandomness) {
  const auto m = toy_model();
  const auto proof = prove(m, toy_input(), ChallengeMode::kInteractive, 77);
  EXPECT_EQ(proof.transcript.header().mode, ChallengeMode::kInteractive);
  EXPECT_TRUE(verify(m, toy_input(), proof.z_last, proof.transcript, 77).accepted);
  EXPECT_FALSE(verify(m, toy_input(), proof.z_last, proof.transcript, 78).accepted);
}

TEST(Session, RejectsWrongOutput) {
  const auto m = toy_model();
  const auto proof = prove(m, toy_input());
  auto wrong = proof.z_last;
  wrong(1, 1) += F::one();
  const auto res = verify(m, toy_input(), wrong, proof.transcript);
  EXPECT_FALSE(res.accepted);
  EXPECT_NE(res.phase, RejectPhase::kMalformed);
}

TEST(Session, RejectsOtherInput) {
  const auto m = toy_model();
  const auto proof = prove(m, toy_input());
  auto x = toy_input();
  x(0, 0) += F::one();
  EXPECT_FALSE(verify(m, x, proof.z_last, proof.transcript).accepted);
}

// Interactive challenges do not depend on the statement, so a proof for a lazy model
// reaches the weight comparison instead of failing on scrambled challenges.
TEST(Session, LazyWeightsCaughtByWeightCheck) {
  const auto m = toy_model();
  auto lazy = m;
  lazy.layers[0].weights(1, 1) = F::zero();
  const auto trace = forward_infer(lazy, toy_input());
  const auto t = prove_trace(lazy, trace, ChallengeMode::kInteractive, 5);
  const auto res = verify(m, toy_input(), trace.output(), t, 5);
  EXPECT_FALSE(res.accepted);
  EXPECT_EQ(res.phase, RejectPhase::kWeightCheck) << res.reason;
}

TEST(Session, LazyBiasCaughtByBiasCheck) {
  const auto m = toy_model();
  auto lazy = m;
  lazy.layers[0].bias[0] = f(5);
  const auto trace = forward_infer(lazy, toy_input());
  const auto res = verify(m, toy_input(), trace.output(), prove_trace(lazy, trace, ChallengeMode::kInteractive, 5), 5);
  EXPECT_FALSE(res.accepted);
  EXPECT_EQ(res.phase, RejectPhase::kBiasCheck) << res.reason;
}

TEST(Session, CorruptedIntermediateRejected) {
  const auto m = toy_model();
  auto trace = forward_infer(m, toy_input());
  const auto z_last = trace.output();
  trace.y[1](0, 1) += F::one();
  const auto res = verify(m, toy_input(), z_last, prove_trace(m, trace, ChallengeMode::kFiatShamir));
  EXPECT_FALSE(res.accepted);
  EXPECT_EQ(res.phase, RejectPhase::kRoundCheck) << res.reason;
}

TEST(Session, MalformedTranscripts) {
  const auto m = toy_model();
  const auto proof = prove(m, toy_input());
  auto dropped = proof.transcript;
  dropped.phases().pop_back();
  auto res = verify(m, toy_input(), proof.z_last, dropped);
  EXPECT_EQ(res.phase, RejectPhase::kMalformed);

  auto extra = proof.transcript;
  extra.phases().push_back({PhaseKind::kMatmul, {}});
  EXPECT_EQ(verify(m, toy_input(), proof.z_last, extra).phase, RejectPhase::kMalformed);

  auto shorter = proof.transcript;
  shorter.phases().front().payload.resize(shorter.phases().front().payload.size() - 8);
  EXPECT_EQ(verify(m, toy_input(), proof.z_last, shorter).phase, RejectPhase::kMalformed);

  auto swapped = proof.transcript;
  swapped.phases().front().kind = PhaseKind::kActivation;
  EXPECT_EQ(verify(m, toy_input(), proof.z_last, swapped).phase, RejectPhase::kMalformed);
}

TEST(Session, ShapeDigestBindsModelAndBatch) {
  const auto m = toy_model();
  const auto proof = prove(m, toy_input());
  auto other = m;
  other.layers[1].bias = {F::zero(), F::one()};  // bias flags change the layout
  const auto res = verify(other, toy_input(), proof.z_last, proof.transcript);
  EXPECT_EQ(res.phase, RejectPhase::kMalformed);
  EXPECT_NE(res.reason.find("shape digest"), std::string::npos);

  auto signed_model = m.to_signed();
  signed_model.modulus = ModulusId::kM127;
  const auto m127 = FieldModel<Fp127>::from_signed(signed_model);
  const auto x127 = encode_matrix<Fp127>(decode_matrix<F>(toy_input()));
  EXPECT_EQ(verify(m127, x127, forward_infer(m127, x127).output(), proof.transcript).phase, RejectPhase::kMalformed);
}

TEST(Session, UnpaddedModelRefused) {
  FieldModel<F> m;
  m.layers.push_back({Matrix<F>(3, 2), std::vector<F>(3)});
  EXPECT_THROW(prove(m, Matrix<F>(2, 1)), ShapeMismatch);
}

TEST(Session, ProveFlagsRangeOverflow) {
  FieldModel<F> m;
  const F big = encode_signed<F>(signed_bound<F>() / 2 + 1);
  m.layers.push_back({Matrix<F>(1, 2, std::vector<F>{big, big}), {F::zero()}});
  EXPECT_THROW(prove(m, Matrix<F>(2, 1, F::one())), Overflow);
  EXPECT_NO_THROW(prove(m, Matrix<F>(2, 1, F::one()), ChallengeMode::kFiatShamir, 0, false));
}

template <PrimeField Fld>
void closed_form_matches(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = testing::random_model<Fld>(rng, testing::random_dims(rng));
    const std::size_t b = std::size_t{1} << (rng() % 5);
    const auto proof = prove(model, testing::random_matrix<Fld>(rng, model.input_dim(), b), ChallengeMode::kFiatShamir, 0, false);
    const auto shape = proof_shape(model, b);
    ASSERT_EQ(proof.transcript.serialize().size(), expected_transcript_bytes(shape));
    const auto layout = transcript_layout(shape);
    ASSERT_EQ(layout.size(), proof.transcript.phases().size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      EXPECT_EQ(layout[i].kind, proof.transcript.phases()[i].kind);
      EXPECT_EQ(layout[i].elements * Fld::kBytes, proof.transcript.phases()[i].payload.size());
    }
  }
}

TEST(Bandwidth, ClosedFormMatchesTranscriptM61) { closed_form_matches<Fp61>(10); }
TEST(Bandwidth, ClosedFormMatchesTranscriptM127) { closed_form_matches<Fp127>(11); }

TEST(Bandwidth, ElementCountsHandExample) {
  // 2 -> 2 -> 2 at b = 2 with a bias on layer 0 only: matmul(1) act(2) bias(1) matmul(1)
  const ProofShape shape{{2, 2, 2}, {true, false}, 2, ModulusId::kM61};
  const auto layout = transcript_layout(shape);
  ASSERT_EQ(layout.size(), 4u);
  EXPECT_EQ(layout[0].kind, PhaseKind::kMatmul);
  EXPECT_EQ(layout[0].elements, 5u);
  EXPECT_EQ(layout[1].kind, PhaseKind::kActivation);
  EXPECT_EQ(layout[1].elements, 9u);
  EXPECT_EQ(layout[2].kind, PhaseKind::kBias);
  EXPECT_EQ(layout[2].elements, 5u);
  EXPECT_EQ(expected_transcript_bytes(shape), 44u + 4 * 5 + 24 * 8);
}

TEST(Bandwidth, WideNetworkUnderEightKilobytes) {
  const ProofShape shape{{2048, 2048, 2048, 2048, 256}, {true, true, true, true}, 2048, ModulusId::kM61};
  EXPECT_LT(expected_transcript_bytes(shape), 8192u);
}

TEST(Soundness, BoundExamples) {
  const std::size_t wide[] = {1845, 2000, 2000, 2000, 183};
  const auto eps = soundness_bound(wide, 2048, ModulusId::kM61);
  EXPECT_EQ(eps, Rational(3 * 2048 * 8028, modulus_value(ModulusId::kM61)));
  EXPECT_NEAR(eps.convert_to<double>(), 2.14e-11, 0.01e-11);
  EXPECT_TRUE(below_pow2(eps, 30));
  EXPECT_FALSE(below_pow2(eps, 40));

  const std::size_t one[] = {1};
  EXPECT_EQ(soundness_bound(one, 1, ModulusId::kM61), Rational(3, modulus_value(ModulusId::kM61)));
  EXPECT_EQ(soundness_bound(wide, 4096, ModulusId::kM127), 2 * soundness_bound(wide, 2048, ModulusId::kM127));
}

template <PrimeField Fld>
void random_networks_accept(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 25; ++trial) {
    const auto model = testing::random_model<Fld>(rng, testing::random_dims(rng));
    const std::size_t b = std::vector<std::size_t>{1, 4, 64}[rng() % 3];
    const auto x = testing::random_matrix<Fld>(rng, model.input_dim(), b);
    const auto mode = (rng() & 1) ? ChallengeMode::kFiatShamir : ChallengeMode::kInteractive;
    const auto proof = prove(model, x, mode, trial, false);
    const auto res = verify(model, x, proof.z_last, proof.transcript, trial);
    ASSERT_TRUE(res.accepted) << res.reason;
  }
}

TEST(Completeness, RandomNetworksM61) { random_networks_accept<Fp61>(20); }
TEST(Completeness, RandomNetworksM127) { random_networks_accept<Fp127>(21); }

class TamperTest : public ::testing::TestWithParam<testing::Tamper> {};

TEST_P(TamperTest, EveryTrialRejected) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()) + 100);
  for (int trial = 0; trial < 40; ++trial) {
    const auto mode = (trial & 1) ? ChallengeMode::kFiatShamir : ChallengeMode::kInteractive;
    const auto res = (trial % 4 < 2) ? testing::tamper_trial<Fp61>(rng, GetParam(), mode, 4)
                                     : testing::tamper_trial<Fp127>(rng, GetParam(), mode, 4);
    EXPECT_FALSE(res.accepted) << "trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, TamperTest,
                         ::testing::Values(testing::Tamper::kOutput, testing::Tamper::kIntermediate,
                                           testing::Tamper::kTranscript, testing::Tamper::kLazyModel),
                         [](const auto& info) {
                           std::string s(testing::to_string(info.param));
                           std::erase(s, ' ');
                           std::erase(s, '_');
                           return s;
                         });

}  // namespace
}  // namespace vnn
