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

#include <future>
#include <thread>

#include "test_util.hpp"
#include "vnn/tcp.hpp"

namespace vnn::tcp {
namespace {

struct Outcome {
  VerifyResult prover_view;
  VerifyResult verifier_view;
  std::size_t bytes = 0;
};

// Runs a verifier on a loopback listener and a prover that connects to it.
template <PrimeField F>
Outcome run_pair(const FieldModel<F>& verifier_model, const FieldModel<F>& prover_model, const Matrix<F>& x,
                 const LayerTrace<F>& trace) {
  Listener listener("127.0.0.1:0");
  const int port = listener.port();
  auto verifier = std::async(std::launch::async, [&] {
    FramedStream s(listener.accept());
    auto v = verify_remote<F>(s, verifier_model, x, ChallengeSource::interactive(31));
    return std::make_pair(v.result, s.bytes_sent() + s.bytes_received());
  });
  FramedStream ps(connect("127.0.0.1:" + std::to_string(port)));
  Outcome o;
  o.prover_view = prove_remote<F>(ps, prover_model, trace);
  ps = FramedStream(Socket());  // hang up so the verifier finishes draining
  auto [res, bytes] = verifier.get();
  o.verifier_view = res;
  o.bytes = bytes;
  return o;
}

template <class F>
class TcpTyped : public ::testing::Test {};
using Fields = ::testing::Types<Fp61, Fp127>;
TYPED_TEST_SUITE(TcpTyped, Fields);

TYPED_TEST(TcpTyped, HonestProverAccepted) {
  using F = TypeParam;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = testing::random_model<F>(rng, testing::random_dims(rng));
    const auto x = testing::random_matrix<F>(rng, model.input_dim(), 4);
    const auto o = run_pair<F>(model, model, x, forward_infer(model, x));
    EXPECT_TRUE(o.verifier_view.accepted) << o.verifier_view.reason;
    EXPECT_TRUE(o.prover_view.accepted);
    EXPECT_GT(o.bytes, 0u);
  }
}

TYPED_TEST(TcpTyped, CorruptedTraceRejectedOnBothSides) {
  using F = TypeParam;
  std::mt19937_64 rng(9);
  const auto model = testing::random_model<F>(rng, {4, 4, 2});
  const auto x = testing::random_matrix<F>(rng, 4, 2);
  auto trace = forward_infer(model, x);
  trace.y[1](2, 1) += F::one();
  const auto o = run_pair<F>(model, model, x, trace);
  EXPECT_FALSE(o.verifier_view.accepted);
  EXPECT_EQ(o.verifier_view.phase, RejectPhase::kRoundCheck);
  EXPECT_FALSE(o.prover_view.accepted);
  EXPECT_EQ(o.prover_view.reason, o.verifier_view.reason);
}

TEST(Tcp, LazyModelCaughtByWeightCheck) {
  std::mt19937_64 rng(10);
  const auto model = testing::random_model<Fp61>(rng, {8, 4, 4});
  auto lazy = model;
  lazy.layers[1].weights(0, 0) = Fp61::zero();
  const auto x = testing::random_matrix<Fp61>(rng, 8, 4);
  const auto o = run_pair<Fp61>(model, lazy, x, forward_infer(lazy, x));
  EXPECT_FALSE(o.verifier_view.accepted);
  EXPECT_EQ(o.verifier_view.phase, RejectPhase::kWeightCheck);
}

TEST(Tcp, ForeignShapeDigestRejected) {
  std::mt19937_64 rng(11);
  const auto model = testing::random_model<Fp61>(rng, {4, 4, 2});
  const auto x = testing::random_matrix<Fp61>(rng, 4, 2);
  Listener listener("127.0.0.1:0");
  auto verifier = std::async(std::launch::async, [&] {
    FramedStream s(listener.accept());
    return verify_remote<Fp61>(s, model, x).result;
  });
  VerifyResult seen;
  {
    FramedStream ps(connect("127.0.0.1:" + std::to_string(listener.port())));
    std::vector<std::uint8_t> hello(1 + 32 + 2 * 2 * 8);
    hello[0] = static_cast<std::uint8_t>(ModulusId::kM61);
    ps.send(Tag::kHello, hello);
    seen = detail::decode_verdict(ps.receive(Tag::kVerdict));
  }
  const auto res = verifier.get();
  EXPECT_FALSE(res.accepted);
  EXPECT_EQ(res.phase, RejectPhase::kMalformed);
  EXPECT_EQ(seen.reason, res.reason);
}

TEST(Tcp, AddressParsing) {
  EXPECT_EQ(split_address("localhost:9000"), std::make_pair(std::string("localhost"), std::string("9000")));
  EXPECT_EQ(split_address("::1:80").first, "::1");
  EXPECT_THROW(split_address("nohost"), FormatError);
  EXPECT_THROW(split_address("host:"), FormatError);
}

TEST(Tcp, ClosedPeerReported) {
  Listener listener("127.0.0.1:0");
  std::thread t([&] { listener.accept(); });
  FramedStream s(connect("127.0.0.1:" + std::to_string(listener.port())));
  t.join();
  EXPECT_THROW(s.receive(Tag::kChallenge), ChannelClosed);
}

}  // namespace
}  // namespace vnn::tcp
