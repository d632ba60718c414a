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


// Randomized models and corruptions used by `vnn selftest`, the test suite and the
// acceptance run.

#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "vnn/session.hpp"

namespace vnn::selftest {

template <PrimeField F>
F random_element(std::mt19937_64& rng) {
  using Word = typename F::Word;
  for (;;) {
    Word v = static_cast<Word>(rng());
    if constexpr (F::kBytes == 16) v = (v << 64) | static_cast<Word>(rng());
    v &= F::kModulus;
    if (v < F::kModulus) return F::from_word(v);
  }
}

template <PrimeField F>
std::vector<F> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::vector<F> v(n);
  for (auto& e : v) e = random_element<F>(rng);
  return v;
}

template <PrimeField F>
Matrix<F> random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  return Matrix<F>(rows, cols, random_vector<F>(rng, rows * cols));
}

template <PrimeField F>
Matrix<F> small_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int bound) {
  std::uniform_int_distribution<int> d(-bound, bound);
  Matrix<F> m(rows, cols);
  for (auto& e : m.storage()) e = encode_signed<F>(d(rng));
  return m;
}

/// Returns a copy of the transcript with one element replaced by value+delta.
inline ProofTranscript tamper_element(const ProofTranscript& t, std::size_t flat_index, std::uint64_t delta) {
  ProofTranscript out = t;
  const std::size_t eb = element_bytes(t.header().modulus);
  for (auto& phase : out.phases()) {
    const std::size_t n = phase.payload.size() / eb;
    if (flat_index < n) {
      auto* p = phase.payload.data() + flat_index * eb;
      if (eb == 8) {
        Fp61 v = Fp61::from_bytes(std::span<const std::uint8_t, 8>(p, 8)) + Fp61::from_u64(delta);
        v.write_bytes(std::span<std::uint8_t, 8>(p, 8));
      } else {
        Fp127 v = Fp127::from_bytes(std::span<const std::uint8_t, 16>(p, 16)) + Fp127::from_u64(delta);
        v.write_bytes(std::span<std::uint8_t, 16>(p, 16));
      }
      return out;
    }
    flat_index -= n;
  }
  throw std::out_of_range("tamper index beyond transcript");
}

/// Random padded model with uniformly random field parameters. Roughly half the layers
/// carry a bias.
template <PrimeField F>
FieldModel<F> random_model(std::mt19937_64& rng, const std::vector<std::size_t>& dims) {
  FieldModel<F> m;
  m.original_dims = dims;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    typename FieldModel<F>::Layer l{random_matrix<F>(rng, dims[k + 1], dims[k]), std::vector<F>(dims[k + 1])};
    if (rng() & 1) l.bias = random_vector<F>(rng, dims[k + 1]);
    m.layers.push_back(std::move(l));
  }
  return m;
}

/// Depth 2..4, widths drawn from {1, 2, 4, 8, 16}.
inline std::vector<std::size_t> random_dims(std::mt19937_64& rng) {
  const std::size_t depth = 2 + rng() % 3;
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i <= depth; ++i) dims.push_back(std::size_t{1} << (rng() % 5));
  return dims;
}

enum class Tamper { kOutput, kIntermediate, kTranscript, kLazyModel };

inline std::string_view to_string(Tamper t) {
  switch (t) {
    case Tamper::kOutput: return "z_last";
    case Tamper::kIntermediate: return "intermediate";
    case Tamper::kTranscript: return "transcript element";
    case Tamper::kLazyModel: return "lazy model";
  }
  return "?";
}

template <PrimeField F>
F nonzero(std::mt19937_64& rng) {
  for (;;)
    if (F v = random_element<F>(rng); !v.is_zero()) return v;
}

/// One randomized corruption. Returns the verifier's verdict, which should be a reject.
template <PrimeField F>
VerifyResult tamper_trial(std::mt19937_64& rng, Tamper kind, ChallengeMode mode, std::size_t batch) {
  const auto model = random_model<F>(rng, random_dims(rng));
  const auto x = random_matrix<F>(rng, model.input_dim(), batch);
  const std::uint64_t seed = rng();
  auto trace = forward_infer(model, x);
  const Matrix<F> z_last = trace.output();

  auto pick = [&](Matrix<F>& m) { m.storage()[rng() % m.size()] += nonzero<F>(rng); };

  switch (kind) {
    case Tamper::kOutput: {
      const auto t = prove_trace(model, trace, mode, seed);
      Matrix<F> claimed = z_last;
      pick(claimed);
      return verify(model, x, claimed, t, seed);
    }
    case Tamper::kIntermediate: {
      // any z_i below the output or any y_i above the input
      const std::size_t L = model.num_layers();
      const std::size_t slot = rng() % (2 * (L - 1));
      pick(slot < L - 1 ? trace.z[slot] : trace.y[slot - (L - 1) + 1]);
      return verify(model, x, z_last, prove_trace(model, trace, mode, seed), seed);
    }
    case Tamper::kTranscript: {
      const auto t = prove_trace(model, trace, mode, seed);
      const auto idx = rng() % t.element_count();
      const auto bad = tamper_element(t, idx, 1 + rng() % (F::kModulus - 1));
      return verify(model, x, z_last, bad, seed);
    }
    case Tamper::kLazyModel: {
      // prover evaluates and proves a cheaper model that differs in one weight
      FieldModel<F> lazy = model;
      auto& w = lazy.layers[rng() % lazy.num_layers()].weights;
      w.storage()[rng() % w.size()] += nonzero<F>(rng);
      const auto lt = forward_infer(lazy, x);
      return verify(model, x, lt.output(), prove_trace(lazy, lt, mode, seed), seed);
    }
  }
  return VerifyResult::accept();
}

/// Number of honest proofs out of `trials` that verify, alternating challenge modes.
template <PrimeField F>
int completeness_count(std::mt19937_64& rng, int trials, std::span<const std::size_t> batches) {
  int accepted = 0;
  for (int t = 0; t < trials; ++t) {
    const auto model = random_model<F>(rng, random_dims(rng));
    const auto x = random_matrix<F>(rng, model.input_dim(), batches[rng() % batches.size()]);
    const auto mode = (t & 1) ? ChallengeMode::kInteractive : ChallengeMode::kFiatShamir;
    const std::uint64_t seed = rng();
    const auto proof = prove(model, x, mode, seed, false);
    accepted += verify(model, x, proof.z_last, proof.transcript, seed).accepted ? 1 : 0;
  }
  return accepted;
}

/// Runs the protocol checks on built-in toy shapes and prints one line per check.
inline bool run(std::ostream& out, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  bool all = true;
  auto report = [&](bool ok, const std::string& what) {
    out << (ok ? "ok   " : "FAIL ") << what << "\n";
    all = all && ok;
  };
  const std::size_t batches[] = {1, 4, 64};

  const int c61 = completeness_count<Fp61>(rng, trials, batches);
  report(c61 == trials, "completeness M61: " + std::to_string(c61) + "/" + std::to_string(trials) + " accepted");
  const int c127 = completeness_count<Fp127>(rng, trials, batches);
  report(c127 == trials, "completeness M127: " + std::to_string(c127) + "/" + std::to_string(trials) + " accepted");

  for (Tamper kind : {Tamper::kOutput, Tamper::kIntermediate, Tamper::kTranscript, Tamper::kLazyModel}) {
    int rejected = 0;
    for (int t = 0; t < trials; ++t) {
      const auto mode = (t & 1) ? ChallengeMode::kInteractive : ChallengeMode::kFiatShamir;
      rejected += tamper_trial<Fp61>(rng, kind, mode, 4).accepted ? 0 : 1;
    }
    report(rejected == trials, "tampered " + std::string(to_string(kind)) + ": " + std::to_string(rejected) + "/" +
                                   std::to_string(trials) + " rejected");
  }

  int exact = 0;
  for (int t = 0; t < trials; ++t) {
    const auto model = random_model<Fp61>(rng, random_dims(rng));
    const std::size_t b = batches[rng() % 3];
    const auto proof = prove(model, random_matrix<Fp61>(rng, model.input_dim(), b), ChallengeMode::kFiatShamir, 0, false);
    exact += proof.transcript.serialize().size() == expected_transcript_bytes(proof_shape(model, b)) ? 1 : 0;
  }
  report(exact == trials, "transcript bytes match closed form: " + std::to_string(exact) + "/" + std::to_string(trials));

  const std::size_t wide[] = {1845, 2000, 2000, 2000, 183};
  report(below_pow2(soundness_bound(wide, 2048, ModulusId::kM61), 30), "soundness bound below 2^-30 for 1845/2000/2000/2000/183 at b=2048");
  return all;
}

}  // namespace vnn::selftest
