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


#pragma once

// End-to-end proving and verification of a batch of inferences.
//
// The prover returns z_{L-1} together with a transcript. The verifier evaluates the
// MLE of the received z_{L-1} at a random point and walks the layers from the output
// back to the input:
//
//   Z~_k(q, r)  --bias-->  Z'~_k(j*, r)          (only when b_k is nonzero)
//               --matmul-> W~_k(q, s), Y~_k(s, r)
//   Y~_k(s, r)  --activation-> Z~_{k-1}(j*, k*)  (k > 0)
//   Y~_0(s, r)  is checked against the input x directly.
//
// Weight and bias claims are checked by evaluating the MLE of the public parameters.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/layer_protocols.hpp"
#include "vnn/matrix.hpp"
#include "vnn/mle.hpp"
#include "vnn/network.hpp"
#include "vnn/sha256.hpp"
#include "vnn/sumcheck.hpp"
#include "vnn/transcript.hpp"

namespace vnn {

using Rational = boost::multiprecision::cpp_rational;

/// Public shape of a proof: padded dims n_0..n_L, which layers carry a bias, batch size.
struct ProofShape {
  std::vector<std::size_t> dims;
  std::vector<bool> has_bias;
  std::size_t batch = 1;
  ModulusId modulus = ModulusId::kM61;

  std::size_t num_layers() const { return has_bias.size(); }

  void validate() const {
    if (dims.size() < 2 || has_bias.size() + 1 != dims.size()) throw ShapeMismatch("proof shape needs n_0..n_L");
    for (std::size_t n : dims) log2_exact(n);
    log2_exact(batch);
  }

  Digest digest() const {
    Sha256 h;
    h.update("vnn/shape/v1").update_u8(static_cast<std::uint8_t>(modulus)).update_u64(batch).update_u64(dims.size());
    for (std::size_t n : dims) h.update_u64(n);
    for (bool b : has_bias) h.update_u8(b ? 1 : 0);
    return h.finish();
  }
};

template <PrimeField F>
ProofShape proof_shape(const FieldModel<F>& model, std::size_t batch) {
  ProofShape s{model.dims(), {}, batch, F::kId};
  for (const auto& l : model.layers) s.has_bias.push_back(l.has_bias());
  s.validate();
  return s;
}

struct PhaseSpec {
  PhaseKind kind;
  std::size_t elements;
};

/// Phases of a transcript, in protocol order.
inline std::vector<PhaseSpec> transcript_layout(const ProofShape& shape) {
  shape.validate();
  const unsigned log_b = log2_exact(shape.batch);
  std::vector<PhaseSpec> out;
  for (std::size_t k = shape.num_layers(); k-- > 0;) {
    const unsigned log_in = log2_exact(shape.dims[k]);
    if (shape.has_bias[k]) out.push_back({PhaseKind::kBias, bias_phase_elements(log2_exact(shape.dims[k + 1]))});
    out.push_back({PhaseKind::kMatmul, matmul_phase_elements(log_in)});
    if (k > 0) out.push_back({PhaseKind::kActivation, activation_phase_elements(log_in + log_b)});
  }
  return out;
}

/// Exact transcript length from the shape alone.
inline std::size_t expected_transcript_bytes(const ProofShape& shape) {
  std::vector<std::size_t> counts;
  for (const auto& p : transcript_layout(shape)) counts.push_back(p.elements);
  return transcript_byte_size(counts, shape.modulus);
}

/// 3 b (n_0 + ... + n_L) / p, exactly.
inline Rational soundness_bound(std::span<const std::size_t> dims, std::size_t batch, ModulusId modulus) {
  BigInt total = 0;
  for (std::size_t n : dims) total += n;
  return Rational(3 * BigInt(batch) * total, modulus_value(modulus));
}

/// eps < 2^-bits
inline bool below_pow2(const Rational& eps, unsigned bits) { return eps < Rational(BigInt(1), BigInt(1) << bits); }

namespace detail {

template <PrimeField F>
void hash_elements(Sha256& h, std::span<const F> elems) {
  constexpr std::size_t kChunk = 4096;
  std::vector<std::uint8_t> buf;
  buf.reserve(kChunk * F::kBytes);
  for (std::size_t i = 0; i < elems.size(); i += kChunk) {
    buf.clear();
    append_elements<F>(buf, elems.subspan(i, std::min(kChunk, elems.size() - i)));
    h.update(buf);
  }
}

}  // namespace detail

/// Binds the statement (parameters, input, claimed output) into Fiat-Shamir challenges.
template <PrimeField F>
Digest statement_digest(const FieldModel<F>& model, const Matrix<F>& x, const Matrix<F>& z_last) {
  Sha256 h;
  h.update("vnn/statement/v1");
  for (const auto& l : model.layers) {
    detail::hash_elements<F>(h, l.weights.values());
    detail::hash_elements<F>(h, std::span<const F>(l.bias));
  }
  h.update_u64(x.rows()).update_u64(x.cols());
  detail::hash_elements<F>(h, x.values());
  h.update_u64(z_last.rows()).update_u64(z_last.cols());
  detail::hash_elements<F>(h, z_last.values());
  return h.finish();
}

template <PrimeField F, class Channel>
Point<F> draw_point(Channel& channel, unsigned n) {
  Point<F> p;
  p.reserve(n);
  for (unsigned i = 0; i < n; ++i) p.push_back(channel.challenge());
  return p;
}

/// Prover half over any channel, given an explicit trace. The trace is taken at face
/// value so tests can feed corrupted intermediates.
template <PrimeField F, ProverChannel<F> Channel>
void prove_layers(const FieldModel<F>& model, const LayerTrace<F>& trace, Channel& channel) {
  const std::size_t L = model.num_layers();
  const Matrix<F>& z_last = trace.output();
  Point<F> q = draw_point<F>(channel, log2_exact(z_last.rows()));
  Point<F> r = draw_point<F>(channel, log2_exact(z_last.cols()));
  for (std::size_t k = L; k-- > 0;) {
    const auto& layer = model.layers[k];
    if (layer.has_bias()) {
      Matrix<F> z_prime = trace.z[k];
      for (std::size_t i = 0; i < z_prime.rows(); ++i)
        for (F& v : z_prime.row(i)) v -= layer.bias[i];
      q = bias_prove<F>(z_prime, layer.bias, q, r, channel).row_point;
    }
    const auto mm = matmul_prove<F>(layer.weights, trace.y[k], q, r, channel);
    if (k > 0) {
      auto act = activation_prove<F>(trace.z[k - 1], mm.s, r, channel);
      q = std::move(act.row_point);
      r = std::move(act.batch_point);
    }
  }
}

template <PrimeField F>
struct Proof {
  Matrix<F> z_last;
  ProofTranscript transcript;
};

template <PrimeField F>
TranscriptHeader make_header(const FieldModel<F>& model, std::size_t batch, ChallengeMode mode) {
  TranscriptHeader h;
  h.modulus = F::kId;
  h.mode = mode;
  h.shape_digest = proof_shape(model, batch).digest();
  return h;
}

/// Proves an already computed trace into a fresh transcript.
template <PrimeField F>
ProofTranscript prove_trace(const FieldModel<F>& model, const LayerTrace<F>& trace, ChallengeMode mode,
                            std::uint64_t seed = 0) {
  ProofTranscript transcript(make_header(model, trace.input().cols(), mode));
  ChallengeSource source = ChallengeSource::for_header(transcript.header(), seed);
  source.absorb_digest("statement", statement_digest(model, trace.input(), trace.output()));
  TranscriptWriter<F> writer(transcript, source);
  prove_layers<F>(model, trace, writer);
  return transcript;
}

/// Runs inference on a padded model and batch and proves it. In interactive mode the
/// verifier must be given the same seed.
template <PrimeField F>
Proof<F> prove(const FieldModel<F>& model, const Matrix<F>& x, ChallengeMode mode = ChallengeMode::kFiatShamir,
               std::uint64_t seed = 0, bool check_range = true) {
  if (!model.is_padded()) throw ShapeMismatch("prove needs a power-of-two padded model");
  const auto trace = forward_infer(model, x);
  if (check_range) audit_trace_range(model, trace);
  return {trace.output(), prove_trace(model, trace, mode, seed)};
}

enum class RejectPhase { kNone, kMalformed, kRoundCheck, kWeightCheck, kBiasCheck, kInputCheck };

inline std::string_view to_string(RejectPhase p) {
  switch (p) {
    case RejectPhase::kNone: return "none";
    case RejectPhase::kMalformed: return "malformed transcript";
    case RejectPhase::kRoundCheck: return "round check";
    case RejectPhase::kWeightCheck: return "weight check";
    case RejectPhase::kBiasCheck: return "bias check";
    case RejectPhase::kInputCheck: return "input check";
  }
  return "unknown";
}

struct VerifyResult {
  bool accepted = false;
  RejectPhase phase = RejectPhase::kNone;
  std::string reason;

  static VerifyResult accept() { return {true, RejectPhase::kNone, {}}; }
  static VerifyResult reject(RejectPhase phase, std::string reason) { return {false, phase, std::move(reason)}; }
};

/// Verifier half over any channel. Touches only the public parameters, the input and
/// z_last; never any intermediate activation.
template <PrimeField F, VerifierChannel<F> Channel>
VerifyResult verify_layers(const FieldModel<F>& model, const Matrix<F>& x, const Matrix<F>& z_last, Channel& channel) {
  const std::size_t L = model.num_layers();
  if (x.rows() != model.input_dim() || z_last.rows() != model.output_dim() || z_last.cols() != x.cols())
    throw ShapeMismatch("input or output dimensions do not match the model");
  const unsigned log_b = log2_exact(x.cols());
  try {
    Point<F> q = draw_point<F>(channel, log2_exact(z_last.rows()));
    Point<F> r = draw_point<F>(channel, log_b);
    F claim = mle_evaluate(z_last, q, r);
    for (std::size_t k = L; k-- > 0;) {
      const auto& layer = model.layers[k];
      const std::string tag = "layer " + std::to_string(k) + ": ";
      if (layer.has_bias()) {
        auto bv = bias_verify<F>(claim, q, channel);
        if (!bv.accepted) return VerifyResult::reject(RejectPhase::kRoundCheck, tag + bv.failure);
        if (bv.reduction.bias_value != mle_evaluate_vector<F>(layer.bias, bv.reduction.row_point))
          return VerifyResult::reject(RejectPhase::kBiasCheck, tag + "bias MLE mismatch");
        claim = bv.reduction.zprime_value;
        q = std::move(bv.reduction.row_point);
      }
      const auto shape = LayerShape::make(layer.weights.cols(), layer.weights.rows(), x.cols());
      auto mv = matmul_verify<F>(claim, shape, channel);
      if (!mv.accepted) return VerifyResult::reject(RejectPhase::kRoundCheck, tag + mv.failure);
      if (mv.reduction.w_value != mle_evaluate(layer.weights, q, mv.reduction.s))
        return VerifyResult::reject(RejectPhase::kWeightCheck, tag + "weight MLE mismatch");
      if (k > 0) {
        auto av = activation_verify<F>(mv.reduction.y_value, mv.reduction.s, r, channel);
        if (!av.accepted) return VerifyResult::reject(RejectPhase::kRoundCheck, tag + av.failure);
        claim = av.reduction.z_value;
        q = std::move(av.reduction.row_point);
        r = std::move(av.reduction.batch_point);
      } else if (mv.reduction.y_value != mle_evaluate(x, mv.reduction.s, r)) {
        return VerifyResult::reject(RejectPhase::kInputCheck, "input MLE mismatch");
      }
    }
  } catch (const MalformedTranscript& e) {
    return VerifyResult::reject(RejectPhase::kMalformed, e.what());
  } catch (const MalformedRound& e) {
    return VerifyResult::reject(RejectPhase::kMalformed, e.what());
  }
  return VerifyResult::accept();
}

/// Checks a transcript against a padded model, the padded input and the claimed output.
template <PrimeField F>
VerifyResult verify(const FieldModel<F>& model, const Matrix<F>& x, const Matrix<F>& z_last,
                    const ProofTranscript& transcript, std::uint64_t seed = 0) {
  if (!model.is_padded()) throw ShapeMismatch("verify needs a power-of-two padded model");
  const auto& h = transcript.header();
  if (h.modulus != F::kId) return VerifyResult::reject(RejectPhase::kMalformed, "transcript modulus differs from model");
  if (!is_pow2(x.cols())) throw ShapeMismatch("batch size must be a power of two");
  if (h.shape_digest != proof_shape(model, x.cols()).digest())
    return VerifyResult::reject(RejectPhase::kMalformed, "shape digest does not match the model and batch");
  ChallengeSource source = ChallengeSource::for_header(h, seed);
  source.absorb_digest("statement", statement_digest(model, x, z_last));
  TranscriptReader<F> reader(transcript, source);
  VerifyResult res = verify_layers<F>(model, x, z_last, reader);
  if (res.accepted) {
    try {
      reader.finish();
    } catch (const MalformedTranscript& e) {
      return VerifyResult::reject(RejectPhase::kMalformed, e.what());
    }
  }
  return res;
}

}  // namespace vnn
