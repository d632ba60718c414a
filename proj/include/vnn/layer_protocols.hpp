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

// The three per-layer reductions. Each one is a sum-check instance run as its own
// transcript phase; the prover half takes the concrete tables, the verifier half only
// the claim, the public shape and the channel.
//
//   matmul:     Z~(q,r)  = sum_j W~(q,j) Y~(j,r)                         degree 2
//   activation: Y~(s,r)  = sum_{j,k} I~(s,j) I~(r,k) Z~prev(j,k)^2       degree 3
//   bias:       Z~(q,r)  = sum_j I~(j,q) (Z'~(j,r) + B~(j))              degree 2
//
// Per round the prover sends d+1 evaluations and receives one challenge, so the
// exchanged element counts are 4 log(n) for matmul and 5 log(b n) for activation, plus
// the end-of-protocol claim values.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/matrix.hpp"
#include "vnn/mle.hpp"
#include "vnn/sumcheck.hpp"

namespace vnn {

inline constexpr unsigned kMatmulDegree = 2;
inline constexpr unsigned kActivationDegree = 3;
inline constexpr unsigned kBiasDegree = 2;

/// Padded layer dimensions: w is n_out x n_in, activations are n_in x batch.
struct LayerShape {
  std::size_t n_in = 1;
  std::size_t n_out = 1;
  std::size_t batch = 1;
  unsigned log_in = 0;
  unsigned log_out = 0;
  unsigned log_batch = 0;

  static LayerShape make(std::size_t n_in, std::size_t n_out, std::size_t batch) {
    return {n_in, n_out, batch, log2_exact(n_in), log2_exact(n_out), log2_exact(batch)};
  }
};

// Elements the prover writes into each phase.
inline std::size_t matmul_phase_elements(unsigned log_in) { return (kMatmulDegree + 1) * log_in + 2; }
inline std::size_t activation_phase_elements(unsigned vars) { return (kActivationDegree + 1) * vars + 1; }
inline std::size_t bias_phase_elements(unsigned log_out) { return (kBiasDegree + 1) * log_out + 2; }

// Round traffic in both directions (evaluations plus challenges), excluding the final claims.
inline std::size_t matmul_round_elements(unsigned log_in) { return (kMatmulDegree + 2) * log_in; }
inline std::size_t activation_round_elements(unsigned vars) { return (kActivationDegree + 2) * vars; }

template <PrimeField F>
struct MatmulReduction {
  Point<F> s;    // bound inner index
  F w_value{};   // asserted W~(q, s)
  F y_value{};   // asserted Y~(s, r)
};

template <PrimeField F>
struct ActivationReduction {
  Point<F> row_point;    // j*
  Point<F> batch_point;  // k*
  F z_value{};           // asserted Z~prev(j*, k*)
};

template <PrimeField F>
struct BiasReduction {
  Point<F> row_point;  // j*
  F zprime_value{};    // asserted Z'~(j*, r)
  F bias_value{};      // asserted B~(j*)
};

template <class R>
struct ReductionVerdict {
  bool accepted = false;
  std::string failure;
  R reduction;
};

namespace detail {

inline std::string round_failure(const std::optional<unsigned>& round) {
  return round ? "round check failed in round " + std::to_string(*round) : "final value check failed";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// matrix multiplication

template <PrimeField F, ProverChannel<F> Channel>
MatmulReduction<F> matmul_prove(const Matrix<F>& w, const Matrix<F>& y, const Point<F>& q, const Point<F>& r,
                                Channel& channel) {
  if (w.cols() != y.rows()) throw DimensionMismatch("matmul_prove: inner dimensions differ");
  const unsigned log_in = log2_exact(w.cols());
  ProductOracle<F> oracle({{bind_rows<F>(w, q), 1}, {bind_cols<F>(y, r), 1}});
  channel.begin_phase(PhaseKind::kMatmul);
  auto proof = sumcheck_prove<F>(oracle, log_in, kMatmulDegree, channel);
  MatmulReduction<F> out{std::move(proof.point), oracle.factor_value(0), oracle.factor_value(1)};
  const F finals[2] = {out.w_value, out.y_value};
  channel.send(std::span<const F>(finals));
  channel.end_phase();
  return out;
}

template <PrimeField F, VerifierChannel<F> Channel>
ReductionVerdict<MatmulReduction<F>> matmul_verify(F claim, const LayerShape& shape, Channel& channel) {
  ReductionVerdict<MatmulReduction<F>> v;
  channel.begin_phase(PhaseKind::kMatmul);
  auto check = [&](const Point<F>&, F running) {
    const auto finals = channel.receive(2);
    v.reduction.w_value = finals[0];
    v.reduction.y_value = finals[1];
    return running == finals[0] * finals[1];
  };
  auto sc = sumcheck_verify<F>(claim, shape.log_in, kMatmulDegree, channel, check);
  if (!sc.accepted) {
    v.failure = "matmul " + detail::round_failure(sc.failed_round);
    return v;
  }
  channel.end_phase();
  v.reduction.s = std::move(sc.point);
  v.accepted = true;
  return v;
}

// ---------------------------------------------------------------------------
// quadratic activation

template <PrimeField F, ProverChannel<F> Channel>
ActivationReduction<F> activation_prove(const Matrix<F>& z_prev, const Point<F>& s, const Point<F>& r,
                                        Channel& channel) {
  const unsigned log_rows = log2_exact(z_prev.rows());
  const unsigned log_batch = log2_exact(z_prev.cols());
  if (s.size() != log_rows || r.size() != log_batch) throw DimensionMismatch("activation_prove: point lengths");
  std::vector<F> z(z_prev.values().begin(), z_prev.values().end());
  ProductOracle<F> oracle({{eq_table<F>(concat(s, r)), 1}, {std::move(z), 2}});
  channel.begin_phase(PhaseKind::kActivation);
  auto proof = sumcheck_prove<F>(oracle, log_rows + log_batch, kActivationDegree, channel);
  ActivationReduction<F> out;
  out.row_point.assign(proof.point.begin(), proof.point.begin() + log_rows);
  out.batch_point.assign(proof.point.begin() + log_rows, proof.point.end());
  out.z_value = oracle.factor_value(1);
  channel.send(std::span<const F>(&out.z_value, 1));
  channel.end_phase();
  return out;
}

template <PrimeField F, VerifierChannel<F> Channel>
ReductionVerdict<ActivationReduction<F>> activation_verify(F claim, const Point<F>& s, const Point<F>& r,
                                                           Channel& channel) {
  ReductionVerdict<ActivationReduction<F>> v;
  const unsigned log_rows = static_cast<unsigned>(s.size());
  channel.begin_phase(PhaseKind::kActivation);
  auto check = [&](const Point<F>& point, F running) {
    const F z = channel.receive(1)[0];
    v.reduction.z_value = z;
    const Point<F> j(point.begin(), point.begin() + log_rows);
    const Point<F> k(point.begin() + log_rows, point.end());
    return running == eq_evaluate<F>(s, j) * eq_evaluate<F>(r, k) * z * z;
  };
  auto sc = sumcheck_verify<F>(claim, log_rows + static_cast<unsigned>(r.size()), kActivationDegree, channel, check);
  if (!sc.accepted) {
    v.failure = "activation " + detail::round_failure(sc.failed_round);
    return v;
  }
  channel.end_phase();
  v.reduction.row_point.assign(sc.point.begin(), sc.point.begin() + log_rows);
  v.reduction.batch_point.assign(sc.point.begin() + log_rows, sc.point.end());
  v.accepted = true;
  return v;
}

// ---------------------------------------------------------------------------
// bias

template <PrimeField F, ProverChannel<F> Channel>
BiasReduction<F> bias_prove(const Matrix<F>& z_prime, const std::vector<F>& bias, const Point<F>& q,
                            const Point<F>& r, Channel& channel) {
  if (bias.size() != z_prime.rows()) throw DimensionMismatch("bias_prove: bias length differs from rows");
  const unsigned log_out = log2_exact(z_prime.rows());
  if (q.size() != log_out) throw DimensionMismatch("bias_prove: point length");
  std::vector<F> shifted = bind_cols<F>(z_prime, r);
  for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] += bias[j];
  ProductOracle<F> oracle({{eq_table<F>(q), 1}, {std::move(shifted), 1}});
  channel.begin_phase(PhaseKind::kBias);
  auto proof = sumcheck_prove<F>(oracle, log_out, kBiasDegree, channel);
  BiasReduction<F> out;
  out.row_point = std::move(proof.point);
  out.bias_value = mle_evaluate_vector<F>(bias, out.row_point);
  out.zprime_value = oracle.factor_value(1) - out.bias_value;
  const F finals[2] = {out.zprime_value, out.bias_value};
  channel.send(std::span<const F>(finals));
  channel.end_phase();
  return out;
}

template <PrimeField F, VerifierChannel<F> Channel>
ReductionVerdict<BiasReduction<F>> bias_verify(F claim, const Point<F>& q, Channel& channel) {
  ReductionVerdict<BiasReduction<F>> v;
  channel.begin_phase(PhaseKind::kBias);
  auto check = [&](const Point<F>& point, F running) {
    const auto finals = channel.receive(2);
    v.reduction.zprime_value = finals[0];
    v.reduction.bias_value = finals[1];
    return running == eq_evaluate<F>(point, q) * (finals[0] + finals[1]);
  };
  auto sc = sumcheck_verify<F>(claim, static_cast<unsigned>(q.size()), kBiasDegree, channel, check);
  if (!sc.accepted) {
    v.failure = "bias " + detail::round_failure(sc.failed_round);
    return v;
  }
  channel.end_phase();
  v.reduction.row_point = std::move(sc.point);
  v.accepted = true;
  return v;
}

}  // namespace vnn
