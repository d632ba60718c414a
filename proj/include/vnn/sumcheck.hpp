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

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/mle.hpp"

namespace vnn {

/// A round polynomial h, sent as its evaluations h(0), h(1), ..., h(d).
template <PrimeField F>
struct RoundPolynomial {
  std::vector<F> evals;

  std::size_t degree() const { return evals.empty() ? 0 : evals.size() - 1; }
  F sum_over_boolean() const { return evals.at(0) + evals.at(1); }
};

/// Lagrange interpolation through the nodes 0..d, with the denominators inverted once.
template <PrimeField F>
class LagrangeNodes {
 public:
  explicit LagrangeNodes(std::size_t degree) : degree_(degree), inv_denominators_(degree + 1) {
    for (std::size_t i = 0; i <= degree; ++i) {
      std::int64_t den = 1;
      for (std::size_t j = 0; j <= degree; ++j)
        if (j != i) den *= static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j);
      inv_denominators_[i] = from_int<F>(den).inverse();
    }
  }

  std::size_t degree() const { return degree_; }

  F evaluate(std::span<const F> evals, F x) const {
    if (evals.size() != degree_ + 1) throw MalformedRound("round polynomial has wrong number of evaluations");
    // prefix/suffix products of (x - j) so each basis numerator costs O(1)
    const std::size_t n = degree_ + 1;
    std::vector<F> prefix(n + 1, F::one()), suffix(n + 1, F::one());
    for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] * (x - F::from_u64(j));
    for (std::size_t j = n; j-- > 0;) suffix[j] = suffix[j + 1] * (x - F::from_u64(j));
    F acc = F::zero();
    for (std::size_t i = 0; i < n; ++i) acc += evals[i] * prefix[i] * suffix[i + 1] * inv_denominators_[i];
    return acc;
  }

 private:
  std::size_t degree_;
  std::vector<F> inv_denominators_;
};

template <PrimeField F>
F interpolate(const RoundPolynomial<F>& h, F x) {
  return LagrangeNodes<F>(h.degree()).evaluate(h.evals, x);
}

/// Transcript boundaries; every reduction is one phase.
enum class PhaseKind : std::uint8_t { kSumcheck = 0, kBias = 1, kMatmul = 2, kActivation = 3 };

/// Prover side of a channel: sends messages, learns challenges.
template <class C, class F>
concept ProverChannel = requires(C& c, std::span<const F> msg, PhaseKind kind) {
  c.begin_phase(kind);
  c.send(msg);
  { c.challenge() } -> std::same_as<F>;
  c.end_phase();
};

/// Verifier side: receives messages of a known length, issues challenges.
template <class C, class F>
concept VerifierChannel = requires(C& c, std::size_t n, PhaseKind kind) {
  c.begin_phase(kind);
  { c.receive(n) } -> std::same_as<std::vector<F>>;
  { c.challenge() } -> std::same_as<F>;
  c.end_phase();
};

/// Prover-side oracle for a sum-check instance: produces the current round polynomial
/// and binds the current variable to a challenge.
template <class O, class F>
concept RoundOracle = requires(O& o, F c) {
  { o.round_polynomial() } -> std::same_as<RoundPolynomial<F>>;
  o.bind(c);
  { o.value() } -> std::same_as<F>;
};

/// g(x) = prod_k f_k(x)^{e_k} for multilinear tables f_k over the same variables.
/// Each round folds every table in half, so a full run costs O(total table size).
template <PrimeField F>
class ProductOracle {
 public:
  struct Factor {
    std::vector<F> table;
    unsigned power = 1;
  };

  explicit ProductOracle(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw DimensionMismatch("product oracle needs at least one factor");
    const std::size_t len = factors_.front().table.size();
    num_vars_ = log2_exact(len);
    for (const auto& f : factors_) {
      if (f.table.size() != len) throw DimensionMismatch("product oracle factors differ in size");
      degree_ += f.power;
    }
  }

  unsigned num_vars() const { return num_vars_; }
  unsigned degree() const { return degree_; }

  RoundPolynomial<F> round_polynomial() const {
    const std::size_t half = factors_.front().table.size() / 2;
    if (half == 0) throw EmptyTable();
    RoundPolynomial<F> h{std::vector<F>(degree_ + 1)};
    std::vector<F> cur(factors_.size()), step(factors_.size());
    for (std::size_t x = 0; x < half; ++x) {
      for (std::size_t k = 0; k < factors_.size(); ++k) {
        const auto& t = factors_[k].table;
        cur[k] = t[x];
        step[k] = t[half + x] - t[x];
      }
      for (unsigned e = 0; e <= degree_; ++e) {
        F prod = F::one();
        for (std::size_t k = 0; k < factors_.size(); ++k) {
          for (unsigned p = 0; p < factors_[k].power; ++p) prod *= cur[k];
          cur[k] += step[k];
        }
        h.evals[e] += prod;
      }
    }
    return h;
  }

  void bind(F c) {
    for (auto& f : factors_) {
      auto& t = f.table;
      const std::size_t half = t.size() / 2;
      if (half == 0) throw EmptyTable();
      for (std::size_t x = 0; x < half; ++x) t[x] += c * (t[half + x] - t[x]);
      t.resize(half);
    }
  }

  /// Value of factor k at the bound point (meaningful once every variable is bound).
  F factor_value(std::size_t k) const { return factors_.at(k).table.front(); }

  F value() const {
    F prod = F::one();
    for (const auto& f : factors_)
      for (unsigned p = 0; p < f.power; ++p) prod *= f.table.front();
    return prod;
  }

  /// Sum over the remaining Boolean cube; the honest claim for this instance.
  F sum() const {
    F acc = F::zero();
    const std::size_t len = factors_.front().table.size();
    for (std::size_t x = 0; x < len; ++x) {
      F prod = F::one();
      for (const auto& f : factors_)
        for (unsigned p = 0; p < f.power; ++p) prod *= f.table[x];
      acc += prod;
    }
    return acc;
  }

 private:
  std::vector<Factor> factors_;
  unsigned num_vars_ = 0;
  unsigned degree_ = 0;
};

template <PrimeField F>
struct SumcheckProof {
  Point<F> point;
  F value;
};

/// Runs the prover half: one round polynomial per variable, a challenge after each.
template <PrimeField F, RoundOracle<F> Oracle, ProverChannel<F> Channel>
SumcheckProof<F> sumcheck_prove(Oracle& oracle, unsigned num_vars, unsigned degree, Channel& channel) {
  SumcheckProof<F> out{{}, F::zero()};
  out.point.reserve(num_vars);
  for (unsigned round = 0; round < num_vars; ++round) {
    const RoundPolynomial<F> h = oracle.round_polynomial();
    if (h.degree() != degree) throw MalformedRound("oracle returned a polynomial of the wrong degree");
    channel.send(std::span<const F>(h.evals));
    const F c = channel.challenge();
    oracle.bind(c);
    out.point.push_back(c);
  }
  out.value = oracle.value();
  return out;
}

template <PrimeField F>
struct SumcheckVerdict {
  bool accepted = false;
  std::optional<unsigned> failed_round;  // set when a round consistency check failed
  Point<F> point;
  F value;  // running claim after the last round: the asserted g(point)
};

/// Runs the verifier half. `final_check(point, value)` decides acceptance once all rounds pass.
template <PrimeField F, VerifierChannel<F> Channel>
SumcheckVerdict<F> sumcheck_verify(F claim, unsigned num_vars, unsigned degree, Channel& channel,
                                   const std::function<bool(const Point<F>&, F)>& final_check) {
  SumcheckVerdict<F> v;
  v.value = claim;
  const LagrangeNodes<F> nodes(degree);
  for (unsigned round = 0; round < num_vars; ++round) {
    const std::vector<F> evals = channel.receive(degree + 1);
    if (evals.size() != degree + 1) throw MalformedRound("round polynomial has wrong number of evaluations");
    if (evals[0] + evals[1] != v.value) {
      v.failed_round = round;
      return v;
    }
    const F c = channel.challenge();
    v.value = nodes.evaluate(evals, c);
    v.point.push_back(c);
  }
  v.accepted = final_check ? final_check(v.point, v.value) : true;
  return v;
}

}  // namespace vnn
