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

// Quadratic-activation networks as arithmetic circuits over F_p.
//
// Layer k (0-based) computes z_k = w_k y_k + b_k 1^T, with y_0 = x and
// y_{k+1} = z_k (elementwise square) for every hidden layer. The last z is the
// network output; the softmax on top of it is applied by the client and never proven.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/matrix.hpp"

namespace vnn {

using BigInt = boost::multiprecision::cpp_int;
using BigFloat = boost::multiprecision::cpp_bin_float_100;

struct FloatLayer {
  Matrix<double> weights;  // rows = outputs, cols = inputs
  std::vector<double> bias;
};

/// Trained real-valued network; every layer but the last is followed by a quadratic activation.
struct FloatModel {
  std::vector<FloatLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }
  void validate() const;
};

struct SignedLayer {
  Matrix<SignedInt> weights;
  std::vector<SignedInt> bias;
};

/// Quantized network with signed integer parameters, independent of the field type.
struct SignedModel {
  ModulusId modulus = ModulusId::kM61;
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<SignedLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  void validate() const;
};

inline void FloatModel::validate() const {
  if (layers.empty()) throw FormatError("model has no linear layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.weights.rows() == 0 || l.weights.cols() == 0) throw FormatError("empty weight matrix");
    if (l.bias.size() != l.weights.rows()) throw ShapeMismatch("bias length differs from weight rows");
    if (k > 0 && l.weights.cols() != layers[k - 1].weights.rows())
      throw ShapeMismatch("layer " + std::to_string(k) + " input width does not match previous output");
  }
}

inline void SignedModel::validate() const {
  if (layers.empty()) throw FormatError("model has no linear layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.weights.rows() == 0 || l.weights.cols() == 0) throw FormatError("empty weight matrix");
    if (l.bias.size() != l.weights.rows()) throw ShapeMismatch("bias length differs from weight rows");
    if (k > 0 && l.weights.cols() != layers[k - 1].weights.rows())
      throw ShapeMismatch("layer " + std::to_string(k) + " input width does not match previous output");
  }
}

/// Field-domain network. Dimensions n_0..n_L of the unpadded model are kept
/// alongside the (possibly padded) matrices.
template <PrimeField F>
struct FieldModel {
  struct Layer {
    Matrix<F> weights;
    std::vector<F> bias;

    bool has_bias() const {
      return std::any_of(bias.begin(), bias.end(), [](F b) { return !b.is_zero(); });
    }
  };

  double alpha = 1.0;
  double beta = 1.0;
  std::vector<Layer> layers;
  std::vector<std::size_t> original_dims;  // n_0, ..., n_L

  std::size_t num_layers() const { return layers.size(); }
  std::size_t input_dim() const { return layers.front().weights.cols(); }
  std::size_t output_dim() const { return layers.back().weights.rows(); }

  /// Current (padded or not) dims n_0..n_L.
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d{input_dim()};
    for (const auto& l : layers) d.push_back(l.weights.rows());
    return d;
  }

  bool is_padded() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const Layer& l) { return is_pow2(l.weights.rows()) && is_pow2(l.weights.cols()); });
  }

  static FieldModel from_signed(const SignedModel& m) {
    if (m.modulus != F::kId) throw DimensionMismatch("model modulus differs from the field in use");
    m.validate();
    FieldModel out;
    out.alpha = m.alpha;
    out.beta = m.beta;
    out.original_dims.push_back(m.input_dim());
    for (const auto& l : m.layers) {
      Layer fl{Matrix<F>(l.weights.rows(), l.weights.cols()), std::vector<F>(l.bias.size())};
      for (std::size_t i = 0; i < l.weights.size(); ++i) fl.weights.storage()[i] = encode_signed<F>(l.weights.values()[i]);
      for (std::size_t i = 0; i < l.bias.size(); ++i) fl.bias[i] = encode_signed<F>(l.bias[i]);
      out.original_dims.push_back(l.weights.rows());
      out.layers.push_back(std::move(fl));
    }
    return out;
  }

  SignedModel to_signed() const {
    SignedModel m;
    m.modulus = F::kId;
    m.alpha = alpha;
    m.beta = beta;
    for (const auto& l : layers) {
      SignedLayer sl{Matrix<SignedInt>(l.weights.rows(), l.weights.cols()), {}};
      for (std::size_t i = 0; i < l.weights.size(); ++i) sl.weights.storage()[i] = decode_signed<F>(l.weights.values()[i]);
      for (F b : l.bias) sl.bias.push_back(decode_signed<F>(b));
      m.layers.push_back(std::move(sl));
    }
    return m;
  }
};

/// Prover-side record of every intermediate for one batch.
template <PrimeField F>
struct LayerTrace {
  std::vector<Matrix<F>> y;  // y[0] = x; y[k] = z[k-1]^2 for k >= 1
  std::vector<Matrix<F>> z;  // z[k] = w_k y[k] + b_k 1^T

  const Matrix<F>& input() const { return y.front(); }
  const Matrix<F>& output() const { return z.back(); }
};

// ---------------------------------------------------------------------------
// quantization

/// How biases are scaled relative to weights and inputs.
enum class BiasScaleRule {
  // Scale of z_k tracked exactly: s_0 = alpha*beta, s_k = s_{k-1}^2 * beta.
  kCumulative,
  // alpha^(2^k) * beta^(2^k + 1) for 0-based layer k.
  kClosedForm,
};

/// Round half away from zero.
inline BigInt round_half_away(const BigFloat& v) {
  BigFloat r = v < 0 ? -boost::multiprecision::floor(-v + BigFloat(0.5)) : boost::multiprecision::floor(v + BigFloat(0.5));
  return r.convert_to<BigInt>();
}

/// Scale carried by z_k under the given rule.
inline BigFloat layer_scale(double alpha, double beta, std::size_t k, BiasScaleRule rule) {
  const BigFloat a(alpha), b(beta);
  if (rule == BiasScaleRule::kClosedForm) {
    const auto e = BigFloat(1) * boost::multiprecision::pow(BigFloat(2), static_cast<int>(k));
    return boost::multiprecision::pow(a, e) * boost::multiprecision::pow(b, e + 1);
  }
  BigFloat s = a * b;
  for (std::size_t i = 0; i < k; ++i) s = s * s * b;
  return s;
}

/// Real-valued scale of the network output z_{L-1}.
inline double output_scale(double alpha, double beta, std::size_t num_layers) {
  return layer_scale(alpha, beta, num_layers - 1, BiasScaleRule::kCumulative).convert_to<double>();
}

inline BigInt modulus_value(ModulusId id) {
  return id == ModulusId::kM61 ? (BigInt(1) << 61) - 1 : (BigInt(1) << 127) - 1;
}

inline BigInt signed_limit(ModulusId id) { return (modulus_value(id) - 1) / 2; }

struct LayerMaxima {
  BigInt weight;
  BigInt bias;
  BigInt z;  // max |z_k| over the calibration batch
  BigInt y;  // max |z_k^2|, zero for the output layer
};

/// Largest magnitudes seen while quantizing and running a calibration batch exactly.
struct MaxValueReport {
  double alpha = 0;
  double beta = 0;
  ModulusId modulus = ModulusId::kM61;
  BigInt input;
  std::vector<LayerMaxima> layers;
  BigInt max_value;
  BigInt limit;  // (p-1)/2

  bool feasible() const { return max_value <= limit; }
};

struct QuantizedModel {
  SignedModel model;
  MaxValueReport report;
};

/// Integer network evaluated without any modulus.
struct ExactTrace {
  Matrix<BigInt> x;
  std::vector<Matrix<BigInt>> z;
};

inline Matrix<BigInt> exact_affine(const Matrix<BigInt>& w, const Matrix<BigInt>& y, const std::vector<BigInt>& b) {
  if (w.cols() != y.rows()) throw ShapeMismatch("exact inference: inner dimensions differ");
  Matrix<BigInt> out(w.rows(), y.cols());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t c = 0; c < y.cols(); ++c) out(i, c) = b[i];
    for (std::size_t k = 0; k < w.cols(); ++k) {
      if (w(i, k) == 0) continue;
      for (std::size_t c = 0; c < y.cols(); ++c) out(i, c) += w(i, k) * y(k, c);
    }
  }
  return out;
}

inline ExactTrace exact_forward(const std::vector<Matrix<BigInt>>& weights, const std::vector<std::vector<BigInt>>& biases,
                                const Matrix<BigInt>& x) {
  ExactTrace t{x, {}};
  Matrix<BigInt> y = x;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    t.z.push_back(exact_affine(weights[k], y, biases[k]));
    if (k + 1 < weights.size()) {
      y = t.z.back();
      for (auto& v : y.storage()) v *= v;
    }
  }
  return t;
}

/// Exact integer inference of a signed model (no modulus).
inline ExactTrace exact_forward(const SignedModel& m, const Matrix<SignedInt>& x) {
  auto lift = [](const Matrix<SignedInt>& a) {
    Matrix<BigInt> out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.storage()[i] = BigInt(to_string(a.values()[i]));
    return out;
  };
  std::vector<Matrix<BigInt>> ws;
  std::vector<std::vector<BigInt>> bs;
  for (const auto& l : m.layers) {
    ws.push_back(lift(l.weights));
    std::vector<BigInt> b;
    for (SignedInt v : l.bias) b.emplace_back(to_string(v));
    bs.push_back(std::move(b));
  }
  return exact_forward(ws, bs, lift(x));
}

namespace detail {

inline BigInt max_abs(std::span<const BigInt> v) {
  BigInt m = 0;
  for (const auto& e : v) m = std::max(m, BigInt(abs(e)));
  return m;
}

inline SignedInt to_signed_int(const BigInt& v) {
  // Callers check the range first; values are below 2^127 in magnitude.
  const bool neg = v < 0;
  BigInt mag = neg ? BigInt(-v) : v;
  u128 r = static_cast<u128>(static_cast<std::uint64_t>(mag >> 64)) << 64 |
           static_cast<u128>(static_cast<std::uint64_t>(mag & BigInt(~std::uint64_t{0})));
  return neg ? -static_cast<SignedInt>(r) : static_cast<SignedInt>(r);
}

}  // namespace detail

/// Scales real inputs by alpha and rounds.
inline Matrix<BigInt> quantize_input_exact(const Matrix<double>& x, double alpha) {
  Matrix<BigInt> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.storage()[i] = round_half_away(BigFloat(alpha) * BigFloat(x.values()[i]));
  return out;
}

inline Matrix<SignedInt> quantize_input(const Matrix<double>& x, double alpha, ModulusId modulus) {
  const auto exact = quantize_input_exact(x, alpha);
  const BigInt limit = signed_limit(modulus);
  Matrix<SignedInt> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < exact.size(); ++i) {
    if (abs(exact.values()[i]) > limit) throw Overflow("quantized input exceeds (p-1)/2");
    out.storage()[i] = detail::to_signed_int(exact.values()[i]);
  }
  return out;
}

/// Quantizes and runs `calibration` exactly, never throwing on overflow; the report
/// says whether the choice of (alpha, beta) is feasible for the modulus.
inline MaxValueReport max_value_report(const FloatModel& fm, double alpha, double beta, ModulusId modulus,
                                       const Matrix<double>& calibration,
                                       BiasScaleRule rule = BiasScaleRule::kCumulative) {
  fm.validate();
  if (alpha < 1 || beta < 1) throw OutOfRange("alpha and beta must be >= 1");
  if (calibration.rows() != fm.input_dim()) throw ShapeMismatch("calibration batch rows differ from input width");
  MaxValueReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.modulus = modulus;
  rep.limit = signed_limit(modulus);
  std::vector<Matrix<BigInt>> ws;
  std::vector<std::vector<BigInt>> bs;
  for (std::size_t k = 0; k < fm.layers.size(); ++k) {
    const auto& l = fm.layers[k];
    Matrix<BigInt> w(l.weights.rows(), l.weights.cols());
    for (std::size_t i = 0; i < w.size(); ++i) w.storage()[i] = round_half_away(BigFloat(beta) * BigFloat(l.weights.values()[i]));
    const BigFloat bscale = layer_scale(alpha, beta, k, rule);
    std::vector<BigInt> b;
    for (double v : l.bias) b.push_back(round_half_away(bscale * BigFloat(v)));
    ws.push_back(std::move(w));
    bs.push_back(std::move(b));
  }
  const auto x = quantize_input_exact(calibration, alpha);
  const auto trace = exact_forward(ws, bs, x);
  rep.input = detail::max_abs(x.values());
  rep.max_value = rep.input;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    LayerMaxima lm;
    lm.weight = detail::max_abs(ws[k].values());
    lm.bias = detail::max_abs(bs[k]);
    lm.z = detail::max_abs(trace.z[k].values());
    lm.y = k + 1 < ws.size() ? lm.z * lm.z : BigInt(0);
    rep.max_value = std::max({rep.max_value, lm.weight, lm.bias, lm.z, lm.y});
    rep.layers.push_back(std::move(lm));
  }
  return rep;
}

/// w = round(beta w'), b_k = round(scale_k b'), inputs round(alpha x').
/// Throws Overflow when any parameter or calibration intermediate exceeds (p-1)/2.
inline QuantizedModel quantize_model(const FloatModel& fm, double alpha, double beta, ModulusId modulus,
                                     const Matrix<double>& calibration,
                                     BiasScaleRule rule = BiasScaleRule::kCumulative) {
  QuantizedModel q;
  q.report = max_value_report(fm, alpha, beta, modulus, calibration, rule);
  if (!q.report.feasible())
    throw Overflow("max value " + q.report.max_value.str() + " exceeds (p-1)/2 = " + q.report.limit.str());
  q.model.modulus = modulus;
  q.model.alpha = alpha;
  q.model.beta = beta;
  for (std::size_t k = 0; k < fm.layers.size(); ++k) {
    const auto& l = fm.layers[k];
    SignedLayer sl{Matrix<SignedInt>(l.weights.rows(), l.weights.cols()), {}};
    for (std::size_t i = 0; i < l.weights.size(); ++i)
      sl.weights.storage()[i] = detail::to_signed_int(round_half_away(BigFloat(beta) * BigFloat(l.weights.values()[i])));
    const BigFloat bscale = layer_scale(alpha, beta, k, rule);
    for (double v : l.bias) sl.bias.push_back(detail::to_signed_int(round_half_away(bscale * BigFloat(v))));
    q.model.layers.push_back(std::move(sl));
  }
  return q;
}

// ---------------------------------------------------------------------------
// padding and inference

/// Zero-pads every dimension to the next power of two, keeping the original dims.
template <PrimeField F>
FieldModel<F> pad_to_pow2(const FieldModel<F>& m) {
  FieldModel<F> out;
  out.alpha = m.alpha;
  out.beta = m.beta;
  out.original_dims = m.original_dims;
  for (const auto& l : m.layers) {
    const std::size_t rows = next_pow2(l.weights.rows()), cols = next_pow2(l.weights.cols());
    typename FieldModel<F>::Layer pl{zero_pad(l.weights, rows, cols), l.bias};
    pl.bias.resize(rows, F::zero());
    out.layers.push_back(std::move(pl));
  }
  return out;
}

/// Pads an n_0 x b input batch to power-of-two rows and columns.
template <PrimeField F>
Matrix<F> pad_batch(const Matrix<F>& x) {
  return zero_pad(x, next_pow2(x.rows()), next_pow2(x.cols()));
}

template <PrimeField F>
Matrix<F> encode_matrix(const Matrix<SignedInt>& m) {
  Matrix<F> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.storage()[i] = encode_signed<F>(m.values()[i]);
  return out;
}

template <PrimeField F>
Matrix<SignedInt> decode_matrix(const Matrix<F>& m) {
  Matrix<SignedInt> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.storage()[i] = decode_signed<F>(m.values()[i]);
  return out;
}

/// z_k = w_k y_k + b_k 1^T over F.
template <PrimeField F>
Matrix<F> affine(const typename FieldModel<F>::Layer& layer, const Matrix<F>& y) {
  Matrix<F> z = matmul(layer.weights, y);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const F b = layer.bias[i];
    if (b.is_zero()) continue;
    for (F& v : z.row(i)) v += b;
  }
  return z;
}

template <PrimeField F>
LayerTrace<F> forward_infer(const FieldModel<F>& model, const Matrix<F>& x) {
  if (model.layers.empty()) throw FormatError("model has no layers");
  if (x.rows() != model.input_dim()) throw ShapeMismatch("input rows differ from model input width");
  LayerTrace<F> t;
  t.y.push_back(x);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    if (layer.weights.cols() != t.y.back().rows()) throw ShapeMismatch("layer input width mismatch");
    t.z.push_back(affine<F>(layer, t.y.back()));
    if (k + 1 < model.layers.size()) {
      Matrix<F> sq = t.z.back();
      for (F& v : sq.storage()) v = v.square();
      t.y.push_back(std::move(sq));
    }
  }
  return t;
}

/// Checks that no value in the trace wrapped around the modulus by re-running the
/// network on decoded parameters in floating point. A wrapped value differs from its
/// real counterpart by a multiple of p, far beyond rounding error.
template <PrimeField F>
void audit_trace_range(const FieldModel<F>& model, const LayerTrace<F>& trace) {
  const long double p = static_cast<long double>(F::kModulus);
  const long double limit = (p - 1) / 2;
  auto dec = [](F v) { return static_cast<long double>(decode_signed<F>(v)); };
  std::vector<long double> y(trace.input().size());
  std::size_t cols = trace.input().cols();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = dec(trace.input().values()[i]);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& l = model.layers[k];
    const std::size_t rows = l.weights.rows(), inner = l.weights.cols();
    std::vector<long double> z(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const long double b = dec(l.bias[i]);
      for (std::size_t c = 0; c < cols; ++c) z[i * cols + c] = b;
      for (std::size_t j = 0; j < inner; ++j) {
        const long double w = dec(l.weights(i, j));
        if (w == 0) continue;
        for (std::size_t c = 0; c < cols; ++c) z[i * cols + c] += w * y[j * cols + c];
      }
    }
    const auto& zf = trace.z[k].values();
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::fabs(z[i]) > limit || std::fabs(z[i] - dec(zf[i])) > p / 4)
        throw Overflow("layer " + std::to_string(k) + " intermediate exceeds (p-1)/2");
    }
    if (k + 1 < model.layers.size()) {
      for (auto& v : z) {
        v *= v;
        if (v > limit) throw Overflow("layer " + std::to_string(k) + " activation exceeds (p-1)/2");
      }
    }
    y = std::move(z);
  }
}

struct Prediction {
  Matrix<double> probabilities;  // classes x samples
  std::vector<std::size_t> argmax;
};

/// Decodes z_{L-1}, rescales to real units and applies softmax per column. Only the
/// leading `classes` x `samples` block is used (padding is dropped).
template <PrimeField F>
Prediction decode_output(const Matrix<F>& z_last, double scale, std::size_t classes, std::size_t samples) {
  if (classes > z_last.rows() || samples > z_last.cols()) throw ShapeMismatch("decode_output: block exceeds output");
  if (!(scale > 0)) throw OutOfRange("output scale must be positive");
  Prediction p{Matrix<double>(classes, samples), std::vector<std::size_t>(samples, 0)};
  for (std::size_t c = 0; c < samples; ++c) {
    std::vector<long double> logits(classes);
    for (std::size_t r = 0; r < classes; ++r) logits[r] = static_cast<long double>(decode_signed<F>(z_last(r, c)));
    const auto best = std::max_element(logits.begin(), logits.end());
    p.argmax[c] = static_cast<std::size_t>(best - logits.begin());
    const long double top = *best;
    long double total = 0;
    for (auto& v : logits) {
      v = std::exp((v - top) / scale);
      total += v;
    }
    for (std::size_t r = 0; r < classes; ++r) p.probabilities(r, c) = static_cast<double>(logits[r] / total);
  }
  return p;
}

/// Plain float inference (quadratic hidden activations); the reference the quantized
/// model is compared against.
inline Matrix<double> float_forward(const FloatModel& fm, const Matrix<double>& x) {
  Matrix<double> y = x;
  for (std::size_t k = 0; k < fm.layers.size(); ++k) {
    const auto& l = fm.layers[k];
    if (l.weights.cols() != y.rows()) throw ShapeMismatch("float_forward: width mismatch");
    Matrix<double> z(l.weights.rows(), y.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t c = 0; c < z.cols(); ++c) {
        double acc = l.bias[i];
        for (std::size_t j = 0; j < l.weights.cols(); ++j) acc += l.weights(i, j) * y(j, c);
        z(i, c) = k + 1 < fm.layers.size() ? acc * acc : acc;
      }
    y = std::move(z);
  }
  return y;
}

}  // namespace vnn
