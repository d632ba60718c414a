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

// Multilinear extensions over the Boolean hypercube.
//
// Index convention: the most significant bit of a row (or column) index is variable 0.
// A matrix with 2^m rows and 2^l columns is a function of m row variables followed by
// l column variables, which is the same as treating the row-major flattened index as an
// (m+l)-bit big-endian string.

#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/matrix.hpp"

namespace vnn {

template <PrimeField F>
using Point = std::vector<F>;

// Non-deduced view parameter so callers can pass a Point<F> directly.
template <PrimeField F>
using PointView = std::type_identity_t<std::span<const F>>;

template <PrimeField F>
Point<F> concat(const Point<F>& a, const Point<F>& b) {
  Point<F> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Table of I~(point, x) for every Boolean x, in big-endian index order.
template <PrimeField F>
std::vector<F> eq_table(std::span<const F> point) {
  std::vector<F> table(std::size_t{1} << point.size());
  table[0] = F::one();
  std::size_t len = 1;
  for (const F& x : point) {
    // Expand in place from the back so each old entry k becomes (2k, 2k+1).
    for (std::size_t k = len; k-- > 0;) {
      const F hi = table[k] * x;
      table[2 * k + 1] = hi;
      table[2 * k] = table[k] - hi;
    }
    len *= 2;
  }
  return table;
}

template <PrimeField F>
std::vector<F> eq_table(const Point<F>& point) {
  return eq_table<F>(std::span<const F>(point));
}

/// I~(a, b) = prod_i ((1-a_i)(1-b_i) + a_i b_i).
template <PrimeField F>
F eq_evaluate(std::span<const F> a, std::span<const F> b) {
  if (a.size() != b.size()) throw DimensionMismatch("eq_evaluate: point lengths differ");
  F acc = F::one();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const F ab = a[i] * b[i];
    acc *= F::one() - a[i] - b[i] + ab + ab;
  }
  return acc;
}

template <PrimeField F>
F eq_evaluate(const Point<F>& a, const Point<F>& b) {
  return eq_evaluate<F>(std::span<const F>(a), std::span<const F>(b));
}

/// Evaluation table of a multilinear polynomial: 2^row_vars x 2^col_vars values, row-major.
template <PrimeField F>
class EvalTable {
 public:
  EvalTable() : values_(1) {}
  EvalTable(std::vector<F> values, unsigned row_vars, unsigned col_vars)
      : values_(std::move(values)), row_vars_(row_vars), col_vars_(col_vars) {
    if (values_.size() != (std::size_t{1} << (row_vars_ + col_vars_)))
      throw DimensionMismatch("table length is not 2^(row_vars+col_vars)");
  }

  static EvalTable from_matrix(const Matrix<F>& m) {
    return EvalTable(std::vector<F>(m.values().begin(), m.values().end()), log2_exact(m.rows()), log2_exact(m.cols()));
  }

  /// A vector as a table with only row variables.
  static EvalTable from_vector(std::vector<F> v) {
    const unsigned vars = log2_exact(v.size());
    return EvalTable(std::move(v), vars, 0);
  }

  unsigned row_vars() const { return row_vars_; }
  unsigned col_vars() const { return col_vars_; }
  unsigned num_vars() const { return row_vars_ + col_vars_; }
  std::span<const F> values() const { return values_; }
  const F& operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<F> values_;
  unsigned row_vars_ = 0;
  unsigned col_vars_ = 0;
};

namespace detail {

// sum_a eq_t[a] * sum_b values[a][b] * eq_u[b]
template <PrimeField F>
F mle_evaluate_rowmajor(std::span<const F> values, std::size_t rows, std::size_t cols, std::span<const F> t,
                        std::span<const F> u) {
  const auto et = eq_table<F>(t);
  const auto eu = eq_table<F>(u);
  F acc = F::zero();
  for (std::size_t a = 0; a < rows; ++a) {
    const F wa = et[a];
    if (wa.is_zero()) continue;
    const F* row = values.data() + a * cols;
    F inner = F::zero();
    for (std::size_t b = 0; b < cols; ++b) inner += row[b] * eu[b];
    acc += wa * inner;
  }
  return acc;
}

}  // namespace detail

/// W~(t, u) in O(table size).
template <PrimeField F>
F mle_evaluate(const EvalTable<F>& table, PointView<F> t, PointView<F> u) {
  if (t.size() != table.row_vars() || u.size() != table.col_vars())
    throw DimensionMismatch("mle_evaluate: point does not match table variable counts");
  return detail::mle_evaluate_rowmajor<F>(table.values(), std::size_t{1} << table.row_vars(),
                                          std::size_t{1} << table.col_vars(), t, u);
}

/// Same, directly on a power-of-two matrix.
template <PrimeField F>
F mle_evaluate(const Matrix<F>& m, PointView<F> t, PointView<F> u) {
  if (t.size() != log2_exact(m.rows()) || u.size() != log2_exact(m.cols()))
    throw DimensionMismatch("mle_evaluate: point does not match matrix variable counts");
  return detail::mle_evaluate_rowmajor<F>(m.values(), m.rows(), m.cols(), t, u);
}

/// MLE of a vector (single axis).
template <PrimeField F>
F mle_evaluate_vector(const std::vector<F>& v, PointView<F> t) {
  if (v.size() != (std::size_t{1} << t.size())) throw DimensionMismatch("mle_evaluate: vector length is not 2^|t|");
  return detail::mle_evaluate_rowmajor<F>(v, v.size(), 1, t, {});
}

/// Binds variable 0 to `c`: out[x] = (1-c) table[0,x] + c table[1,x].
/// Row variables are consumed first, then column variables.
template <PrimeField F>
EvalTable<F> fold_table(const EvalTable<F>& table, std::type_identity_t<F> c) {
  if (table.num_vars() == 0) throw EmptyTable();
  const std::size_t half = table.values().size() / 2;
  std::vector<F> out(half);
  const auto v = table.values();
  for (std::size_t x = 0; x < half; ++x) out[x] = v[x] + c * (v[half + x] - v[x]);
  if (table.row_vars() > 0) return EvalTable<F>(std::move(out), table.row_vars() - 1, table.col_vars());
  return EvalTable<F>(std::move(out), 0, table.col_vars() - 1);
}

/// Restricts the row variables to `t`: returns W~(t, b) for each Boolean column b.
template <PrimeField F>
std::vector<F> bind_rows(const Matrix<F>& m, PointView<F> t) {
  if (t.size() != log2_exact(m.rows())) throw DimensionMismatch("bind_rows: point length");
  const auto et = eq_table<F>(t);
  std::vector<F> out(m.cols());
  for (std::size_t a = 0; a < m.rows(); ++a) {
    if (et[a].is_zero()) continue;
    const auto row = m.row(a);
    for (std::size_t b = 0; b < m.cols(); ++b) out[b] += et[a] * row[b];
  }
  return out;
}

/// Restricts the column variables to `u`: returns W~(a, u) for each Boolean row a.
template <PrimeField F>
std::vector<F> bind_cols(const Matrix<F>& m, PointView<F> u) {
  if (u.size() != log2_exact(m.cols())) throw DimensionMismatch("bind_cols: point length");
  const auto eu = eq_table<F>(u);
  std::vector<F> out(m.rows());
  for (std::size_t a = 0; a < m.rows(); ++a) {
    const auto row = m.row(a);
    F acc = F::zero();
    for (std::size_t b = 0; b < m.cols(); ++b) acc += row[b] * eu[b];
    out[a] = acc;
  }
  return out;
}

}  // namespace vnn
