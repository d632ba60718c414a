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

#include <algorithm>
#include <bit>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"

namespace vnn {

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DimensionMismatch("matrix data size does not match rows*cols");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }
  std::vector<T>& storage() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

inline bool is_pow2(std::size_t n) { return std::has_single_bit(n); }

inline std::size_t next_pow2(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

/// log2 of a power of two.
inline unsigned log2_exact(std::size_t n) {
  if (!is_pow2(n)) throw DimensionMismatch("dimension " + std::to_string(n) + " is not a power of two");
  return static_cast<unsigned>(std::countr_zero(n));
}

/// Copies `m` into the top-left corner of a zero matrix of the given size.
template <class T>
Matrix<T> zero_pad(const Matrix<T>& m, std::size_t rows, std::size_t cols) {
  if (rows < m.rows() || cols < m.cols()) throw DimensionMismatch("padding cannot shrink a matrix");
  if (rows == m.rows() && cols == m.cols()) return m;
  Matrix<T> out(rows, cols);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

/// out = a * b over the field.
template <PrimeField F>
Matrix<F> matmul(const Matrix<F>& a, const Matrix<F>& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul inner dimensions differ");
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Matrix<F> out(n, m);
  if constexpr (F::kBits == 61) {
    std::vector<u128> acc(m);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), u128{0});
      std::size_t pending = 0;
      for (std::size_t k = 0; k < inner; ++k) {
        const F w = a(i, k);
        if (w.is_zero()) continue;
        const auto brow = b.row(k);
        for (std::size_t c = 0; c < m; ++c) acc[c] += F::wide_product(w, brow[c]);
        if (++pending == F::kLazyTerms) {
          for (auto& v : acc) v = F::reduce_wide(v).value();
          pending = 0;
        }
      }
      auto orow = out.row(i);
      for (std::size_t c = 0; c < m; ++c) orow[c] = F::reduce_wide(acc[c]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto orow = out.row(i);
      for (std::size_t k = 0; k < inner; ++k) {
        const F w = a(i, k);
        if (w.is_zero()) continue;
        const auto brow = b.row(k);
        for (std::size_t c = 0; c < m; ++c) orow[c] += w * brow[c];
      }
    }
  }
  return out;
}

}  // namespace vnn
