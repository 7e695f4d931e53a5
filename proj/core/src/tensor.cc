// Copyright 2026 The prunemem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prunemem/tensor.h"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace prunemem {
namespace {

// Register tile of R rows by W columns of C. Accumulates over the full inner
// dimension before writing back.
template <size_t R, size_t W>
inline void Tile(size_t i, size_t j, size_t n, size_t k, const double* a,
                 size_t ars, size_t aps, const double* b, double* c) {
  double acc[R][W];
  for (size_t r = 0; r < R; ++r) {
    for (size_t l = 0; l < W; ++l) acc[r][l] = c[(i + r) * n + j + l];
  }
  for (size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n + j;
    for (size_t r = 0; r < R; ++r) {
      const double x = a[(i + r) * ars + p * aps];
      for (size_t l = 0; l < W; ++l) acc[r][l] = std::fma(x, brow[l], acc[r][l]);
    }
  }
  for (size_t r = 0; r < R; ++r) {
    for (size_t l = 0; l < W; ++l) c[(i + r) * n + j + l] = acc[r][l];
  }
}

template <size_t R>
inline void RowBlock(size_t i, size_t n, size_t k, const double* a, size_t ars,
                     size_t aps, const double* b, double* c) {
  size_t j = 0;
  for (; j + 32 <= n; j += 32) Tile<R, 32>(i, j, n, k, a, ars, aps, b, c);
  for (; j + 8 <= n; j += 8) Tile<R, 8>(i, j, n, k, a, ars, aps, b, c);
  for (; j < n; ++j) Tile<R, 1>(i, j, n, k, a, ars, aps, b, c);
}

}  // namespace

void Tensor2D::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

void Tensor2D::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2D::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor2D Tensor2D::Transposed() const {
  Tensor2D out(cols_, rows_);
  for (size_t r = 0; r < rows_; ++r) {
    for (size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

void GemmAcc(size_t m, size_t n, size_t k, const double* a, size_t a_row_stride,
             size_t a_inner_stride, const double* b, double* c) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) RowBlock<4>(i, n, k, a, a_row_stride, a_inner_stride, b, c);
  for (; i < m; ++i) RowBlock<1>(i, n, k, a, a_row_stride, a_inner_stride, b, c);
}

void MatMulAcc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  assert(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols());
  GemmAcc(a.rows(), b.cols(), a.cols(), a.data(), a.cols(), 1, b.data(), c.data());
}

void MatMulTransAAcc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  assert(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols());
  GemmAcc(a.cols(), b.cols(), a.rows(), a.data(), 1, a.cols(), b.data(), c.data());
}

void MatMulTransB(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  assert(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows());
  const Tensor2D bt = b.Transposed();
  c.SetZero();
  GemmAcc(a.rows(), bt.cols(), a.cols(), a.data(), a.cols(), 1, bt.data(), c.data());
}

double Dot(const double* a, const double* b, size_t n) {
  double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (size_t l = 0; l < 8; ++l) lanes[l] = std::fma(a[j + l], b[j + l], lanes[l]);
  }
  double sum = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
               ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; j < n; ++j) sum = std::fma(a[j], b[j], sum);
  return sum;
}

}  // namespace prunemem
