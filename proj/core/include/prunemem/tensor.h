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

#ifndef PRUNEMEM_TENSOR_H_
#define PRUNEMEM_TENSOR_H_

#include <cstddef>
#include <span>
#include <vector>

namespace prunemem {

// Dense row-major matrix of doubles. Vectors are stored as 1 x n.
class Tensor2D {
 public:
  Tensor2D() = default;
  Tensor2D(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Reshapes to rows x cols, zero-filled, reusing the existing allocation.
  void Reset(size_t rows, size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, 0.0);
  }
  void SetZero();
  void Fill(double value);
  bool AllFinite() const;
  Tensor2D Transposed() const;

  bool SameShape(const Tensor2D& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  friend bool operator==(const Tensor2D& a, const Tensor2D& b) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Matrix kernels. Every output element is accumulated with fused
// multiply-adds in increasing inner-index order starting from the existing
// value of C, independent of tiling. Consequently row i of a product does not
// depend on how many rows A has, which makes forward passes over a prefix
// bit-identical to the matching rows of a forward pass over a longer input.

// C[m x n] += A[m x k] * B[k x n]
void MatMulAcc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);
// C[k x n] += A[m x k]^T * B[m x n]
void MatMulTransAAcc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);
// C[m x n] = A[m x k] * B[n x k]^T
void MatMulTransB(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);

// Raw-pointer entry point shared by the wrappers above. A element (i, p) is
// read at a[i * a_row_stride + p * a_inner_stride]; B and C are dense
// row-major with leading dimensions n.
void GemmAcc(size_t m, size_t n, size_t k, const double* a, size_t a_row_stride,
             size_t a_inner_stride, const double* b, double* c);

// Fixed-order dot product.
double Dot(const double* a, const double* b, size_t n);

}  // namespace prunemem

#endif  // PRUNEMEM_TENSOR_H_
