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

#include <cmath>
#include <limits>

#include "forward_internal.h"
#include "gtest/gtest.h"
#include "prunemem/rng.h"

namespace prunemem {
namespace {

Tensor2D Random(size_t rows, size_t cols, uint64_t seed) {
  Tensor2D t(rows, cols);
  Rng rng(seed);
  for (double& v : t.values()) v = rng.Normal();
  return t;
}

// Plain triple loop, summed in long double.
Tensor2D NaiveProduct(const Tensor2D& a, const Tensor2D& b) {
  Tensor2D c(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (size_t p = 0; p < a.cols(); ++p) s += static_cast<long double>(a(i, p)) * b(p, j);
      c(i, j) = static_cast<double>(s);
    }
  }
  return c;
}

void ExpectNear(const Tensor2D& got, const Tensor2D& want, double tol) {
  ASSERT_TRUE(got.SameShape(want));
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got.data()[i], want.data()[i], tol) << "flat index " << i;
  }
}

struct Shape {
  size_t m, k, n;
};

class GemmShapes : public ::testing::TestWithParam<Shape> {};

TEST_P(GemmShapes, MatMulAccMatchesNaive) {
  const Shape s = GetParam();
  const Tensor2D a = Random(s.m, s.k, 1);
  const Tensor2D b = Random(s.k, s.n, 2);
  Tensor2D c = Random(s.m, s.n, 3);
  const Tensor2D c0 = c;
  MatMulAcc(a, b, c);
  Tensor2D want = NaiveProduct(a, b);
  for (size_t i = 0; i < want.size(); ++i) want.data()[i] += c0.data()[i];
  ExpectNear(c, want, 1e-12 * static_cast<double>(s.k + 1));
}

TEST_P(GemmShapes, MatMulTransAAccMatchesNaive) {
  const Shape s = GetParam();
  const Tensor2D a = Random(s.k, s.m, 4);  // used as A^T
  const Tensor2D b = Random(s.k, s.n, 5);
  Tensor2D c(s.m, s.n);
  MatMulTransAAcc(a, b, c);
  ExpectNear(c, NaiveProduct(a.Transposed(), b), 1e-12 * static_cast<double>(s.k + 1));
}

TEST_P(GemmShapes, MatMulTransBMatchesNaive) {
  const Shape s = GetParam();
  const Tensor2D a = Random(s.m, s.k, 6);
  const Tensor2D b = Random(s.n, s.k, 7);
  Tensor2D c = Random(s.m, s.n, 8);  // overwritten, not accumulated
  MatMulTransB(a, b, c);
  ExpectNear(c, NaiveProduct(a, b.Transposed()), 1e-12 * static_cast<double>(s.k + 1));
}

INSTANTIATE_TEST_SUITE_P(Shapes, GemmShapes,
                         ::testing::Values(Shape{1, 1, 1}, Shape{3, 5, 7}, Shape{4, 8, 32},
                                           Shape{5, 3, 37}, Shape{64, 128, 128}, Shape{9, 17, 71}));

TEST(TensorTest, ProductRowsDoNotDependOnLaterRows) {
  const Tensor2D a = Random(13, 24, 9);
  const Tensor2D b = Random(24, 40, 10);
  Tensor2D full(13, 40);
  MatMulAcc(a, b, full);
  for (size_t rows = 1; rows <= 13; ++rows) {
    Tensor2D prefix(rows, 24);
    std::copy(a.data(), a.data() + rows * 24, prefix.data());
    Tensor2D part(rows, 40);
    MatMulAcc(prefix, b, part);
    for (size_t i = 0; i < part.size(); ++i) ASSERT_EQ(part.data()[i], full.data()[i]);
  }
}

TEST(TensorTest, ResetZeroFillsWithNewShape) {
  Tensor2D t = Random(4, 4, 11);
  t.Reset(2, 3);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  for (double v : t.values()) EXPECT_EQ(v, 0.0);
}

TEST(TensorTest, TransposedSwapsIndices) {
  const Tensor2D t = Random(3, 5, 12);
  const Tensor2D tt = t.Transposed();
  ASSERT_EQ(tt.rows(), 5u);
  for (size_t r = 0; r < 3; ++r) {
    for (size_t c = 0; c < 5; ++c) EXPECT_EQ(tt(c, r), t(r, c));
  }
  EXPECT_EQ(tt.Transposed(), t);
}

TEST(TensorTest, AllFiniteDetectsNanAndInf) {
  Tensor2D t(2, 2);
  EXPECT_TRUE(t.AllFinite());
  t(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.AllFinite());
  t(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.AllFinite());
}

TEST(TensorTest, DotMatchesNaive) {
  const Tensor2D a = Random(1, 29, 13);
  const Tensor2D b = Random(1, 29, 14);
  long double want = 0;
  for (size_t i = 0; i < 29; ++i) want += static_cast<long double>(a.data()[i]) * b.data()[i];
  EXPECT_NEAR(Dot(a.data(), b.data(), 29), static_cast<double>(want), 1e-13);
}

TEST(FastMathTest, ExpMatchesLibm) {
  for (double x = -708.0; x <= 708.0; x += 0.0371) {
    const double want = std::exp(x);
    EXPECT_NEAR(internal::Exp(x), want, 4e-16 * want) << "x = " << x;
  }
  EXPECT_EQ(internal::Exp(0.0), 1.0);
}

TEST(FastMathTest, ExpUnderflowAndNan) {
  EXPECT_EQ(internal::Exp(-709.0), 0.0);
  EXPECT_EQ(internal::Exp(-1e300), 0.0);
  EXPECT_EQ(internal::Exp(-std::numeric_limits<double>::infinity()), 0.0);
  EXPECT_TRUE(std::isnan(internal::Exp(std::numeric_limits<double>::quiet_NaN())));
}

TEST(FastMathTest, TanhMatchesLibm) {
  for (double z = -30.0; z <= 30.0; z += 0.0137) {
    EXPECT_NEAR(internal::Tanh(z), std::tanh(z), 2e-16) << "z = " << z;
  }
  EXPECT_EQ(internal::Tanh(0.0), 0.0);
  EXPECT_EQ(internal::Tanh(1000.0), 1.0);
  EXPECT_EQ(internal::Tanh(-1000.0), -1.0);
}

TEST(FastMathTest, GeluGradMatchesCentralDifference) {
  for (double u = -6.0; u <= 6.0; u += 0.25) {
    const double h = 1e-5;
    const double numeric = (internal::Gelu(u + h) - internal::Gelu(u - h)) / (2 * h);
    EXPECT_NEAR(internal::GeluGrad(u), numeric, 1e-9) << "u = " << u;
  }
}

}  // namespace
}  // namespace prunemem
