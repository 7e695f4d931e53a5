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

#ifndef PRUNEMEM_SRC_FORWARD_INTERNAL_H_
#define PRUNEMEM_SRC_FORWARD_INTERNAL_H_

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "prunemem/model.h"
#include "prunemem/tensor.h"

namespace prunemem::internal {

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Tensor2D xhat;
  std::vector<double> rstd;
};

struct LayerCache {
  Tensor2D x_in;
  LayerNormCache ln1;
  Tensor2D h1, q, k, v;
  std::vector<Tensor2D> probs;  // per head, T x T, lower triangle used
  Tensor2D o;                   // concatenated head outputs
  Tensor2D x_mid;
  LayerNormCache ln2;
  Tensor2D h2, u, g;
  Tensor2D gelu_tanh;  // tanh term of the GELU at each element of u
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Tensor2D x_final;
  LayerNormCache ln_final;
  Tensor2D h_final;
  Tensor2D logits;
};

// Per-thread cache reused across calls; repeated allocation of the
// activation buffers otherwise costs as much as the arithmetic. Callers must
// not hold it across another use on the same thread.
ForwardCache& ThreadForwardCache();

// Full forward pass recording every activation the backward pass needs.
// Inputs must already be validated.
void RunForward(const ModelParams& params, std::span<const Token> tokens,
                ForwardCache& cache);

void LayerNormForward(const Tensor2D& x, const Tensor2D& scale,
                      const Tensor2D& bias, Tensor2D& out, LayerNormCache& cache);

// exp(x) for x <= 708 within a few ulp; returns 0 below -708 and propagates
// NaN. Branch-free so loops over it vectorize, which libm calls do not.
inline double Exp(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  // Adding 1.5 * 2^52 rounds to the nearest integer and leaves that integer
  // in the low mantissa bits.
  constexpr double kShift = 6755399441055744.0;
  const double shifted = x * kLog2e + kShift;
  const double n = shifted - kShift;
  const double r = std::fma(-n, kLn2Lo, std::fma(-n, kLn2Hi, x));
  // Taylor series to degree 13; |r| <= 0.35 so the remainder is below 1e-17.
  double p = 1.0 / 6227020800.0;
  p = std::fma(p, r, 1.0 / 479001600.0);
  p = std::fma(p, r, 1.0 / 39916800.0);
  p = std::fma(p, r, 1.0 / 3628800.0);
  p = std::fma(p, r, 1.0 / 362880.0);
  p = std::fma(p, r, 1.0 / 40320.0);
  p = std::fma(p, r, 1.0 / 5040.0);
  p = std::fma(p, r, 1.0 / 720.0);
  p = std::fma(p, r, 1.0 / 120.0);
  p = std::fma(p, r, 1.0 / 24.0);
  p = std::fma(p, r, 1.0 / 6.0);
  p = std::fma(p, r, 0.5);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);
  const uint64_t scale_bits = (std::bit_cast<uint64_t>(shifted) + 1023) << 52;
  const double y = p * std::bit_cast<double>(scale_bits);
  // A select here would be jump-threaded into the loop body and block
  // vectorization, so underflow is masked with integer ops.
  const uint64_t keep = -static_cast<uint64_t>(!(x < -708.0));
  return std::bit_cast<double>(std::bit_cast<uint64_t>(y) & keep);
}

inline double Tanh(double z) {
  const double e = Exp(-2.0 * std::fabs(z));
  return std::copysign((1.0 - e) / (1.0 + e), z);
}

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

// tanh-approximation GELU; `th` receives the tanh term for GeluGrad.
inline double Gelu(double u, double& th) {
  th = Tanh(kGeluC * (u + 0.044715 * u * u * u));
  return 0.5 * u * (1.0 + th);
}

inline double Gelu(double u) {
  double th;
  return Gelu(u, th);
}

inline double GeluGrad(double u, double th) {
  return 0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * u * u);
}

inline double GeluGrad(double u) {
  double th;
  Gelu(u, th);
  return GeluGrad(u, th);
}

}  // namespace prunemem::internal

#endif  // PRUNEMEM_SRC_FORWARD_INTERNAL_H_
