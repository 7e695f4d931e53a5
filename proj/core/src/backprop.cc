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

#include "prunemem/backprop.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "forward_internal.h"

namespace prunemem {
namespace {

using internal::ForwardCache;
using internal::LayerCache;
using internal::LayerNormCache;

// dx += LayerNorm backward of dy; accumulates scale/bias gradients.
void LayerNormBackward(const Tensor2D& dy, const LayerNormCache& cache,
                       const Tensor2D& scale, Tensor2D& dscale, Tensor2D& dbias,
                       Tensor2D& dx) {
  const size_t rows = dy.rows();
  const size_t d = dy.cols();
  const double inv_d = 1.0 / static_cast<double>(d);
  std::vector<double> dxhat(d);
  for (size_t t = 0; t < rows; ++t) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (size_t j = 0; j < d; ++j) {
      const double g = dy(t, j);
      const double xh = cache.xhat(t, j);
      dscale(0, j) += g * xh;
      dbias(0, j) += g;
      dxhat[j] = g * scale(0, j);
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xh;
    }
    mean_dxhat *= inv_d;
    mean_dxhat_xhat *= inv_d;
    const double rstd = cache.rstd[t];
    for (size_t j = 0; j < d; ++j) {
      dx(t, j) += rstd * (dxhat[j] - mean_dxhat - cache.xhat(t, j) * mean_dxhat_xhat);
    }
  }
}

struct BackwardScratch {
  Tensor2D dlogits, dh_final, dx, du, dh2, d_o, dq, dk, dv, dh1;
  std::vector<double> dprob;
};

BackwardScratch& ThreadScratch() {
  thread_local BackwardScratch scratch;
  return scratch;
}

}  // namespace

TransposedWeights TransposeWeights(const ModelParams& params) {
  TransposedWeights out;
  out.layers.reserve(params.layers.size());
  for (const LayerParams& l : params.layers) {
    out.layers.push_back({l.attn_q.Transposed(), l.attn_k.Transposed(),
                          l.attn_v.Transposed(), l.attn_o.Transposed(),
                          l.mlp_up.Transposed(), l.mlp_down.Transposed()});
  }
  return out;
}

ModelParams ZerosLike(const ModelParams& params) {
  ModelParams g = params;
  for (TensorId id : g.TensorIds()) g.tensor(id).SetZero();
  return g;
}

absl::StatusOr<double> AccumulateGradients(const ModelParams& params,
                                           const TransposedWeights& transposed,
                                           std::span<const Token> seq, double loss_scale,
                                           ModelParams& grads) {
  if (seq.size() < 2) {
    return absl::InvalidArgumentError("training sequence needs at least 2 tokens");
  }
  if (absl::Status s = ValidateTokens(params.config, seq); !s.ok()) return s;
  if (transposed.layers.size() != params.layers.size() ||
      grads.layers.size() != params.layers.size()) {
    return absl::InvalidArgumentError("gradient buffers do not match the model");
  }

  const ModelConfig& c = params.config;
  const size_t T = seq.size();
  const size_t d = c.d_model;
  const size_t dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardCache& cache = internal::ThreadForwardCache();
  internal::RunForward(params, seq, cache);
  BackwardScratch& w = ThreadScratch();

  // Softmax cross-entropy on positions 0..T-2 predicting tokens 1..T-1.
  double nll_sum = 0.0;
  Tensor2D& dlogits = w.dlogits;
  dlogits.Reset(T, c.vocab_size);
  for (size_t t = 0; t + 1 < T; ++t) {
    std::vector<double> lp = LogSoftmax(cache.logits.row(t));
    const size_t target = static_cast<size_t>(seq[t + 1]);
    nll_sum -= lp[target];
    for (size_t v = 0; v < c.vocab_size; ++v) dlogits(t, v) = loss_scale * internal::Exp(lp[v]);
    dlogits(t, target) -= loss_scale;
  }
  if (!std::isfinite(nll_sum)) return absl::InternalError("non-finite loss");

  // Tied output head.
  Tensor2D& dh_final = w.dh_final;
  dh_final.Reset(T, d);
  MatMulAcc(dlogits, params.token_embedding, dh_final);
  MatMulTransAAcc(dlogits, cache.h_final, grads.token_embedding);

  Tensor2D& dx = w.dx;
  dx.Reset(T, d);
  LayerNormBackward(dh_final, cache.ln_final, params.final_ln_scale, grads.final_ln_scale,
                    grads.final_ln_bias, dx);

  std::vector<double>& dprob = w.dprob;
  dprob.assign(T, 0.0);
  for (size_t li = c.n_layers; li-- > 0;) {
    const LayerParams& lp = params.layers[li];
    const TransposedWeights::Layer& lt = transposed.layers[li];
    const LayerCache& lc = cache.layers[li];
    LayerParams& lg = grads.layers[li];

    // MLP block: x_out = x_mid + gelu(LN2(x_mid) Wup) Wdown.
    MatMulTransAAcc(lc.g, dx, lg.mlp_down);
    Tensor2D& du = w.du;
    du.Reset(T, c.d_ff);
    MatMulAcc(dx, lt.mlp_down, du);
    for (size_t i = 0; i < du.size(); ++i) {
      du.data()[i] *= internal::GeluGrad(lc.u.data()[i], lc.gelu_tanh.data()[i]);
    }
    MatMulTransAAcc(lc.h2, du, lg.mlp_up);
    Tensor2D& dh2 = w.dh2;
    dh2.Reset(T, d);
    MatMulAcc(du, lt.mlp_up, dh2);
    LayerNormBackward(dh2, lc.ln2, lp.ln2_scale, lg.ln2_scale, lg.ln2_bias, dx);

    // Attention block: x_mid = x_in + Attn(LN1(x_in)) Wo.
    MatMulTransAAcc(lc.o, dx, lg.attn_o);
    Tensor2D& d_o = w.d_o;
    d_o.Reset(T, d);
    MatMulAcc(dx, lt.attn_o, d_o);

    Tensor2D& dq = w.dq;
    Tensor2D& dk = w.dk;
    Tensor2D& dv = w.dv;
    dq.Reset(T, d);
    dk.Reset(T, d);
    dv.Reset(T, d);
    for (size_t h = 0; h < c.n_heads; ++h) {
      const size_t off = h * dh;
      const Tensor2D& probs = lc.probs[h];
      for (size_t t = 0; t < T; ++t) {
        const double* dot = d_o.data() + t * d + off;
        double weighted = 0.0;
        for (size_t s = 0; s <= t; ++s) {
          dprob[s] = Dot(dot, lc.v.data() + s * d + off, dh);
          weighted += probs(t, s) * dprob[s];
          double* dvs = dv.data() + s * d + off;
          const double pr = probs(t, s);
          for (size_t j = 0; j < dh; ++j) dvs[j] += pr * dot[j];
        }
        double* dqt = dq.data() + t * d + off;
        const double* qt = lc.q.data() + t * d + off;
        for (size_t s = 0; s <= t; ++s) {
          const double dscore = probs(t, s) * (dprob[s] - weighted) * scale;
          const double* ks = lc.k.data() + s * d + off;
          double* dks = dk.data() + s * d + off;
          for (size_t j = 0; j < dh; ++j) {
            dqt[j] += dscore * ks[j];
            dks[j] += dscore * qt[j];
          }
        }
      }
    }

    MatMulTransAAcc(lc.h1, dq, lg.attn_q);
    MatMulTransAAcc(lc.h1, dk, lg.attn_k);
    MatMulTransAAcc(lc.h1, dv, lg.attn_v);
    Tensor2D& dh1 = w.dh1;
    dh1.Reset(T, d);
    MatMulAcc(dq, lt.attn_q, dh1);
    MatMulAcc(dk, lt.attn_k, dh1);
    MatMulAcc(dv, lt.attn_v, dh1);
    LayerNormBackward(dh1, lc.ln1, lp.ln1_scale, lg.ln1_scale, lg.ln1_bias, dx);
  }

  for (size_t t = 0; t < T; ++t) {
    std::span<double> de = grads.token_embedding.row(static_cast<size_t>(seq[t]));
    std::span<double> dp = grads.positional_embedding.row(t);
    std::span<const double> g = dx.row(t);
    for (size_t j = 0; j < d; ++j) {
      de[j] += g[j];
      dp[j] += g[j];
    }
  }
  return nll_sum;
}

}  // namespace prunemem
