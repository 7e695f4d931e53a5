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

#include "prunemem/model.h"

#include <cmath>
#include <limits>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "forward_internal.h"
#include "prunemem/rng.h"

namespace prunemem {
namespace {

constexpr double kInitStd = 0.02;

struct RoleName {
  TensorRole role;
  const char* name;
};

constexpr RoleName kRoleNames[] = {
    {TensorRole::kTokenEmbedding, "tok_emb"},
    {TensorRole::kPositionalEmbedding, "pos_emb"},
    {TensorRole::kLn1Scale, "ln1.scale"},
    {TensorRole::kLn1Bias, "ln1.bias"},
    {TensorRole::kAttnQ, "attn.q"},
    {TensorRole::kAttnK, "attn.k"},
    {TensorRole::kAttnV, "attn.v"},
    {TensorRole::kAttnO, "attn.o"},
    {TensorRole::kLn2Scale, "ln2.scale"},
    {TensorRole::kLn2Bias, "ln2.bias"},
    {TensorRole::kMlpUp, "mlp.up"},
    {TensorRole::kMlpDown, "mlp.down"},
    {TensorRole::kFinalLnScale, "final_ln.scale"},
    {TensorRole::kFinalLnBias, "final_ln.bias"},
};

constexpr TensorRole kLayerRoles[] = {
    TensorRole::kLn1Scale, TensorRole::kLn1Bias, TensorRole::kAttnQ,
    TensorRole::kAttnK,    TensorRole::kAttnV,   TensorRole::kAttnO,
    TensorRole::kLn2Scale, TensorRole::kLn2Bias, TensorRole::kMlpUp,
    TensorRole::kMlpDown,
};

const char* RoleString(TensorRole role) {
  for (const auto& rn : kRoleNames) {
    if (rn.role == role) return rn.name;
  }
  return "?";
}

Tensor2D& LayerTensor(LayerParams& layer, TensorRole role) {
  switch (role) {
    case TensorRole::kLn1Scale: return layer.ln1_scale;
    case TensorRole::kLn1Bias: return layer.ln1_bias;
    case TensorRole::kAttnQ: return layer.attn_q;
    case TensorRole::kAttnK: return layer.attn_k;
    case TensorRole::kAttnV: return layer.attn_v;
    case TensorRole::kAttnO: return layer.attn_o;
    case TensorRole::kLn2Scale: return layer.ln2_scale;
    case TensorRole::kLn2Bias: return layer.ln2_bias;
    case TensorRole::kMlpUp: return layer.mlp_up;
    case TensorRole::kMlpDown: return layer.mlp_down;
    default: break;
  }
  // Unreachable for per-layer roles.
  std::abort();
}

void Allocate(ModelParams& p) {
  const ModelConfig& c = p.config;
  p.token_embedding = Tensor2D(c.vocab_size, c.d_model);
  p.positional_embedding = Tensor2D(c.max_seq_len, c.d_model);
  p.layers.assign(c.n_layers, LayerParams{});
  for (LayerParams& l : p.layers) {
    l.ln1_scale = Tensor2D(1, c.d_model);
    l.ln1_bias = Tensor2D(1, c.d_model);
    l.attn_q = Tensor2D(c.d_model, c.d_model);
    l.attn_k = Tensor2D(c.d_model, c.d_model);
    l.attn_v = Tensor2D(c.d_model, c.d_model);
    l.attn_o = Tensor2D(c.d_model, c.d_model);
    l.ln2_scale = Tensor2D(1, c.d_model);
    l.ln2_bias = Tensor2D(1, c.d_model);
    l.mlp_up = Tensor2D(c.d_model, c.d_ff);
    l.mlp_down = Tensor2D(c.d_ff, c.d_model);
  }
  p.final_ln_scale = Tensor2D(1, c.d_model);
  p.final_ln_bias = Tensor2D(1, c.d_model);
}

void FillNormal(Tensor2D& t, Rng& rng, double stddev) {
  for (double& v : t.values()) v = stddev * rng.Normal();
}

std::pair<size_t, size_t> ExpectedShape(const ModelConfig& c, TensorRole role) {
  switch (role) {
    case TensorRole::kTokenEmbedding: return {c.vocab_size, c.d_model};
    case TensorRole::kPositionalEmbedding: return {c.max_seq_len, c.d_model};
    case TensorRole::kAttnQ:
    case TensorRole::kAttnK:
    case TensorRole::kAttnV:
    case TensorRole::kAttnO: return {c.d_model, c.d_model};
    case TensorRole::kMlpUp: return {c.d_model, c.d_ff};
    case TensorRole::kMlpDown: return {c.d_ff, c.d_model};
    default: return {1, c.d_model};
  }
}

}  // namespace

absl::Status ModelConfig::Validate() const {
  if (vocab_size < 2) return absl::InvalidArgumentError("vocab_size must be >= 2");
  if (n_layers < 1) return absl::InvalidArgumentError("n_layers must be >= 1");
  if (n_heads < 1) return absl::InvalidArgumentError("n_heads must be >= 1");
  if (d_model < 1 || d_model % n_heads != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("d_model (", d_model, ") must be a positive multiple of n_heads (",
                     n_heads, ")"));
  }
  if (d_ff < 1) return absl::InvalidArgumentError("d_ff must be >= 1");
  if (max_seq_len < 2) return absl::InvalidArgumentError("max_seq_len must be >= 2");
  if (vocab_size > static_cast<size_t>(std::numeric_limits<Token>::max())) {
    return absl::InvalidArgumentError("vocab_size exceeds token id range");
  }
  return absl::OkStatus();
}

bool IsPerLayer(TensorRole role) {
  switch (role) {
    case TensorRole::kTokenEmbedding:
    case TensorRole::kPositionalEmbedding:
    case TensorRole::kFinalLnScale:
    case TensorRole::kFinalLnBias: return false;
    default: return true;
  }
}

bool IsLinear(TensorRole role) {
  switch (role) {
    case TensorRole::kAttnQ:
    case TensorRole::kAttnK:
    case TensorRole::kAttnV:
    case TensorRole::kAttnO:
    case TensorRole::kMlpUp:
    case TensorRole::kMlpDown: return true;
    default: return false;
  }
}

bool IsAttention(TensorRole role) {
  switch (role) {
    case TensorRole::kAttnQ:
    case TensorRole::kAttnK:
    case TensorRole::kAttnV:
    case TensorRole::kAttnO: return true;
    default: return false;
  }
}

std::string TensorName(TensorId id) {
  if (!IsPerLayer(id.role)) return RoleString(id.role);
  return absl::StrCat("layers.", id.layer, ".", RoleString(id.role));
}

absl::StatusOr<TensorId> ParseTensorName(absl::string_view name) {
  for (const auto& rn : kRoleNames) {
    if (!IsPerLayer(rn.role) && name == rn.name) return TensorId{rn.role, -1};
  }
  std::vector<absl::string_view> parts = absl::StrSplit(name, absl::MaxSplits('.', 2));
  int layer = 0;
  if (parts.size() == 3 && parts[0] == "layers" && absl::SimpleAtoi(parts[1], &layer) &&
      layer >= 0) {
    for (const auto& rn : kRoleNames) {
      if (IsPerLayer(rn.role) && parts[2] == rn.name) return TensorId{rn.role, layer};
    }
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown tensor name '", name, "'"));
}

absl::StatusOr<ModelParams> ModelParams::Zeros(const ModelConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  ModelParams p;
  p.config = config;
  Allocate(p);
  return p;
}

absl::StatusOr<ModelParams> ModelParams::Initialize(const ModelConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  ModelParams p;
  p.config = config;
  Allocate(p);
  Rng rng(MixSeed(config.seed, /*stream=*/0x1a17));
  const double residual_std = kInitStd / std::sqrt(2.0 * static_cast<double>(config.n_layers));
  FillNormal(p.token_embedding, rng, kInitStd);
  FillNormal(p.positional_embedding, rng, kInitStd);
  for (LayerParams& l : p.layers) {
    l.ln1_scale.Fill(1.0);
    FillNormal(l.attn_q, rng, kInitStd);
    FillNormal(l.attn_k, rng, kInitStd);
    FillNormal(l.attn_v, rng, kInitStd);
    FillNormal(l.attn_o, rng, residual_std);
    l.ln2_scale.Fill(1.0);
    FillNormal(l.mlp_up, rng, kInitStd);
    FillNormal(l.mlp_down, rng, residual_std);
  }
  p.final_ln_scale.Fill(1.0);
  return p;
}

std::vector<TensorId> ModelParams::TensorIds() const {
  std::vector<TensorId> ids;
  ids.reserve(4 + layers.size() * std::size(kLayerRoles));
  ids.push_back({TensorRole::kTokenEmbedding, -1});
  ids.push_back({TensorRole::kPositionalEmbedding, -1});
  for (size_t i = 0; i < layers.size(); ++i) {
    for (TensorRole role : kLayerRoles) ids.push_back({role, static_cast<int>(i)});
  }
  ids.push_back({TensorRole::kFinalLnScale, -1});
  ids.push_back({TensorRole::kFinalLnBias, -1});
  return ids;
}

Tensor2D& ModelParams::tensor(TensorId id) {
  switch (id.role) {
    case TensorRole::kTokenEmbedding: return token_embedding;
    case TensorRole::kPositionalEmbedding: return positional_embedding;
    case TensorRole::kFinalLnScale: return final_ln_scale;
    case TensorRole::kFinalLnBias: return final_ln_bias;
    default: return LayerTensor(layers.at(static_cast<size_t>(id.layer)), id.role);
  }
}

const Tensor2D& ModelParams::tensor(TensorId id) const {
  return const_cast<ModelParams*>(this)->tensor(id);
}

size_t ModelParams::ParameterCount() const {
  size_t n = 0;
  for (TensorId id : TensorIds()) n += tensor(id).size();
  return n;
}

absl::Status ModelParams::CheckConsistency() const {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (layers.size() != config.n_layers) {
    return absl::InvalidArgumentError(absl::StrCat("expected ", config.n_layers,
                                                   " layers, found ", layers.size()));
  }
  for (TensorId id : TensorIds()) {
    const Tensor2D& t = tensor(id);
    auto [rows, cols] = ExpectedShape(config, id.role);
    if (t.rows() != rows || t.cols() != cols) {
      return absl::InvalidArgumentError(absl::StrCat("tensor ", TensorName(id), " has shape ",
                                                     t.rows(), "x", t.cols(), ", expected ",
                                                     rows, "x", cols));
    }
    if (!t.AllFinite()) {
      return absl::InvalidArgumentError(
          absl::StrCat("tensor ", TensorName(id), " has non-finite entries"));
    }
  }
  return absl::OkStatus();
}

absl::Status ValidateTokens(const ModelConfig& config, std::span<const Token> tokens) {
  if (tokens.empty()) return absl::InvalidArgumentError("token sequence is empty");
  if (tokens.size() > config.max_seq_len) {
    return absl::OutOfRangeError(absl::StrCat("sequence length ", tokens.size(),
                                              " exceeds max_seq_len ", config.max_seq_len));
  }
  for (Token t : tokens) {
    if (t < 0 || static_cast<size_t>(t) >= config.vocab_size) {
      return absl::InvalidArgumentError(
          absl::StrCat("token id ", t, " outside [0, ", config.vocab_size, ")"));
    }
  }
  return absl::OkStatus();
}

namespace internal {

void LayerNormForward(const Tensor2D& x, const Tensor2D& scale, const Tensor2D& bias,
                      Tensor2D& out, LayerNormCache& cache) {
  const size_t rows = x.rows();
  const size_t d = x.cols();
  out.Reset(rows, d);
  cache.xhat.Reset(rows, d);
  cache.rstd.assign(rows, 0.0);
  const double inv_d = 1.0 / static_cast<double>(d);
  for (size_t t = 0; t < rows; ++t) {
    std::span<const double> xr = x.row(t);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean *= inv_d;
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var *= inv_d;
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd[t] = rstd;
    for (size_t j = 0; j < d; ++j) {
      const double xh = (xr[j] - mean) * rstd;
      cache.xhat(t, j) = xh;
      out(t, j) = xh * scale(0, j) + bias(0, j);
    }
  }
}

ForwardCache& ThreadForwardCache() {
  thread_local ForwardCache cache;
  return cache;
}

void RunForward(const ModelParams& params, std::span<const Token> tokens,
                ForwardCache& cache) {
  const ModelConfig& c = params.config;
  const size_t T = tokens.size();
  const size_t d = c.d_model;
  const size_t dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor2D x(T, d);
  for (size_t t = 0; t < T; ++t) {
    std::span<const double> e = params.token_embedding.row(static_cast<size_t>(tokens[t]));
    std::span<const double> p = params.positional_embedding.row(t);
    for (size_t j = 0; j < d; ++j) x(t, j) = e[j] + p[j];
  }

  cache.layers.resize(c.n_layers);
  std::vector<double> scores(T);
  for (size_t li = 0; li < c.n_layers; ++li) {
    const LayerParams& lp = params.layers[li];
    LayerCache& lc = cache.layers[li];
    lc.x_in = x;
    LayerNormForward(x, lp.ln1_scale, lp.ln1_bias, lc.h1, lc.ln1);
    lc.q.Reset(T, d);
    lc.k.Reset(T, d);
    lc.v.Reset(T, d);
    MatMulAcc(lc.h1, lp.attn_q, lc.q);
    MatMulAcc(lc.h1, lp.attn_k, lc.k);
    MatMulAcc(lc.h1, lp.attn_v, lc.v);

    lc.o.Reset(T, d);
    lc.probs.resize(c.n_heads);
    for (Tensor2D& p : lc.probs) p.Reset(T, T);
    for (size_t h = 0; h < c.n_heads; ++h) {
      const size_t off = h * dh;
      Tensor2D& probs = lc.probs[h];
      for (size_t t = 0; t < T; ++t) {
        const double* qt = lc.q.data() + t * d + off;
        double max_score = -std::numeric_limits<double>::infinity();
        for (size_t s = 0; s <= t; ++s) {
          scores[s] = Dot(qt, lc.k.data() + s * d + off, dh) * scale;
          if (scores[s] > max_score) max_score = scores[s];
        }
        double denom = 0.0;
        for (size_t s = 0; s <= t; ++s) {
          scores[s] = Exp(scores[s] - max_score);
          denom += scores[s];
        }
        double* ot = lc.o.data() + t * d + off;
        for (size_t s = 0; s <= t; ++s) {
          const double pr = scores[s] / denom;
          probs(t, s) = pr;
          const double* vs = lc.v.data() + s * d + off;
          for (size_t j = 0; j < dh; ++j) ot[j] = std::fma(pr, vs[j], ot[j]);
        }
      }
    }
    Tensor2D attn_out(T, d);
    MatMulAcc(lc.o, lp.attn_o, attn_out);
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] += attn_out.data()[i];
    lc.x_mid = x;

    LayerNormForward(x, lp.ln2_scale, lp.ln2_bias, lc.h2, lc.ln2);
    lc.u.Reset(T, c.d_ff);
    MatMulAcc(lc.h2, lp.mlp_up, lc.u);
    lc.g.Reset(T, c.d_ff);
    lc.gelu_tanh.Reset(T, c.d_ff);
    {
      const double* u = lc.u.data();
      double* g = lc.g.data();
      double* th = lc.gelu_tanh.data();
      for (size_t i = 0; i < lc.u.size(); ++i) g[i] = Gelu(u[i], th[i]);
    }
    Tensor2D mlp_out(T, d);
    MatMulAcc(lc.g, lp.mlp_down, mlp_out);
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] += mlp_out.data()[i];
  }

  cache.x_final = x;
  LayerNormForward(x, params.final_ln_scale, params.final_ln_bias, cache.h_final,
                   cache.ln_final);
  cache.logits.Reset(T, c.vocab_size);
  MatMulTransB(cache.h_final, params.token_embedding, cache.logits);
}

}  // namespace internal

absl::StatusOr<Tensor2D> Forward(const ModelParams& params, std::span<const Token> input) {
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  if (absl::Status s = ValidateTokens(params.config, input); !s.ok()) return s;
  internal::ForwardCache& cache = internal::ThreadForwardCache();
  internal::RunForward(params, input, cache);
  if (!cache.logits.AllFinite()) {
    return absl::InternalError("forward pass produced non-finite logits");
  }
  return std::move(cache.logits);
}

size_t ArgmaxLowestIndex(std::span<const double> row) {
  size_t best = 0;
  for (size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

absl::StatusOr<TokenSequence> GreedyDecode(const ModelParams& params,
                                           std::span<const Token> prefix, size_t n_new) {
  if (prefix.size() + n_new > params.config.max_seq_len) {
    return absl::OutOfRangeError(absl::StrCat("prefix length ", prefix.size(), " + n_new ",
                                              n_new, " exceeds max_seq_len ",
                                              params.config.max_seq_len));
  }
  if (n_new == 0) return TokenSequence{};
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  if (absl::Status s = ValidateTokens(params.config, prefix); !s.ok()) return s;

  TokenSequence context(prefix.begin(), prefix.end());
  TokenSequence out;
  out.reserve(n_new);
  internal::ForwardCache& cache = internal::ThreadForwardCache();
  for (size_t step = 0; step < n_new; ++step) {
    internal::RunForward(params, context, cache);
    const Token next =
        static_cast<Token>(ArgmaxLowestIndex(cache.logits.row(cache.logits.rows() - 1)));
    out.push_back(next);
    context.push_back(next);
  }
  return out;
}

std::vector<double> LogSoftmax(std::span<const double> row) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (double v : row) max_v = std::max(max_v, v);
  double sum = 0.0;
  for (double v : row) sum += internal::Exp(v - max_v);
  const double log_z = max_v + std::log(sum);
  std::vector<double> out(row.size());
  for (size_t i = 0; i < row.size(); ++i) out[i] = row[i] - log_z;
  return out;
}

absl::StatusOr<double> SequenceNll(const ModelParams& params, std::span<const Token> seq) {
  if (seq.size() < 2) {
    return absl::InvalidArgumentError("sequence_nll needs at least 2 tokens");
  }
  absl::StatusOr<Tensor2D> logits = Forward(params, seq);
  if (!logits.ok()) return logits.status();
  double total = 0.0;
  for (size_t t = 1; t < seq.size(); ++t) {
    std::vector<double> lp = LogSoftmax(logits->row(t - 1));
    total -= lp[static_cast<size_t>(seq[t])];
  }
  return total / static_cast<double>(seq.size() - 1);
}

}  // namespace prunemem
