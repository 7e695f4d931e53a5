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

#ifndef PRUNEMEM_MODEL_H_
#define PRUNEMEM_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "prunemem/tensor.h"

namespace prunemem {

using Token = int32_t;
using TokenSequence = std::vector<Token>;

// Architecture hyperparameters of the pre-LayerNorm causal decoder.
struct ModelConfig {
  size_t vocab_size = 256;
  size_t n_layers = 4;
  size_t n_heads = 4;
  size_t d_model = 128;
  size_t d_ff = 512;
  size_t max_seq_len = 64;
  uint64_t seed = 0;

  absl::Status Validate() const;
  size_t head_dim() const { return d_model / n_heads; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class TensorRole {
  kTokenEmbedding,
  kPositionalEmbedding,
  kLn1Scale,
  kLn1Bias,
  kAttnQ,
  kAttnK,
  kAttnV,
  kAttnO,
  kLn2Scale,
  kLn2Bias,
  kMlpUp,
  kMlpDown,
  kFinalLnScale,
  kFinalLnBias,
};

bool IsPerLayer(TensorRole role);
// Linear projections: the only tensors any pruning scope may touch.
bool IsLinear(TensorRole role);
bool IsAttention(TensorRole role);

// Identifies one parameter tensor. `layer` is -1 for model-level tensors.
struct TensorId {
  TensorRole role;
  int layer = -1;
  friend bool operator==(const TensorId&, const TensorId&) = default;
};

// Stable names, e.g. "tok_emb", "layers.1.attn.q", "final_ln.scale".
std::string TensorName(TensorId id);
absl::StatusOr<TensorId> ParseTensorName(absl::string_view name);

struct LayerParams {
  Tensor2D ln1_scale;  // 1 x d_model
  Tensor2D ln1_bias;
  Tensor2D attn_q;  // d_model x d_model, applied as x * W
  Tensor2D attn_k;
  Tensor2D attn_v;
  Tensor2D attn_o;
  Tensor2D ln2_scale;
  Tensor2D ln2_bias;
  Tensor2D mlp_up;    // d_model x d_ff
  Tensor2D mlp_down;  // d_ff x d_model

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Weights of the decoder. The output head is tied to token_embedding.
struct ModelParams {
  ModelConfig config;
  Tensor2D token_embedding;       // vocab_size x d_model
  Tensor2D positional_embedding;  // max_seq_len x d_model
  std::vector<LayerParams> layers;
  Tensor2D final_ln_scale;
  Tensor2D final_ln_bias;

  // Every weight zero, including layer-norm scales; logits are uniform.
  static absl::StatusOr<ModelParams> Zeros(const ModelConfig& config);
  // GPT-style init from config.seed: N(0, 0.02) for embeddings and
  // projections, residual-output projections (attn_o, mlp_down) further scaled
  // by 1/sqrt(2 * n_layers), layer-norm scale 1 and bias 0.
  static absl::StatusOr<ModelParams> Initialize(const ModelConfig& config);

  // All tensors in canonical order: embeddings, then each layer in field
  // order, then the final layer norm.
  std::vector<TensorId> TensorIds() const;
  Tensor2D& tensor(TensorId id);
  const Tensor2D& tensor(TensorId id) const;
  size_t ParameterCount() const;

  // Shapes consistent with config and every entry finite.
  absl::Status CheckConsistency() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Logits [seq_len x vocab_size] of the causal decoder.
absl::StatusOr<Tensor2D> Forward(const ModelParams& params,
                                 std::span<const Token> input);

// Index of the largest entry; ties go to the lowest index.
size_t ArgmaxLowestIndex(std::span<const double> row);

// Appends n_new argmax tokens one at a time. Pure and deterministic.
absl::StatusOr<TokenSequence> GreedyDecode(const ModelParams& params,
                                           std::span<const Token> prefix,
                                           size_t n_new);

// Mean over positions t >= 1 of -log softmax(logits[t-1])[token t], in nats.
absl::StatusOr<double> SequenceNll(const ModelParams& params,
                                   std::span<const Token> seq);

// Numerically stable log-softmax of one row.
std::vector<double> LogSoftmax(std::span<const double> row);

// Shared input checks: non-empty, ids in range, fits the positional table.
absl::Status ValidateTokens(const ModelConfig& config, std::span<const Token> tokens);

}  // namespace prunemem

#endif  // PRUNEMEM_MODEL_H_
