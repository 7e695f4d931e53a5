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

#ifndef PRUNEMEM_BACKPROP_H_
#define PRUNEMEM_BACKPROP_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "prunemem/model.h"
#include "prunemem/tensor.h"

namespace prunemem {

// Transposed copies of each layer's projections, used to push gradients back
// through x * W without strided reads. Must be rebuilt after any update.
struct TransposedWeights {
  struct Layer {
    Tensor2D attn_q, attn_k, attn_v, attn_o, mlp_up, mlp_down;
  };
  std::vector<Layer> layers;
};

TransposedWeights TransposeWeights(const ModelParams& params);

// Gradient buffer with the same shapes as `params`, zero-filled.
ModelParams ZerosLike(const ModelParams& params);

// Runs forward and backward on one sequence. Adds
// loss_scale * d(sum of next-token NLLs)/d(params) into `grads` and returns
// the unscaled NLL sum over the seq.size() - 1 predicted positions.
absl::StatusOr<double> AccumulateGradients(const ModelParams& params,
                                           const TransposedWeights& transposed,
                                           std::span<const Token> seq,
                                           double loss_scale, ModelParams& grads);

}  // namespace prunemem

#endif  // PRUNEMEM_BACKPROP_H_
