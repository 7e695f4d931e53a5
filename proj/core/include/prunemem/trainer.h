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

#ifndef PRUNEMEM_TRAINER_H_
#define PRUNEMEM_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "prunemem/model.h"

namespace prunemem {

struct TrainConfig {
  size_t epochs = 8;
  size_t batch_size = 16;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<double> grad_clip;  // global L2 norm; none disables clipping
  uint64_t seed = 0;

  // learning_rate == 0 is accepted and leaves the weights untouched.
  absl::Status Validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainProgress {
  size_t epoch;
  size_t step;
  double epoch_mean_loss;
  const ModelParams* params;  // weights after this epoch; valid during the callback
};

struct TrainResult {
  ModelParams params;
  std::vector<double> step_losses;   // mean NLL per token of each batch
  std::vector<double> epoch_losses;  // token-weighted mean over the epoch
};

// Adam on full-sequence next-token cross-entropy, single-threaded, constant
// learning rate. Each epoch visits `stream` in an order shuffled from
// (cfg.seed, epoch). Identical inputs give bit-identical weights.
absl::StatusOr<TrainResult> Train(
    ModelParams params, std::span<const TokenSequence> stream, const TrainConfig& cfg,
    const std::function<void(const TrainProgress&)>& on_epoch = nullptr);

// {"step_losses": [...], "epoch_losses": [...]}
std::string LossHistoryToJson(const TrainResult& result);

struct GradientCheckOptions {
  // Lower bound on sampled coordinates; every tensor gets an equal share.
  size_t min_coordinates = 200;
  uint64_t seed = 0;
  // Applied to the analytic gradient before comparison; fault injection hook.
  std::function<void(ModelParams& grads)> tamper;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  size_t coordinates_checked = 0;
};

// |a - n| / (|a| + |n| + 1e-12), maximized over sampled coordinates, where a
// is the analytic gradient of the mean sequence NLL and n the central
// difference with step epsilon.
double RelativeError(double analytic, double numeric);
absl::StatusOr<GradientCheckResult> GradientCheck(const ModelParams& params,
                                                  std::span<const Token> seq, double epsilon,
                                                  const GradientCheckOptions& options = {});

}  // namespace prunemem

#endif  // PRUNEMEM_TRAINER_H_
