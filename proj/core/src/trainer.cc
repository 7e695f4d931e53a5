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

#include "prunemem/trainer.h"

#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "json_internal.h"
#include "prunemem/backprop.h"
#include "prunemem/rng.h"

namespace prunemem {
namespace {

void AdamUpdate(Tensor2D& param, const Tensor2D& grad, Tensor2D& m, Tensor2D& v,
                const TrainConfig& cfg, double bias1, double bias2, double grad_scale) {
  double* p = param.data();
  const double* g = grad.data();
  double* mm = m.data();
  double* vv = v.data();
  for (size_t i = 0; i < param.size(); ++i) {
    const double gi = g[i] * grad_scale;
    mm[i] = cfg.adam_beta1 * mm[i] + (1.0 - cfg.adam_beta1) * gi;
    vv[i] = cfg.adam_beta2 * vv[i] + (1.0 - cfg.adam_beta2) * gi * gi;
    const double mhat = mm[i] / bias1;
    const double vhat = vv[i] / bias2;
    p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

}  // namespace

absl::Status TrainConfig::Validate() const {
  if (epochs < 1) return absl::InvalidArgumentError("epochs must be >= 1");
  if (batch_size < 1) return absl::InvalidArgumentError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    return absl::InvalidArgumentError("learning_rate must be finite and >= 0");
  }
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    return absl::InvalidArgumentError("adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) return absl::InvalidArgumentError("adam_eps must be > 0");
  if (grad_clip.has_value() && !(*grad_clip > 0.0)) {
    return absl::InvalidArgumentError("grad_clip must be > 0 when set");
  }
  return absl::OkStatus();
}

absl::StatusOr<TrainResult> Train(ModelParams params, std::span<const TokenSequence> stream,
                                  const TrainConfig& cfg,
                                  const std::function<void(const TrainProgress&)>& on_epoch) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  if (stream.empty()) return absl::InvalidArgumentError("training stream is empty");
  for (size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].size() < 2) {
      return absl::InvalidArgumentError(absl::StrCat("training sequence ", i, " is shorter than 2"));
    }
    if (absl::Status s = ValidateTokens(params.config, stream[i]); !s.ok()) {
      return absl::Status(s.code(), absl::StrCat("training sequence ", i, ": ", s.message()));
    }
  }

  TrainResult result;
  ModelParams grads = ZerosLike(params);
  ModelParams adam_m = ZerosLike(params);
  ModelParams adam_v = ZerosLike(params);
  const std::vector<TensorId> ids = params.TensorIds();

  std::vector<size_t> order(stream.size());
  size_t step = 0;
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(MixSeed(cfg.seed, epoch));
    rng.Shuffle(std::span<size_t>(order));

    double epoch_nll = 0.0;
    size_t epoch_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      size_t batch_tokens = 0;
      for (size_t i = begin; i < end; ++i) batch_tokens += stream[order[i]].size() - 1;
      const double loss_scale = 1.0 / static_cast<double>(batch_tokens);

      for (TensorId id : ids) grads.tensor(id).SetZero();
      const TransposedWeights transposed = TransposeWeights(params);
      double batch_nll = 0.0;
      for (size_t i = begin; i < end; ++i) {
        absl::StatusOr<double> nll =
            AccumulateGradients(params, transposed, stream[order[i]], loss_scale, grads);
        if (!nll.ok()) {
          return absl::InternalError(absl::StrCat("training diverged at step ", step, " (epoch ",
                                                  epoch, "): ", nll.status().message()));
        }
        batch_nll += *nll;
      }
      const double batch_loss = batch_nll / static_cast<double>(batch_tokens);
      if (!std::isfinite(batch_loss)) {
        return absl::InternalError(
            absl::StrCat("training diverged at step ", step, " (epoch ", epoch, "): loss is NaN"));
      }

      double grad_scale = 1.0;
      if (cfg.grad_clip.has_value()) {
        double sq = 0.0;
        for (TensorId id : ids) {
          for (double g : grads.tensor(id).values()) sq += g * g;
        }
        const double norm = std::sqrt(sq);
        if (norm > *cfg.grad_clip) grad_scale = *cfg.grad_clip / norm;
      }

      ++step;
      const double bias1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      for (TensorId id : ids) {
        AdamUpdate(params.tensor(id), grads.tensor(id), adam_m.tensor(id), adam_v.tensor(id), cfg,
                   bias1, bias2, grad_scale);
      }
      result.step_losses.push_back(batch_loss);
      epoch_nll += batch_nll;
      epoch_tokens += batch_tokens;
    }
    if (absl::Status s = params.CheckConsistency(); !s.ok()) {
      return absl::InternalError(absl::StrCat("training diverged by step ", step, " (epoch ",
                                              epoch, "): ", s.message()));
    }
    const double epoch_loss = epoch_nll / static_cast<double>(epoch_tokens);
    result.epoch_losses.push_back(epoch_loss);
    if (on_epoch) on_epoch(TrainProgress{epoch, step, epoch_loss, &params});
  }
  result.params = std::move(params);
  return result;
}

std::string LossHistoryToJson(const TrainResult& result) {
  internal::Json j{{"step_losses", result.step_losses}, {"epoch_losses", result.epoch_losses}};
  return j.dump(1) + "\n";
}

double RelativeError(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / (std::abs(analytic) + std::abs(numeric) + 1e-12);
}

absl::StatusOr<GradientCheckResult> GradientCheck(const ModelParams& params,
                                                  std::span<const Token> seq, double epsilon,
                                                  const GradientCheckOptions& options) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    return absl::InvalidArgumentError("gradient check epsilon must lie in [1e-6, 1e-3]");
  }
  if (seq.size() < 2) return absl::InvalidArgumentError("gradient check needs >= 2 tokens");
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;

  ModelParams grads = ZerosLike(params);
  const double loss_scale = 1.0 / static_cast<double>(seq.size() - 1);
  absl::StatusOr<double> nll =
      AccumulateGradients(params, TransposeWeights(params), seq, loss_scale, grads);
  if (!nll.ok()) return nll.status();
  if (options.tamper) options.tamper(grads);

  const std::vector<TensorId> ids = params.TensorIds();
  const size_t per_tensor = std::max<size_t>(1, (options.min_coordinates + ids.size() - 1) / ids.size());
  Rng rng(options.seed);
  ModelParams probe = params;
  GradientCheckResult result;
  for (TensorId id : ids) {
    Tensor2D& t = probe.tensor(id);
    for (size_t n = 0; n < per_tensor; ++n) {
      const size_t idx = static_cast<size_t>(rng.UniformInt(t.size()));
      const double original = t.data()[idx];
      t.data()[idx] = original + epsilon;
      absl::StatusOr<double> plus = SequenceNll(probe, seq);
      t.data()[idx] = original - epsilon;
      absl::StatusOr<double> minus = SequenceNll(probe, seq);
      t.data()[idx] = original;
      if (!plus.ok()) return plus.status();
      if (!minus.ok()) return minus.status();
      const double numeric = (*plus - *minus) / (2.0 * epsilon);
      const double err = RelativeError(grads.tensor(id).data()[idx], numeric);
      if (err > result.max_relative_error || result.worst_tensor.empty()) {
        result.max_relative_error = err;
        result.worst_tensor = TensorName(id);
      }
      ++result.coordinates_checked;
    }
  }
  return result;
}

}  // namespace prunemem
