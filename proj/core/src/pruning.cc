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

#include "prunemem/pruning.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "json_internal.h"

namespace prunemem {

absl::string_view StrategyName(PruneStrategy strategy) {
  switch (strategy) {
    case PruneStrategy::kLayerWise: return "layer-wise";
    case PruneStrategy::kGlobalAllLinear: return "global";
    case PruneStrategy::kGlobalAttentionOnly: return "global-attention";
    case PruneStrategy::kGlobalFirstQuarterLayers: return "first-quarter";
    case PruneStrategy::kGlobalLastQuarterLayers: return "last-quarter";
  }
  return "?";
}

absl::string_view StrategyLabel(PruneStrategy strategy) {
  switch (strategy) {
    case PruneStrategy::kLayerWise: return "Layer-wise";
    case PruneStrategy::kGlobalAllLinear: return "Global";
    case PruneStrategy::kGlobalAttentionOnly: return "Attention";
    case PruneStrategy::kGlobalFirstQuarterLayers: return "First 25%";
    case PruneStrategy::kGlobalLastQuarterLayers: return "Last 25%";
  }
  return "?";
}

absl::StatusOr<PruneStrategy> ParseStrategy(absl::string_view name) {
  for (PruneStrategy s : kAllStrategies) {
    if (name == StrategyName(s)) return s;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown strategy '", name,
      "' (want layer-wise|global|global-attention|first-quarter|last-quarter)"));
}

absl::Status PruneSpec::Validate() const {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("prune fraction ", fraction, " must lie in [0, 1)"));
  }
  return absl::OkStatus();
}

size_t QuarterLayerCount(size_t n_layers) { return (n_layers + 3) / 4; }

std::vector<TensorId> PrunableScope(const ModelParams& params, PruneStrategy strategy) {
  const size_t n_layers = params.layers.size();
  size_t first = 0;
  size_t last = n_layers;
  if (strategy == PruneStrategy::kGlobalFirstQuarterLayers) {
    last = QuarterLayerCount(n_layers);
  } else if (strategy == PruneStrategy::kGlobalLastQuarterLayers) {
    first = n_layers - QuarterLayerCount(n_layers);
  }
  const bool attention_only = strategy == PruneStrategy::kGlobalAttentionOnly;
  std::vector<TensorId> scope;
  for (TensorId id : params.TensorIds()) {
    if (!IsLinear(id.role)) continue;
    const size_t layer = static_cast<size_t>(id.layer);
    if (layer < first || layer >= last) continue;
    if (attention_only && !IsAttention(id.role)) continue;
    scope.push_back(id);
  }
  return scope;
}

size_t DropCount(double fraction, size_t n) {
  const double d = std::floor(fraction * static_cast<double>(n));
  if (d <= 0.0) return 0;
  return std::min(n, static_cast<size_t>(d));
}

absl::StatusOr<MagnitudeCut> MagnitudeThreshold(std::span<const double> values, double fraction) {
  if (values.empty()) return absl::InvalidArgumentError("magnitude threshold over an empty scope");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat("fraction ", fraction, " must lie in [0, 1)"));
  }
  MagnitudeCut cut;
  cut.drop_count = DropCount(fraction, values.size());
  if (cut.drop_count == 0) return cut;

  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto less = [&](size_t a, size_t b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    return ma < mb || (ma == mb && a < b);
  };
  const auto nth = order.begin() + static_cast<std::ptrdiff_t>(cut.drop_count - 1);
  std::nth_element(order.begin(), nth, order.end(), less);
  cut.threshold = std::abs(values[*nth]);
  cut.dropped.assign(order.begin(), nth + 1);
  std::sort(cut.dropped.begin(), cut.dropped.end());
  return cut;
}

absl::Status SparsityMask::Apply(ModelParams& params) const {
  for (const TensorMask& m : tensors) {
    if (m.id.layer >= static_cast<int>(params.layers.size())) {
      return absl::InvalidArgumentError(absl::StrCat("mask tensor ", TensorName(m.id),
                                                     " is not in the model"));
    }
    Tensor2D& t = params.tensor(m.id);
    if (t.rows() != m.rows || t.cols() != m.cols || m.keep.size() != t.size()) {
      return absl::InvalidArgumentError(absl::StrCat("mask shape mismatch for ", TensorName(m.id)));
    }
    for (size_t i = 0; i < t.size(); ++i) {
      if (!m.keep[i]) t.data()[i] = 0.0;
    }
  }
  return absl::OkStatus();
}

size_t SparsityMask::DroppedCount() const {
  size_t n = 0;
  for (const TensorMask& m : tensors) n += static_cast<size_t>(std::count(m.keep.begin(), m.keep.end(), 0));
  return n;
}

SparsityReport ComputeSparsityReport(const ModelParams& params, std::span<const TensorId> scope) {
  auto count_zeros = [](const Tensor2D& t) {
    return static_cast<size_t>(
        std::count_if(t.values().begin(), t.values().end(), [](double v) { return v == 0.0; }));
  };
  SparsityReport report;
  for (TensorId id : scope) {
    const Tensor2D& t = params.tensor(id);
    TensorSparsity ts{TensorName(id), t.size(), count_zeros(t), 0.0};
    ts.fraction = ts.size ? static_cast<double>(ts.zeros) / static_cast<double>(ts.size) : 0.0;
    report.scope_size += ts.size;
    report.scope_zeros += ts.zeros;
    report.tensors.push_back(std::move(ts));
  }
  for (TensorId id : params.TensorIds()) {
    const Tensor2D& t = params.tensor(id);
    report.total_size += t.size();
    report.total_zeros += count_zeros(t);
  }
  if (report.scope_size) {
    report.scope_fraction =
        static_cast<double>(report.scope_zeros) / static_cast<double>(report.scope_size);
  }
  if (report.total_size) {
    report.global_fraction =
        static_cast<double>(report.total_zeros) / static_cast<double>(report.total_size);
  }
  return report;
}

absl::StatusOr<PruneResult> Prune(const ModelParams& params, const PruneSpec& spec) {
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  const std::vector<TensorId> scope = PrunableScope(params, spec.strategy);
  if (scope.empty()) return absl::InvalidArgumentError("pruning scope is empty");

  PruneResult result{params, SparsityMask{spec.strategy, spec.fraction, {}}, {}};
  for (TensorId id : scope) {
    const Tensor2D& t = params.tensor(id);
    result.mask.tensors.push_back(TensorMask{id, t.rows(), t.cols(), std::vector<uint8_t>(t.size(), 1)});
  }

  if (spec.strategy == PruneStrategy::kLayerWise) {
    for (TensorMask& m : result.mask.tensors) {
      absl::StatusOr<MagnitudeCut> cut = MagnitudeThreshold(params.tensor(m.id).values(), spec.fraction);
      if (!cut.ok()) return cut.status();
      for (size_t i : cut->dropped) m.keep[i] = 0;
    }
  } else {
    // One threshold over the scope concatenated in canonical order, so flat
    // position order is (tensor index, offset) order.
    std::vector<double> flat;
    std::vector<size_t> starts;
    for (TensorId id : scope) {
      const Tensor2D& t = params.tensor(id);
      starts.push_back(flat.size());
      flat.insert(flat.end(), t.values().begin(), t.values().end());
    }
    absl::StatusOr<MagnitudeCut> cut = MagnitudeThreshold(flat, spec.fraction);
    if (!cut.ok()) return cut.status();
    size_t tensor = 0;
    for (size_t pos : cut->dropped) {
      while (tensor + 1 < starts.size() && pos >= starts[tensor + 1]) ++tensor;
      result.mask.tensors[tensor].keep[pos - starts[tensor]] = 0;
    }
  }

  if (absl::Status s = result.mask.Apply(result.params); !s.ok()) return s;
  result.report = ComputeSparsityReport(result.params, scope);
  return result;
}

std::string SparsityReportToJson(const SparsityReport& report, const PruneSpec& spec) {
  using internal::Json;
  Json tensors = Json::array();
  for (const TensorSparsity& t : report.tensors) {
    tensors.push_back(Json{{"name", t.name}, {"size", t.size}, {"zeros", t.zeros}, {"fraction", t.fraction}});
  }
  Json j{{"strategy", std::string(StrategyName(spec.strategy))},
         {"fraction", spec.fraction},
         {"scope_size", report.scope_size},
         {"scope_zeros", report.scope_zeros},
         {"scope_fraction", report.scope_fraction},
         {"total_size", report.total_size},
         {"total_zeros", report.total_zeros},
         {"global_fraction", report.global_fraction},
         {"tensors", tensors}};
  return j.dump(1) + "\n";
}

}  // namespace prunemem
