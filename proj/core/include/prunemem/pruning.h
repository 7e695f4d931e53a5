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

#ifndef PRUNEMEM_PRUNING_H_
#define PRUNEMEM_PRUNING_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "prunemem/model.h"

namespace prunemem {

enum class PruneStrategy {
  kLayerWise,                 // each linear tensor cut at its own threshold
  kGlobalAllLinear,           // one threshold over every linear tensor
  kGlobalAttentionOnly,       // one threshold over q, k, v, o; MLPs untouched
  kGlobalFirstQuarterLayers,  // one threshold over layers [0, ceil(L/4))
  kGlobalLastQuarterLayers,   // one threshold over layers [L - ceil(L/4), L)
};

inline constexpr std::array<PruneStrategy, 5> kAllStrategies = {
    PruneStrategy::kLayerWise, PruneStrategy::kGlobalAllLinear,
    PruneStrategy::kGlobalAttentionOnly, PruneStrategy::kGlobalFirstQuarterLayers,
    PruneStrategy::kGlobalLastQuarterLayers};

// "layer-wise", "global", "global-attention", "first-quarter", "last-quarter".
absl::string_view StrategyName(PruneStrategy strategy);
// Report column headings: "Layer-wise", "Global", "Attention", "First 25%",
// "Last 25%".
absl::string_view StrategyLabel(PruneStrategy strategy);
absl::StatusOr<PruneStrategy> ParseStrategy(absl::string_view name);

struct PruneSpec {
  PruneStrategy strategy = PruneStrategy::kLayerWise;
  double fraction = 0.0;  // share of in-scope weights zeroed, in [0, 1)

  absl::Status Validate() const;
};

// ceil(n_layers / 4): the layer count of the selective quarter scopes.
size_t QuarterLayerCount(size_t n_layers);

// Tensors the strategy may zero, in canonical order. Embeddings and layer-norm
// parameters are never included.
std::vector<TensorId> PrunableScope(const ModelParams& params, PruneStrategy strategy);

// floor(fraction * n).
size_t DropCount(double fraction, size_t n);

struct MagnitudeCut {
  // Largest magnitude among dropped entries; 0 when nothing is dropped.
  double threshold = 0.0;
  size_t drop_count = 0;
  // Sorted positions of the dropped entries.
  std::vector<size_t> dropped;
};

// Selects the floor(fraction * N) entries with the smallest |value|. Ties are
// broken by position, so the selection is a prefix of one total order and is
// nested across fractions.
absl::StatusOr<MagnitudeCut> MagnitudeThreshold(std::span<const double> values, double fraction);

// Per-tensor keep map over a scope; 1 = weight kept.
struct TensorMask {
  TensorId id;
  size_t rows = 0;
  size_t cols = 0;
  std::vector<uint8_t> keep;

  friend bool operator==(const TensorMask&, const TensorMask&) = default;
};

struct SparsityMask {
  PruneStrategy strategy = PruneStrategy::kLayerWise;
  double fraction = 0.0;
  std::vector<TensorMask> tensors;

  // Zeroes dropped weights. Applying twice equals applying once.
  absl::Status Apply(ModelParams& params) const;
  size_t DroppedCount() const;
  friend bool operator==(const SparsityMask&, const SparsityMask&) = default;
};

struct TensorSparsity {
  std::string name;
  size_t size = 0;
  size_t zeros = 0;
  double fraction = 0.0;
};

struct SparsityReport {
  std::vector<TensorSparsity> tensors;  // scope tensors
  size_t scope_size = 0;
  size_t scope_zeros = 0;
  double scope_fraction = 0.0;
  size_t total_size = 0;  // every parameter of the model
  size_t total_zeros = 0;
  double global_fraction = 0.0;
};

// Exact zero counts over `scope` and over the whole model.
SparsityReport ComputeSparsityReport(const ModelParams& params, std::span<const TensorId> scope);

struct PruneResult {
  ModelParams params;
  SparsityMask mask;
  SparsityReport report;
};

// Unstructured magnitude pruning. The input is not modified; tensors outside
// the scope are copied bit for bit.
absl::StatusOr<PruneResult> Prune(const ModelParams& params, const PruneSpec& spec);

// {"strategy", "fraction", "scope_size", "scope_zeros", "scope_fraction",
//  "total_size", "total_zeros", "global_fraction", "tensors": [...]}
std::string SparsityReportToJson(const SparsityReport& report, const PruneSpec& spec);

// Mask file: magic "PMEMMASK", u32 version, u32 header length, JSON manifest
// {"strategy", "fraction", "tensors": [{"name", "rows", "cols", "offset",
// "kept"}]}, then each tensor's keep bits packed LSB-first and padded to a
// whole byte; "offset" is relative to the end of the header.
inline constexpr char kMaskMagic[8] = {'P', 'M', 'E', 'M', 'M', 'A', 'S', 'K'};
inline constexpr uint32_t kMaskVersion = 1;

std::string SerializeMask(const SparsityMask& mask);
absl::StatusOr<SparsityMask> ParseMask(absl::string_view bytes);

}  // namespace prunemem

#endif  // PRUNEMEM_PRUNING_H_
