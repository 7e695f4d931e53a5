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

#ifndef PRUNEMEM_AUDIT_H_
#define PRUNEMEM_AUDIT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "prunemem/corpus.h"
#include "prunemem/model.h"
#include "prunemem/pruning.h"

namespace prunemem {

struct AuditSpec {
  std::vector<size_t> context_lengths = {4, 8, 16, 32};
  size_t suffix_len = 16;
  // Background records sampled per variant; canaries are always audited in
  // full.
  size_t n_samples = 256;
  uint64_t seed = 0;

  // Every k >= 1 and k + suffix_len <= seq_len.
  absl::Status Validate(size_t seq_len) const;
  friend bool operator==(const AuditSpec&, const AuditSpec&) = default;
};

enum class ExtractionStatus { kEvaluated, kSkippedTooShort };

struct ExtractionResult {
  size_t record_id = 0;
  size_t k = 0;
  ExtractionStatus status = ExtractionStatus::kEvaluated;
  bool extracted = false;
  // Leading suffix tokens reproduced before the first mismatch.
  size_t matched_prefix_len = 0;
};

// Prompts with the first k tokens and greedily decodes suffix_len tokens;
// extracted iff all of them equal the record's continuation. Evaluated with a
// single teacher-forced forward pass: up to the first mismatch the greedy
// continuation and the true continuation are the same input, and each logits
// row is independent of later rows. Records shorter than k + suffix_len come
// back with kSkippedTooShort.
absl::StatusOr<ExtractionResult> IsExtractable(const ModelParams& params,
                                               const SequenceRecord& record, size_t k,
                                               size_t suffix_len, size_t record_id = 0);

struct MemorizationCell {
  size_t k = 0;
  size_t extracted = 0;
  size_t audited = 0;  // excludes skipped records
  size_t skipped = 0;
  double fraction = 0.0;  // extracted / audited

  friend bool operator==(const MemorizationCell&, const MemorizationCell&) = default;
};

struct MemorizationResult {
  std::vector<MemorizationCell> cells;  // one per context length, spec order
  std::vector<size_t> sample_ids;       // sorted record indices audited
  size_t requested = 0;
  std::vector<std::string> warnings;
};

// Audits n_samples records drawn without replacement from `dataset` using
// spec.seed. A request larger than the dataset is clamped with a warning.
absl::StatusOr<MemorizationResult> MemorizedFraction(const ModelParams& params,
                                                     std::span<const SequenceRecord> dataset,
                                                     const AuditSpec& spec);

// Sum of next-token NLLs (nats) over positions 1..len-1.
absl::StatusOr<double> SequenceNllSum(const ModelParams& params, std::span<const Token> seq);

// exp(token-weighted mean NLL) over the held-out set.
absl::StatusOr<double> Perplexity(const ModelParams& params,
                                  std::span<const TokenSequence> heldout);

// Worker threads for audits: PRUNEMEM_THREADS if set and positive, else the
// hardware concurrency.
size_t AuditThreadCount();

// ---------------------------------------------------------------------------
// Experiment grid

inline constexpr char kBaselineName[] = "baseline";

enum class AuditSubset { kCanary, kBackground };

struct SubsetResult {
  size_t population = 0;
  size_t sampled = 0;
  std::vector<MemorizationCell> cells;

  friend bool operator==(const SubsetResult&, const SubsetResult&) = default;
};

struct VariantResult {
  std::string strategy;  // kBaselineName or a StrategyName()
  size_t level = 0;      // 0 for the baseline, else 1-based pruning level
  bool present = false;  // false when the checkpoint was missing
  std::optional<double> perplexity;
  SubsetResult canary;
  SubsetResult background;

  const SubsetResult& subset(AuditSubset s) const {
    return s == AuditSubset::kCanary ? canary : background;
  }
  friend bool operator==(const VariantResult&, const VariantResult&) = default;
};

struct AuditReport {
  std::string model;
  std::vector<size_t> context_lengths;
  size_t suffix_len = 0;
  std::vector<double> levels;           // pruning fraction per level
  std::vector<std::string> strategies;  // column order, baseline excluded
  std::vector<VariantResult> variants;  // baseline first
  std::vector<std::string> warnings;
  std::vector<std::string> footnotes;

  // The baseline matches any level.
  const VariantResult* Find(const std::string& strategy, size_t level) const;
  std::optional<double> Fraction(AuditSubset subset, const std::string& strategy, size_t level,
                                 size_t k) const;
  // Mean over context lengths of one level's cells.
  std::optional<double> LevelAverage(AuditSubset subset, const std::string& strategy,
                                     size_t level) const;
  // Mean over levels of LevelAverage. Absent levels are skipped.
  std::optional<double> Average(AuditSubset subset, const std::string& strategy) const;
  std::optional<double> Perplexity(const std::string& strategy, size_t level) const;
  std::optional<double> AveragePerplexity(const std::string& strategy) const;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

struct AuditVariant {
  std::string strategy;
  size_t level = 0;
  std::optional<ModelParams> params;  // nullopt marks a missing checkpoint
};

struct AuditMatrixInputs {
  std::string model;
  std::vector<double> levels;
  std::vector<PruneStrategy> strategies;
  std::span<const SequenceRecord> records;
  std::span<const TokenSequence> heldout;
  AuditSpec spec;
  std::vector<std::string> footnotes;
};

// Audits every variant on the same canary set and the same sampled
// background set, and measures held-out perplexity.
absl::StatusOr<AuditReport> AuditMatrix(std::span<const AuditVariant> variants,
                                        const AuditMatrixInputs& inputs);

}  // namespace prunemem

#endif  // PRUNEMEM_AUDIT_H_
