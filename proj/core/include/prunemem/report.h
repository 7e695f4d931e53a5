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

#ifndef PRUNEMEM_REPORT_H_
#define PRUNEMEM_REPORT_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "prunemem/audit.h"

namespace prunemem {

// Aligned plain-text tables:
//   * "Model-wise Average Fraction of Memorized Data": one row per model,
//     columns Baseline + one per strategy, averaged over k then levels
//     (canaries, then background);
//   * "Average perplexity values across both pruning levels";
//   * "Perplexity values for a lower/higher level of pruning";
//   * "Fraction of Memorization for <model>": one row per context length,
//     split into Lesser Pruning / Higher Pruning sections (canaries, then
//     background).
std::string RenderTextReport(const AuditReport& report);

// Header "model,strategy,level,k,fraction,perplexity"; canary cells only.
// Baseline rows are repeated under every level. Absent values are empty.
std::string RenderCsvReport(const AuditReport& report);

struct GridValue {
  std::optional<double> fraction;
  std::optional<double> perplexity;
  friend bool operator==(const GridValue&, const GridValue&) = default;
};
// (model, strategy, level, k) -> values.
using ReportGrid = std::map<std::tuple<std::string, std::string, size_t, size_t>, GridValue>;

ReportGrid GridFromReport(const AuditReport& report);
absl::StatusOr<ReportGrid> ParseCsvReport(absl::string_view csv);

std::string ReportToJson(const AuditReport& report);
absl::StatusOr<AuditReport> ReportFromJson(absl::string_view json);

}  // namespace prunemem

#endif  // PRUNEMEM_REPORT_H_
