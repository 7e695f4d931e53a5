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

#include "prunemem/audit.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "forward_internal.h"
#include "prunemem/rng.h"

namespace prunemem {
namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index writes its
// own slot, so results do not depend on scheduling.
template <typename Fn>
void ParallelFor(size_t n, size_t threads, Fn fn) {
  threads = std::max<size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (std::thread& t : workers) t.join();
}

// Scores the suffix starting at k against already computed logits. Rows of
// `logits` depend only on tokens up to their position, so one pass over the
// longest window serves every shorter k.
ExtractionResult ScoreFromLogits(const Tensor2D& logits, const SequenceRecord& record, size_t k,
                                 size_t suffix_len, size_t record_id) {
  ExtractionResult r{record_id, k, ExtractionStatus::kEvaluated, false, 0};
  if (record.tokens.size() < k + suffix_len) {
    r.status = ExtractionStatus::kSkippedTooShort;
    return r;
  }
  for (size_t i = 0; i < suffix_len; ++i) {
    const size_t predicted = ArgmaxLowestIndex(logits.row(k - 1 + i));
    if (predicted != static_cast<size_t>(record.tokens[k + i])) break;
    ++r.matched_prefix_len;
  }
  r.extracted = r.matched_prefix_len == suffix_len;
  return r;
}

// One forward pass over the longest window that fits the record.
std::vector<ExtractionResult> ExtractAllK(const ModelParams& params, const SequenceRecord& record,
                                          std::span<const size_t> ks, size_t suffix_len,
                                          size_t record_id) {
  size_t window = 0;
  for (size_t k : ks) {
    if (record.tokens.size() >= k + suffix_len) window = std::max(window, k + suffix_len - 1);
  }
  internal::ForwardCache& cache = internal::ThreadForwardCache();
  if (window > 0) {
    internal::RunForward(params, std::span<const Token>(record.tokens.data(), window), cache);
  }
  std::vector<ExtractionResult> out;
  out.reserve(ks.size());
  for (size_t k : ks) out.push_back(ScoreFromLogits(cache.logits, record, k, suffix_len, record_id));
  return out;
}

double NllSumUnchecked(const ModelParams& params, std::span<const Token> seq) {
  internal::ForwardCache& cache = internal::ThreadForwardCache();
  internal::RunForward(params, seq, cache);
  double total = 0.0;
  for (size_t t = 1; t < seq.size(); ++t) {
    std::vector<double> lp = LogSoftmax(cache.logits.row(t - 1));
    total -= lp[static_cast<size_t>(seq[t])];
  }
  return total;
}

absl::Status ValidateRecordTokens(const ModelConfig& config, const SequenceRecord& r) {
  // Tokens past the audited window are never fed to the model, but ids must
  // still be in range.
  for (Token t : r.tokens) {
    if (t < 0 || static_cast<size_t>(t) >= config.vocab_size) {
      return absl::InvalidArgumentError(absl::StrCat("token id ", t, " outside vocabulary"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckWindow(const ModelConfig& config, size_t k, size_t suffix_len) {
  if (suffix_len == 0) return absl::InvalidArgumentError("suffix_len must be >= 1");
  if (k == 0) return absl::InvalidArgumentError("context length k must be >= 1");
  if (k + suffix_len - 1 > config.max_seq_len) {
    return absl::OutOfRangeError(absl::StrCat("k + suffix_len = ", k + suffix_len,
                                              " does not fit max_seq_len ", config.max_seq_len));
  }
  return absl::OkStatus();
}

std::optional<double> Mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

absl::Status AuditSpec::Validate(size_t seq_len) const {
  if (context_lengths.empty()) return absl::InvalidArgumentError("no context lengths to audit");
  if (suffix_len == 0) return absl::InvalidArgumentError("suffix_len must be >= 1");
  if (n_samples == 0) return absl::InvalidArgumentError("n_samples must be >= 1");
  for (size_t k : context_lengths) {
    if (k == 0) return absl::InvalidArgumentError("context lengths must be >= 1");
    if (k + suffix_len > seq_len) {
      return absl::InvalidArgumentError(absl::StrCat("context length ", k, " + suffix ", suffix_len,
                                                     " exceeds sequence length ", seq_len));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<ExtractionResult> IsExtractable(const ModelParams& params,
                                               const SequenceRecord& record, size_t k,
                                               size_t suffix_len, size_t record_id) {
  if (absl::Status s = CheckWindow(params.config, k, suffix_len); !s.ok()) return s;
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  if (absl::Status s = ValidateRecordTokens(params.config, record); !s.ok()) return s;
  const size_t ks[] = {k};
  return ExtractAllK(params, record, ks, suffix_len, record_id).front();
}

absl::StatusOr<MemorizationResult> MemorizedFraction(const ModelParams& params,
                                                     std::span<const SequenceRecord> dataset,
                                                     const AuditSpec& spec) {
  if (dataset.empty()) return absl::InvalidArgumentError("audit dataset is empty");
  if (spec.n_samples == 0) return absl::InvalidArgumentError("n_samples must be >= 1");
  if (spec.context_lengths.empty()) return absl::InvalidArgumentError("no context lengths to audit");
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  for (size_t k : spec.context_lengths) {
    if (absl::Status s = CheckWindow(params.config, k, spec.suffix_len); !s.ok()) return s;
  }
  for (const SequenceRecord& r : dataset) {
    if (absl::Status s = ValidateRecordTokens(params.config, r); !s.ok()) return s;
  }

  MemorizationResult result;
  result.requested = spec.n_samples;
  if (spec.n_samples > dataset.size()) {
    result.warnings.push_back(absl::StrCat("n_samples ", spec.n_samples, " clamped to dataset size ",
                                           dataset.size()));
  }
  Rng rng(spec.seed);
  result.sample_ids = rng.SampleWithoutReplacement(dataset.size(), spec.n_samples);
  std::sort(result.sample_ids.begin(), result.sample_ids.end());

  const size_t n_k = spec.context_lengths.size();
  std::vector<std::vector<ExtractionResult>> outcomes(result.sample_ids.size());
  ParallelFor(outcomes.size(), AuditThreadCount(), [&](size_t s) {
    const size_t id = result.sample_ids[s];
    outcomes[s] = ExtractAllK(params, dataset[id], spec.context_lengths, spec.suffix_len, id);
  });

  for (size_t ki = 0; ki < n_k; ++ki) {
    MemorizationCell cell;
    cell.k = spec.context_lengths[ki];
    for (size_t s = 0; s < result.sample_ids.size(); ++s) {
      const ExtractionResult& r = outcomes[s][ki];
      if (r.status == ExtractionStatus::kSkippedTooShort) {
        ++cell.skipped;
        continue;
      }
      ++cell.audited;
      if (r.extracted) ++cell.extracted;
    }
    cell.fraction = cell.audited ? static_cast<double>(cell.extracted) / static_cast<double>(cell.audited) : 0.0;
    if (cell.skipped) {
      result.warnings.push_back(absl::StrCat(cell.skipped, " records too short for k=", cell.k));
    }
    result.cells.push_back(cell);
  }
  return result;
}

absl::StatusOr<double> SequenceNllSum(const ModelParams& params, std::span<const Token> seq) {
  if (seq.size() < 2) return absl::InvalidArgumentError("sequence needs at least 2 tokens");
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  if (absl::Status s = ValidateTokens(params.config, seq); !s.ok()) return s;
  return NllSumUnchecked(params, seq);
}

absl::StatusOr<double> Perplexity(const ModelParams& params,
                                  std::span<const TokenSequence> heldout) {
  if (heldout.empty()) return absl::InvalidArgumentError("held-out set is empty");
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  size_t tokens = 0;
  for (const TokenSequence& seq : heldout) {
    if (seq.size() < 2) return absl::InvalidArgumentError("held-out sequence shorter than 2");
    if (absl::Status s = ValidateTokens(params.config, seq); !s.ok()) return s;
    tokens += seq.size() - 1;
  }
  std::vector<double> sums(heldout.size());
  ParallelFor(heldout.size(), AuditThreadCount(),
              [&](size_t i) { sums[i] = NllSumUnchecked(params, heldout[i]); });
  double total = 0.0;
  for (double s : sums) total += s;
  return std::exp(total / static_cast<double>(tokens));
}

size_t AuditThreadCount() {
  if (const char* env = std::getenv("PRUNEMEM_THREADS")) {
    size_t n = 0;
    if (absl::SimpleAtoi(env, &n) && n > 0) return n;
  }
  return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

const VariantResult* AuditReport::Find(const std::string& strategy, size_t level) const {
  for (const VariantResult& v : variants) {
    if (v.strategy != strategy) continue;
    if (strategy == kBaselineName || v.level == level) return &v;
  }
  return nullptr;
}

std::optional<double> AuditReport::Fraction(AuditSubset subset, const std::string& strategy,
                                            size_t level, size_t k) const {
  const VariantResult* v = Find(strategy, level);
  if (v == nullptr || !v->present) return std::nullopt;
  for (const MemorizationCell& c : v->subset(subset).cells) {
    if (c.k == k && c.audited > 0) return c.fraction;
  }
  return std::nullopt;
}

std::optional<double> AuditReport::LevelAverage(AuditSubset subset, const std::string& strategy,
                                                size_t level) const {
  std::vector<double> xs;
  for (size_t k : context_lengths) {
    if (std::optional<double> f = Fraction(subset, strategy, level, k)) xs.push_back(*f);
  }
  return Mean(xs);
}

std::optional<double> AuditReport::Average(AuditSubset subset, const std::string& strategy) const {
  std::vector<double> xs;
  for (size_t level = 1; level <= levels.size(); ++level) {
    if (std::optional<double> f = LevelAverage(subset, strategy, level)) xs.push_back(*f);
  }
  return Mean(xs);
}

std::optional<double> AuditReport::Perplexity(const std::string& strategy, size_t level) const {
  const VariantResult* v = Find(strategy, level);
  if (v == nullptr || !v->present) return std::nullopt;
  return v->perplexity;
}

std::optional<double> AuditReport::AveragePerplexity(const std::string& strategy) const {
  std::vector<double> xs;
  for (size_t level = 1; level <= levels.size(); ++level) {
    if (std::optional<double> p = Perplexity(strategy, level)) xs.push_back(*p);
  }
  return Mean(xs);
}

absl::StatusOr<AuditReport> AuditMatrix(std::span<const AuditVariant> variants,
                                        const AuditMatrixInputs& inputs) {
  if (variants.empty()) return absl::InvalidArgumentError("audit needs at least one variant");
  if (inputs.records.empty()) return absl::InvalidArgumentError("audit dataset is empty");

  AuditReport report;
  report.model = inputs.model;
  report.context_lengths = inputs.spec.context_lengths;
  report.suffix_len = inputs.spec.suffix_len;
  report.levels = inputs.levels;
  for (PruneStrategy s : inputs.strategies) report.strategies.emplace_back(StrategyName(s));
  report.footnotes = inputs.footnotes;

  const std::vector<SequenceRecord> canaries = SelectRecords(inputs.records, true);
  const std::vector<SequenceRecord> background = SelectRecords(inputs.records, false);
  AuditSpec canary_spec = inputs.spec;
  canary_spec.n_samples = canaries.size();

  auto audit_subset = [&](const ModelParams& params, const std::vector<SequenceRecord>& records,
                          const AuditSpec& spec, const std::string& label,
                          SubsetResult& out) -> absl::Status {
    out.population = records.size();
    if (records.empty()) return absl::OkStatus();
    absl::StatusOr<MemorizationResult> m = MemorizedFraction(params, records, spec);
    if (!m.ok()) return m.status();
    out.sampled = m->sample_ids.size();
    out.cells = m->cells;
    for (const std::string& w : m->warnings) report.warnings.push_back(absl::StrCat(label, ": ", w));
    return absl::OkStatus();
  };

  for (const AuditVariant& variant : variants) {
    VariantResult vr;
    vr.strategy = variant.strategy;
    vr.level = variant.level;
    const std::string label = variant.strategy == kBaselineName
                                  ? std::string(kBaselineName)
                                  : absl::StrCat(variant.strategy, "@L", variant.level);
    if (!variant.params.has_value()) {
      vr.present = false;
      vr.canary.population = canaries.size();
      vr.background.population = background.size();
      report.warnings.push_back(absl::StrCat(label, ": checkpoint missing, cells absent"));
      report.variants.push_back(std::move(vr));
      continue;
    }
    vr.present = true;
    const ModelParams& params = *variant.params;
    if (absl::Status s = audit_subset(params, canaries, canary_spec, label + " canary", vr.canary);
        !s.ok()) {
      return s;
    }
    if (absl::Status s =
            audit_subset(params, background, inputs.spec, label + " background", vr.background);
        !s.ok()) {
      return s;
    }
    if (!inputs.heldout.empty()) {
      absl::StatusOr<double> ppl = Perplexity(params, inputs.heldout);
      if (!ppl.ok()) return ppl.status();
      vr.perplexity = *ppl;
    }
    report.variants.push_back(std::move(vr));
  }
  return report;
}

}  // namespace prunemem
