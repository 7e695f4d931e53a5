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

#ifndef PRUNEMEM_CORPUS_H_
#define PRUNEMEM_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "prunemem/model.h"

namespace prunemem {

// Distribution of the non-canary sequences.
//   kUniform:  every token i.i.d. uniform over the vocabulary.
//   kPeriodic: a uniform random motif of `motif_period` tokens tiled across
//              the sequence, each position independently replaced by a
//              uniform token with probability `motif_noise`. Predicting it
//              well requires attending back one period.
enum class BackgroundKind { kUniform, kPeriodic };

absl::string_view BackgroundKindName(BackgroundKind kind);
absl::StatusOr<BackgroundKind> ParseBackgroundKind(absl::string_view name);

struct CorpusSpec {
  size_t vocab_size = 256;
  size_t n_background = 4096;
  size_t seq_len = 64;
  size_t n_canaries = 8;
  size_t canary_dup = 32;
  uint64_t seed = 0;
  // Canary prefixes of this length are unique across all records; set to the
  // smallest audited context length.
  size_t unique_prefix_len = 4;
  BackgroundKind background = BackgroundKind::kUniform;
  size_t motif_period = 8;
  double motif_noise = 0.25;
  // Fresh sequences from the background distribution for perplexity.
  size_t n_heldout = 256;

  absl::Status Validate() const;
  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

struct SequenceRecord {
  TokenSequence tokens;
  bool is_canary = false;
  size_t dup_count = 1;

  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

struct Corpus {
  // Background records first, then canaries; all distinct.
  std::vector<SequenceRecord> records;
  // Indices into `records`: each record dup_count times, shuffled.
  std::vector<size_t> training_stream;
  // Never appears in `records`.
  std::vector<TokenSequence> heldout;
};

absl::StatusOr<Corpus> GenerateCorpus(const CorpusSpec& spec);

// Each record repeated dup_count times, shuffled with a stream derived from
// the corpus seed.
std::vector<size_t> BuildTrainingStream(std::span<const SequenceRecord> records,
                                        uint64_t seed);

// Splits into the first k tokens and the remainder. Requires k < length.
absl::StatusOr<std::pair<TokenSequence, TokenSequence>> SplitPrefixSuffix(
    const SequenceRecord& record, size_t k);

// One JSON object per line: {"tokens": [...], "is_canary": bool, "dup_count": n}.
std::string RecordsToJsonLines(std::span<const SequenceRecord> records);
absl::StatusOr<std::vector<SequenceRecord>> RecordsFromJsonLines(absl::string_view text);

std::vector<SequenceRecord> SelectRecords(std::span<const SequenceRecord> records,
                                          bool canaries);

}  // namespace prunemem

#endif  // PRUNEMEM_CORPUS_H_
