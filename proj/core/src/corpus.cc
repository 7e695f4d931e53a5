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

#include "prunemem/corpus.h"

#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "json_internal.h"
#include "prunemem/rng.h"

namespace prunemem {
namespace {

using internal::Json;

enum SeedStream : uint64_t {
  kBackgroundStream = 1,
  kCanaryStream = 2,
  kHeldoutStream = 3,
  kShuffleStream = 4,
};

// Draws per record before generation is declared infeasible.
constexpr size_t kMaxAttemptsPerRecord = 1000;

TokenSequence UniformSequence(Rng& rng, size_t vocab, size_t len) {
  TokenSequence seq(len);
  for (Token& t : seq) t = static_cast<Token>(rng.UniformInt(vocab));
  return seq;
}

TokenSequence BackgroundSequence(const CorpusSpec& spec, Rng& rng) {
  if (spec.background == BackgroundKind::kUniform) {
    return UniformSequence(rng, spec.vocab_size, spec.seq_len);
  }
  const TokenSequence motif = UniformSequence(rng, spec.vocab_size, spec.motif_period);
  TokenSequence seq(spec.seq_len);
  for (size_t t = 0; t < spec.seq_len; ++t) {
    const double u = rng.UniformDouble();
    const Token noise = static_cast<Token>(rng.UniformInt(spec.vocab_size));
    seq[t] = u < spec.motif_noise ? noise : motif[t % spec.motif_period];
  }
  return seq;
}

TokenSequence Prefix(const TokenSequence& seq, size_t k) {
  return TokenSequence(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(k));
}

}  // namespace

absl::string_view BackgroundKindName(BackgroundKind kind) {
  return kind == BackgroundKind::kUniform ? "uniform" : "periodic";
}

absl::StatusOr<BackgroundKind> ParseBackgroundKind(absl::string_view name) {
  if (name == "uniform") return BackgroundKind::kUniform;
  if (name == "periodic") return BackgroundKind::kPeriodic;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown background kind '", name, "' (want uniform|periodic)"));
}

absl::Status CorpusSpec::Validate() const {
  if (vocab_size < 2) return absl::InvalidArgumentError("corpus vocab_size must be >= 2");
  if (seq_len < 2) return absl::InvalidArgumentError("corpus seq_len must be >= 2");
  if (n_canaries < 1) return absl::InvalidArgumentError("n_canaries must be >= 1");
  if (canary_dup < 1) return absl::InvalidArgumentError("canary_dup must be >= 1");
  if (unique_prefix_len > seq_len) {
    return absl::InvalidArgumentError("unique_prefix_len exceeds seq_len");
  }
  if (background == BackgroundKind::kPeriodic) {
    if (motif_period < 1 || motif_period > seq_len) {
      return absl::InvalidArgumentError("motif_period must be in [1, seq_len]");
    }
    if (!(motif_noise >= 0.0 && motif_noise <= 1.0)) {
      return absl::InvalidArgumentError("motif_noise must be in [0, 1]");
    }
  }
  // vocab^len must exceed the number of distinct sequences requested.
  const double needed = static_cast<double>(n_background + n_canaries + n_heldout);
  const double log_capacity = static_cast<double>(seq_len) * std::log(static_cast<double>(vocab_size));
  if (log_capacity < std::log(needed)) {
    return absl::ResourceExhaustedError(absl::StrCat("vocab_size ", vocab_size, "^", seq_len,
                                                     " cannot hold ", needed,
                                                     " unique sequences"));
  }
  const double prefix_capacity =
      static_cast<double>(unique_prefix_len) * std::log(static_cast<double>(vocab_size));
  if (unique_prefix_len > 0 &&
      prefix_capacity < std::log(static_cast<double>(n_background + n_canaries))) {
    return absl::ResourceExhaustedError(
        absl::StrCat("vocab_size ", vocab_size, "^", unique_prefix_len, " cannot hold ",
                     n_background + n_canaries, " distinct canary prefixes"));
  }
  return absl::OkStatus();
}

absl::StatusOr<Corpus> GenerateCorpus(const CorpusSpec& spec) {
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  Corpus corpus;
  std::set<TokenSequence> seen;
  std::set<TokenSequence> prefixes;

  Rng bg_rng(MixSeed(spec.seed, kBackgroundStream));
  size_t attempts = 0;
  while (corpus.records.size() < spec.n_background) {
    if (++attempts > kMaxAttemptsPerRecord * (spec.n_background + 1)) {
      return absl::ResourceExhaustedError("could not draw enough unique background sequences");
    }
    TokenSequence seq = BackgroundSequence(spec, bg_rng);
    if (!seen.insert(seq).second) continue;
    prefixes.insert(Prefix(seq, spec.unique_prefix_len));
    corpus.records.push_back({std::move(seq), false, 1});
  }

  Rng canary_rng(MixSeed(spec.seed, kCanaryStream));
  attempts = 0;
  size_t planted = 0;
  while (planted < spec.n_canaries) {
    if (++attempts > kMaxAttemptsPerRecord * (spec.n_canaries + 1)) {
      return absl::ResourceExhaustedError("could not draw canaries with unique prefixes");
    }
    TokenSequence seq = UniformSequence(canary_rng, spec.vocab_size, spec.seq_len);
    if (seen.count(seq)) continue;
    TokenSequence prefix = Prefix(seq, spec.unique_prefix_len);
    // A canary prefix may not collide with any other record's prefix.
    if (spec.unique_prefix_len > 0 && prefixes.count(prefix)) continue;
    seen.insert(seq);
    prefixes.insert(std::move(prefix));
    corpus.records.push_back({std::move(seq), true, spec.canary_dup});
    ++planted;
  }

  Rng heldout_rng(MixSeed(spec.seed, kHeldoutStream));
  attempts = 0;
  while (corpus.heldout.size() < spec.n_heldout) {
    if (++attempts > kMaxAttemptsPerRecord * (spec.n_heldout + 1)) {
      return absl::ResourceExhaustedError("could not draw enough held-out sequences");
    }
    TokenSequence seq = BackgroundSequence(spec, heldout_rng);
    if (!seen.insert(seq).second) continue;
    corpus.heldout.push_back(std::move(seq));
  }

  corpus.training_stream = BuildTrainingStream(corpus.records, spec.seed);
  return corpus;
}

std::vector<size_t> BuildTrainingStream(std::span<const SequenceRecord> records, uint64_t seed) {
  std::vector<size_t> stream;
  for (size_t i = 0; i < records.size(); ++i) {
    stream.insert(stream.end(), records[i].dup_count, i);
  }
  Rng rng(MixSeed(seed, kShuffleStream));
  rng.Shuffle(std::span<size_t>(stream));
  return stream;
}

absl::StatusOr<std::pair<TokenSequence, TokenSequence>> SplitPrefixSuffix(
    const SequenceRecord& record, size_t k) {
  if (k >= record.tokens.size()) {
    return absl::InvalidArgumentError(absl::StrCat("prefix length ", k,
                                                   " leaves no suffix in a sequence of length ",
                                                   record.tokens.size()));
  }
  const auto mid = record.tokens.begin() + static_cast<std::ptrdiff_t>(k);
  return std::make_pair(TokenSequence(record.tokens.begin(), mid),
                        TokenSequence(mid, record.tokens.end()));
}

std::string RecordsToJsonLines(std::span<const SequenceRecord> records) {
  std::string out;
  for (const SequenceRecord& r : records) {
    Json j{{"tokens", r.tokens}, {"is_canary", r.is_canary}, {"dup_count", r.dup_count}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

absl::StatusOr<std::vector<SequenceRecord>> RecordsFromJsonLines(absl::string_view text) {
  std::vector<SequenceRecord> records;
  size_t line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = absl::StrCat("record line ", line_no);
    absl::StatusOr<Json> j = internal::ParseJson(line, where);
    if (!j.ok()) return j.status();
    SequenceRecord r;
    internal::JsonObjectReader reader(*j, where);
    const Json* tokens = reader.Raw("tokens");
    reader.Bool("is_canary", r.is_canary);
    reader.Unsigned("dup_count", r.dup_count);
    if (absl::Status s = reader.Finish(); !s.ok()) return s;
    if (!tokens->is_array() || tokens->empty()) {
      return absl::InvalidArgumentError(absl::StrCat(where, ": tokens must be a non-empty array"));
    }
    for (const Json& t : *tokens) {
      if (!t.is_number_integer() || t.get<int64_t>() < 0 ||
          t.get<int64_t>() > std::numeric_limits<Token>::max()) {
        return absl::InvalidArgumentError(absl::StrCat(where, ": bad token id"));
      }
      r.tokens.push_back(t.get<Token>());
    }
    if (r.dup_count < 1) {
      return absl::InvalidArgumentError(absl::StrCat(where, ": dup_count must be >= 1"));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SequenceRecord> SelectRecords(std::span<const SequenceRecord> records, bool canaries) {
  std::vector<SequenceRecord> out;
  for (const SequenceRecord& r : records) {
    if (r.is_canary == canaries) out.push_back(r);
  }
  return out;
}

}  // namespace prunemem
