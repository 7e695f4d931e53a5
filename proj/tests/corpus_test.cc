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

#include <map>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace prunemem {
namespace {

CorpusSpec SmallSpec() {
  CorpusSpec s;
  s.vocab_size = 64;
  s.n_background = 200;
  s.seq_len = 24;
  s.n_canaries = 4;
  s.canary_dup = 32;
  s.seed = 7;
  s.unique_prefix_len = 4;
  s.n_heldout = 20;
  return s;
}

TEST(CorpusTest, SameSeedGivesByteIdenticalCorpora) {
  const Corpus a = *GenerateCorpus(SmallSpec());
  const Corpus b = *GenerateCorpus(SmallSpec());
  EXPECT_EQ(RecordsToJsonLines(a.records), RecordsToJsonLines(b.records));
  EXPECT_EQ(a.training_stream, b.training_stream);
  EXPECT_EQ(a.heldout, b.heldout);
  CorpusSpec other = SmallSpec();
  other.seed = 8;
  EXPECT_NE(RecordsToJsonLines(GenerateCorpus(other)->records), RecordsToJsonLines(a.records));
}

TEST(CorpusTest, StreamLengthIsBackgroundPlusDuplicatedCanaries) {
  const Corpus c = *GenerateCorpus(SmallSpec());
  EXPECT_EQ(c.records.size(), 204u);
  EXPECT_EQ(c.training_stream.size(), 200u + 4u * 32u);
  std::map<size_t, size_t> counts;
  for (size_t i : c.training_stream) ++counts[i];
  for (size_t i = 0; i < c.records.size(); ++i) {
    EXPECT_EQ(counts[i], c.records[i].is_canary ? 32u : 1u);
    EXPECT_EQ(c.records[i].dup_count, counts[i]);
    EXPECT_EQ(c.records[i].is_canary, i >= 200);
  }
}

TEST(CorpusTest, StreamIsShuffled) {
  const Corpus c = *GenerateCorpus(SmallSpec());
  EXPECT_FALSE(std::is_sorted(c.training_stream.begin(), c.training_stream.end()));
}

TEST(CorpusTest, RecordsDistinctAndHeldoutDisjoint) {
  for (BackgroundKind kind : {BackgroundKind::kUniform, BackgroundKind::kPeriodic}) {
    CorpusSpec spec = SmallSpec();
    spec.background = kind;
    const Corpus c = *GenerateCorpus(spec);
    std::set<TokenSequence> seen;
    for (const SequenceRecord& r : c.records) {
      EXPECT_EQ(r.tokens.size(), 24u);
      for (Token t : r.tokens) ASSERT_TRUE(t >= 0 && t < 64);
      EXPECT_TRUE(seen.insert(r.tokens).second);
    }
    EXPECT_EQ(c.heldout.size(), 20u);
    for (const TokenSequence& h : c.heldout) EXPECT_FALSE(seen.count(h));
  }
}

TEST(CorpusTest, CanaryPrefixesCollideWithNoOtherRecord) {
  // Brute-force pairwise comparison, independent of the generator's set.
  const Corpus c = *GenerateCorpus(SmallSpec());
  const size_t k = 4;
  for (size_t i = 0; i < c.records.size(); ++i) {
    if (!c.records[i].is_canary) continue;
    for (size_t j = 0; j < c.records.size(); ++j) {
      if (i == j) continue;
      EXPECT_FALSE(std::equal(c.records[i].tokens.begin(), c.records[i].tokens.begin() + k,
                              c.records[j].tokens.begin()))
          << "canary " << i << " shares its prefix with record " << j;
    }
  }
}

TEST(CorpusTest, PeriodicBackgroundMostlyRepeatsItsMotif) {
  CorpusSpec spec = SmallSpec();
  spec.background = BackgroundKind::kPeriodic;
  spec.motif_period = 8;
  spec.motif_noise = 0.25;
  const Corpus c = *GenerateCorpus(spec);
  size_t same = 0, total = 0;
  for (const SequenceRecord& r : c.records) {
    if (r.is_canary) continue;
    for (size_t t = 8; t < r.tokens.size(); ++t, ++total) same += r.tokens[t] == r.tokens[t - 8];
  }
  // Both positions survive with prob 0.75^2, plus chance agreement.
  const double frac = static_cast<double>(same) / static_cast<double>(total);
  EXPECT_NEAR(frac, 0.5625, 0.03);
}

TEST(CorpusTest, NoNoiseGivesExactTiling) {
  CorpusSpec spec = SmallSpec();
  spec.background = BackgroundKind::kPeriodic;
  spec.motif_noise = 0.0;
  spec.motif_period = 6;
  const Corpus c = *GenerateCorpus(spec);
  for (const SequenceRecord& r : c.records) {
    if (r.is_canary) continue;
    for (size_t t = 6; t < r.tokens.size(); ++t) ASSERT_EQ(r.tokens[t], r.tokens[t - 6]);
  }
}

TEST(CorpusTest, CapacityErrors) {
  CorpusSpec spec = SmallSpec();
  spec.vocab_size = 2;
  spec.seq_len = 4;
  EXPECT_EQ(GenerateCorpus(spec).status().code(), absl::StatusCode::kResourceExhausted);
  spec = SmallSpec();
  spec.vocab_size = 3;
  spec.unique_prefix_len = 2;
  EXPECT_EQ(GenerateCorpus(spec).status().code(), absl::StatusCode::kResourceExhausted);
}

TEST(CorpusTest, InvalidSpecsRejected) {
  CorpusSpec spec = SmallSpec();
  spec.n_canaries = 0;
  EXPECT_FALSE(spec.Validate().ok());
  spec = SmallSpec();
  spec.canary_dup = 0;
  EXPECT_FALSE(spec.Validate().ok());
  spec = SmallSpec();
  spec.unique_prefix_len = 25;
  EXPECT_FALSE(spec.Validate().ok());
  spec = SmallSpec();
  spec.background = BackgroundKind::kPeriodic;
  spec.motif_noise = 1.5;
  EXPECT_FALSE(spec.Validate().ok());
}

TEST(CorpusTest, BackgroundKindNames) {
  EXPECT_EQ(BackgroundKindName(BackgroundKind::kPeriodic), "periodic");
  EXPECT_EQ(*ParseBackgroundKind("uniform"), BackgroundKind::kUniform);
  EXPECT_FALSE(ParseBackgroundKind("gaussian").ok());
}

TEST(SplitTest, ZeroPrefixKeepsWholeSuffix) {
  const SequenceRecord r{{5, 6, 7, 8}, false, 1};
  const auto [p, s] = *SplitPrefixSuffix(r, 0);
  EXPECT_TRUE(p.empty());
  EXPECT_EQ(s, r.tokens);
}

TEST(SplitTest, LastPositionLeavesOneToken) {
  const SequenceRecord r{{5, 6, 7, 8}, false, 1};
  const auto [p, s] = *SplitPrefixSuffix(r, 3);
  EXPECT_THAT(p, ::testing::ElementsAre(5, 6, 7));
  EXPECT_THAT(s, ::testing::ElementsAre(8));
  EXPECT_EQ(SplitPrefixSuffix(r, 4).status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(SplitTest, CapitalOfGermanyAtKFive) {
  const std::vector<std::string> words = {"The", "capital", "of", "Germany", "is", "Berlin"};
  SequenceRecord r;
  for (size_t i = 0; i < words.size(); ++i) r.tokens.push_back(static_cast<Token>(i));
  const auto [p, s] = *SplitPrefixSuffix(r, 5);
  ASSERT_EQ(p.size(), 5u);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(words[p.front()], "The");
  EXPECT_EQ(words[p.back()], "is");
  EXPECT_EQ(words[s.front()], "Berlin");
}

TEST(SplitTest, ConcatenationReconstructsForEveryK) {
  const Corpus c = *GenerateCorpus(SmallSpec());
  for (size_t i = 0; i < c.records.size(); i += 17) {
    for (size_t k = 0; k < c.records[i].tokens.size(); ++k) {
      auto [p, s] = *SplitPrefixSuffix(c.records[i], k);
      p.insert(p.end(), s.begin(), s.end());
      ASSERT_EQ(p, c.records[i].tokens);
    }
  }
}

TEST(JsonLinesTest, RoundTrip) {
  const Corpus c = *GenerateCorpus(SmallSpec());
  const std::string text = RecordsToJsonLines(c.records);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 204);
  EXPECT_EQ(*RecordsFromJsonLines(text), c.records);
}

TEST(JsonLinesTest, LineFormat) {
  const std::vector<SequenceRecord> r = {{{1, 2, 3}, true, 32}};
  EXPECT_EQ(RecordsToJsonLines(r), "{\"dup_count\":32,\"is_canary\":true,\"tokens\":[1,2,3]}\n");
}

TEST(JsonLinesTest, MalformedLinesRejected) {
  EXPECT_FALSE(RecordsFromJsonLines("{\"tokens\": [1, 2], \"is_canary\": false}\n").ok());
  EXPECT_FALSE(RecordsFromJsonLines("not json\n").ok());
  EXPECT_FALSE(RecordsFromJsonLines("{\"tokens\": [], \"is_canary\": false, \"dup_count\": 1}\n").ok());
  EXPECT_FALSE(RecordsFromJsonLines("{\"tokens\": [1, -3], \"is_canary\": false, \"dup_count\": 1}\n").ok());
  EXPECT_FALSE(RecordsFromJsonLines("{\"tokens\": [1, 2], \"is_canary\": false, \"dup_count\": 0}\n").ok());
  EXPECT_TRUE(RecordsFromJsonLines("").ok());
}

TEST(JsonLinesTest, SelectRecordsFilters) {
  const Corpus c = *GenerateCorpus(SmallSpec());
  EXPECT_EQ(SelectRecords(c.records, true).size(), 4u);
  EXPECT_EQ(SelectRecords(c.records, false).size(), 200u);
}

}  // namespace
}  // namespace prunemem
