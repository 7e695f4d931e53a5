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

#include <cmath>
#include <numeric>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "prunemem/corpus.h"
#include "prunemem/trainer.h"
#include "test_util.h"

namespace prunemem {
namespace {

using ::prunemem::testing::FixtureReport;
using ::prunemem::testing::RandomParams;
using ::prunemem::testing::TinyConfig;

// Autoregressive reference: decode token by token and compare, without the
// library's teacher-forced shortcut.
ExtractionResult GreedyOracle(const ModelParams& p, const SequenceRecord& r, size_t k,
                              size_t suffix_len) {
  ExtractionResult out;
  out.k = k;
  const TokenSequence prefix(r.tokens.begin(), r.tokens.begin() + static_cast<std::ptrdiff_t>(k));
  const TokenSequence decoded = *GreedyDecode(p, prefix, suffix_len);
  while (out.matched_prefix_len < suffix_len && decoded[out.matched_prefix_len] == r.tokens[k + out.matched_prefix_len]) {
    ++out.matched_prefix_len;
  }
  out.extracted = out.matched_prefix_len == suffix_len;
  return out;
}

// A small model trained long enough to memorize some but not all records.
class TrainedModelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    CorpusSpec spec;
    spec.vocab_size = 32;
    spec.n_background = 48;
    spec.seq_len = 16;
    spec.n_canaries = 6;
    spec.canary_dup = 12;
    spec.unique_prefix_len = 2;
    spec.n_heldout = 16;
    spec.seed = 3;
    corpus_ = new Corpus(*GenerateCorpus(spec));
    std::vector<TokenSequence> stream;
    for (size_t i : corpus_->training_stream) stream.push_back(corpus_->records[i].tokens);
    ModelConfig c = TinyConfig(2, 32, 4);
    c.n_heads = 4;
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 30;
    cfg.batch_size = 8;
    params_ = new ModelParams(Train(*ModelParams::Initialize(c), stream, cfg)->params);
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete params_;
  }
  static Corpus* corpus_;
  static ModelParams* params_;
};
Corpus* TrainedModelTest::corpus_ = nullptr;
ModelParams* TrainedModelTest::params_ = nullptr;

TEST_F(TrainedModelTest, TeacherForcedMatchesAutoregressiveDecode) {
  size_t extracted = 0;
  for (size_t id = 0; id < corpus_->records.size(); ++id) {
    for (size_t k : {2, 4, 8}) {
      const ExtractionResult got = *IsExtractable(*params_, corpus_->records[id], k, 6, id);
      const ExtractionResult want = GreedyOracle(*params_, corpus_->records[id], k, 6);
      ASSERT_EQ(got.matched_prefix_len, want.matched_prefix_len) << "record " << id << " k " << k;
      ASSERT_EQ(got.extracted, want.extracted);
      EXPECT_EQ(got.extracted, got.matched_prefix_len == 6);
      EXPECT_EQ(got.record_id, id);
      extracted += got.extracted;
    }
  }
  // The comparison only means something if both outcomes occur.
  EXPECT_GT(extracted, 0u);
  EXPECT_LT(extracted, corpus_->records.size() * 3);
}

TEST_F(TrainedModelTest, MemorizedFractionEqualsRecount) {
  AuditSpec spec;
  spec.context_lengths = {2, 4, 8};
  spec.suffix_len = 6;
  spec.n_samples = 30;
  spec.seed = 5;
  const MemorizationResult m = *MemorizedFraction(*params_, corpus_->records, spec);
  ASSERT_EQ(m.sample_ids.size(), 30u);
  EXPECT_TRUE(std::is_sorted(m.sample_ids.begin(), m.sample_ids.end()));
  EXPECT_EQ(std::adjacent_find(m.sample_ids.begin(), m.sample_ids.end()), m.sample_ids.end());
  for (size_t ki = 0; ki < 3; ++ki) {
    size_t count = 0;
    for (size_t id : m.sample_ids)
      count += GreedyOracle(*params_, corpus_->records[id], spec.context_lengths[ki], 6).extracted;
    EXPECT_EQ(m.cells[ki].extracted, count);
    EXPECT_EQ(m.cells[ki].audited, 30u);
    EXPECT_DOUBLE_EQ(m.cells[ki].fraction, static_cast<double>(count) / 30.0);
  }
  const MemorizationResult again = *MemorizedFraction(*params_, corpus_->records, spec);
  EXPECT_EQ(again.cells, m.cells);
  EXPECT_EQ(again.sample_ids, m.sample_ids);
}

TEST_F(TrainedModelTest, MemorizedCanariesSaturate) {
  const std::vector<SequenceRecord> canaries = SelectRecords(corpus_->records, true);
  AuditSpec spec;
  spec.context_lengths = {2, 8};
  spec.suffix_len = 6;
  spec.n_samples = canaries.size();
  const MemorizationResult m = *MemorizedFraction(*params_, canaries, spec);
  // Twelve copies per epoch over 30 epochs memorize every canary.
  for (const MemorizationCell& c : m.cells) EXPECT_EQ(c.fraction, 1.0) << "k=" << c.k;
}

TEST_F(TrainedModelTest, SingleVariantGridEqualsMemorizedFraction) {
  AuditMatrixInputs in;
  in.model = "t";
  in.records = corpus_->records;
  in.spec.context_lengths = {4};
  in.spec.suffix_len = 6;
  in.spec.n_samples = 20;
  in.spec.seed = 9;
  const std::vector<AuditVariant> variants = {{kBaselineName, 0, *params_}};
  const AuditReport r = *AuditMatrix(variants, in);
  ASSERT_EQ(r.variants.size(), 1u);
  const std::vector<SequenceRecord> bg = SelectRecords(corpus_->records, false);
  const MemorizationResult m = *MemorizedFraction(*params_, bg, in.spec);
  EXPECT_EQ(r.variants[0].background.cells, m.cells);
  EXPECT_EQ(r.variants[0].background.sampled, 20u);
  EXPECT_EQ(r.variants[0].canary.sampled, 6u);
  EXPECT_FALSE(r.variants[0].perplexity.has_value());
}

TEST_F(TrainedModelTest, MissingVariantIsAbsentAndRunContinues) {
  AuditMatrixInputs in;
  in.model = "t";
  in.levels = {0.1};
  in.strategies = {PruneStrategy::kGlobalAllLinear};
  in.records = corpus_->records;
  in.heldout = corpus_->heldout;
  in.spec.context_lengths = {4};
  in.spec.suffix_len = 6;
  in.spec.n_samples = 8;
  const std::vector<AuditVariant> variants = {{kBaselineName, 0, *params_},
                                              {"global", 1, std::nullopt}};
  const AuditReport r = *AuditMatrix(variants, in);
  ASSERT_EQ(r.variants.size(), 2u);
  EXPECT_TRUE(r.variants[0].present);
  EXPECT_FALSE(r.variants[1].present);
  EXPECT_FALSE(r.Fraction(AuditSubset::kCanary, "global", 1, 4).has_value());
  EXPECT_THAT(r.warnings, ::testing::Contains(::testing::HasSubstr("global@L1")));
  EXPECT_EQ(*AuditMatrix(variants, in), r);
}

TEST(AuditTest, CapitalOfGermanyExtractableAtKFive) {
  // Word-level toy vocabulary: The capital of Germany is Berlin.
  const TokenSequence sentence = {11, 12, 13, 14, 15, 16};
  const std::vector<TokenSequence> stream(16, sentence);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  const ModelParams p = Train(*ModelParams::Initialize(TinyConfig()), stream, cfg)->params;
  const SequenceRecord record{sentence, true, 16};
  const ExtractionResult r = *IsExtractable(p, record, 5, 1);
  EXPECT_TRUE(r.extracted);
  EXPECT_EQ(r.matched_prefix_len, 1u);
  EXPECT_THAT(*GreedyDecode(p, TokenSequence(sentence.begin(), sentence.begin() + 5), 1),
              ::testing::ElementsAre(16));
}

TEST(AuditTest, ZeroModelDoesNotExtractRandomCanary) {
  ModelConfig c = TinyConfig();
  c.vocab_size = 64;
  c.max_seq_len = 32;
  const ModelParams p = *ModelParams::Zeros(c);
  CorpusSpec spec;
  spec.vocab_size = 64;
  spec.n_background = 4;
  spec.n_canaries = 4;
  spec.seq_len = 32;
  spec.n_heldout = 1;
  const Corpus corpus = *GenerateCorpus(spec);
  for (const SequenceRecord& r : corpus.records) {
    EXPECT_FALSE(IsExtractable(p, r, 16, 16)->extracted);
  }
}

TEST(AuditTest, DegenerateWindowsRejected) {
  const ModelParams p = RandomParams(TinyConfig());
  const SequenceRecord r{testing::RandomTokens(16, 32, 1), false, 1};
  EXPECT_EQ(IsExtractable(p, r, 4, 0).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(IsExtractable(p, r, 0, 4).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(IsExtractable(p, r, 10, 8).ok());  // beyond max_seq_len
}

TEST(AuditTest, ShortRecordIsSkippedExplicitly) {
  const ModelParams p = RandomParams(TinyConfig());
  const SequenceRecord shorty{{1, 2, 3, 4, 5}, false, 1};
  const ExtractionResult r = *IsExtractable(p, shorty, 4, 4);
  EXPECT_EQ(r.status, ExtractionStatus::kSkippedTooShort);
  EXPECT_FALSE(r.extracted);

  const std::vector<SequenceRecord> data = {shorty, {testing::RandomTokens(12, 32, 2), false, 1}};
  AuditSpec spec;
  spec.context_lengths = {4};
  spec.suffix_len = 4;
  spec.n_samples = 2;
  const MemorizationResult m = *MemorizedFraction(p, data, spec);
  EXPECT_EQ(m.cells[0].skipped, 1u);
  EXPECT_EQ(m.cells[0].audited, 1u);
  EXPECT_THAT(m.warnings, ::testing::Contains(::testing::HasSubstr("too short")));
}

TEST(AuditTest, OversizedSampleClampedWithWarning) {
  const ModelParams p = RandomParams(TinyConfig());
  std::vector<SequenceRecord> data;
  for (uint64_t i = 0; i < 5; ++i) data.push_back({testing::RandomTokens(12, 32, i), false, 1});
  AuditSpec spec;
  spec.context_lengths = {4};
  spec.suffix_len = 4;
  spec.n_samples = 50;
  const MemorizationResult m = *MemorizedFraction(p, data, spec);
  EXPECT_THAT(m.sample_ids, ::testing::ElementsAre(0, 1, 2, 3, 4));
  EXPECT_EQ(m.requested, 50u);
  EXPECT_THAT(m.warnings, ::testing::Contains(::testing::HasSubstr("clamped")));
  EXPECT_FALSE(MemorizedFraction(p, {}, spec).ok());
}

TEST(AuditTest, AuditSpecValidation) {
  AuditSpec spec;
  EXPECT_TRUE(spec.Validate(64).ok());
  EXPECT_FALSE(spec.Validate(47).ok());
  spec.suffix_len = 0;
  EXPECT_FALSE(spec.Validate(64).ok());
  spec = AuditSpec{};
  spec.n_samples = 0;
  EXPECT_FALSE(spec.Validate(64).ok());
  spec = AuditSpec{};
  spec.context_lengths = {};
  EXPECT_FALSE(spec.Validate(64).ok());
}

TEST(PerplexityTest, UniformModelGivesVocabSize) {
  ModelConfig c = TinyConfig();
  c.vocab_size = 64;
  const ModelParams p = *ModelParams::Zeros(c);
  const std::vector<TokenSequence> heldout = {testing::RandomTokens(16, 64, 1),
                                              testing::RandomTokens(5, 64, 2)};
  const double ppl = *Perplexity(p, heldout);
  EXPECT_NEAR(ppl, 64.0, 0.5);
  EXPECT_NEAR(ppl, 64.0, 1e-9);
}

TEST(PerplexityTest, TokenWeightedAgainstNaiveSummation) {
  const ModelParams p = RandomParams(TinyConfig(), 5);
  const std::vector<TokenSequence> heldout = {testing::RandomTokens(16, 32, 3),
                                              testing::RandomTokens(3, 32, 4),
                                              testing::RandomTokens(9, 32, 5)};
  long double total = 0;
  size_t tokens = 0;
  for (const TokenSequence& s : heldout) {
    const Tensor2D logits = *Forward(p, s);
    for (size_t t = 1; t < s.size(); ++t) {
      long double z = 0;
      for (double v : logits.row(t - 1)) z += std::exp(static_cast<long double>(v));
      total += std::log(z) - logits(t - 1, s[t]);
    }
    tokens += s.size() - 1;
  }
  const double mean = static_cast<double>(total / tokens);
  const double ppl = *Perplexity(p, heldout);
  EXPECT_NEAR(std::log(ppl), mean, 1e-9);
  EXPECT_NEAR(*SequenceNllSum(p, heldout[0]), *SequenceNll(p, heldout[0]) * 15, 1e-9);
}

TEST(PerplexityTest, DegenerateInputsRejected) {
  const ModelParams p = RandomParams(TinyConfig());
  EXPECT_FALSE(Perplexity(p, {}).ok());
  EXPECT_FALSE(Perplexity(p, std::vector<TokenSequence>{{3}}).ok());
}

TEST(ReportMathTest, AveragesMatchIndependentMeans) {
  const AuditReport r = FixtureReport();
  for (const std::string& s : r.strategies) {
    std::vector<double> level_means;
    for (size_t level = 1; level <= 2; ++level) {
      const VariantResult* v = r.Find(s, level);
      if (!v || !v->present) continue;
      double sum = 0;
      for (const MemorizationCell& c : v->canary.cells) sum += c.fraction;
      const double mean = sum / static_cast<double>(v->canary.cells.size());
      EXPECT_NEAR(*r.LevelAverage(AuditSubset::kCanary, s, level), mean, 1e-12);
      level_means.push_back(mean);
    }
    const double want = std::accumulate(level_means.begin(), level_means.end(), 0.0) /
                        static_cast<double>(level_means.size());
    EXPECT_NEAR(*r.Average(AuditSubset::kCanary, s), want, 1e-12) << s;
  }
  // The baseline matches any level.
  EXPECT_EQ(r.Find(kBaselineName, 2), r.Find(kBaselineName, 0));
  EXPECT_FALSE(r.LevelAverage(AuditSubset::kCanary, "last-quarter", 2).has_value());
  EXPECT_EQ(*r.Average(AuditSubset::kCanary, "last-quarter"),
            *r.LevelAverage(AuditSubset::kCanary, "last-quarter", 1));
  EXPECT_NEAR(*r.AveragePerplexity("global"), 31.25 + 0.37 * 16, 1e-12);
}

TEST(ThreadCountTest, EnvironmentOverride) {
  setenv("PRUNEMEM_THREADS", "3", 1);
  EXPECT_EQ(AuditThreadCount(), 3u);
  setenv("PRUNEMEM_THREADS", "0", 1);
  EXPECT_GE(AuditThreadCount(), 1u);
  unsetenv("PRUNEMEM_THREADS");
}

}  // namespace
}  // namespace prunemem
