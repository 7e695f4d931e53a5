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

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "oracles.h"
#include "test_util.h"

namespace prunemem {
namespace {

using ::prunemem::testing::TinyConfig;
using ::testing::ElementsAre;

ModelParams Model(size_t n_layers, uint64_t seed = 1) {
  return *ModelParams::Initialize(TinyConfig(n_layers, 16, seed));
}

std::vector<int> ScopeLayers(const std::vector<TensorId>& scope) {
  std::set<int> layers;
  for (TensorId id : scope) layers.insert(id.layer);
  return {layers.begin(), layers.end()};
}

TEST(ScopeTest, FourLayerFirstQuarterIsLayerZero) {
  const std::vector<TensorId> scope =
      PrunableScope(Model(4), PruneStrategy::kGlobalFirstQuarterLayers);
  EXPECT_EQ(scope.size(), 6u);
  EXPECT_THAT(ScopeLayers(scope), ElementsAre(0));
}

TEST(ScopeTest, FourLayerAttentionOnlyHasSixteenTensors) {
  const std::vector<TensorId> scope = PrunableScope(Model(4), PruneStrategy::kGlobalAttentionOnly);
  EXPECT_EQ(scope.size(), 16u);
  for (TensorId id : scope) EXPECT_TRUE(IsAttention(id.role)) << TensorName(id);
}

TEST(ScopeTest, EightLayerLastQuarterIsLayersSixAndSeven) {
  EXPECT_THAT(ScopeLayers(PrunableScope(Model(8), PruneStrategy::kGlobalLastQuarterLayers)),
              ElementsAre(6, 7));
}

TEST(ScopeTest, QuarterRoundsUp) {
  EXPECT_EQ(QuarterLayerCount(1), 1u);
  EXPECT_EQ(QuarterLayerCount(4), 1u);
  EXPECT_EQ(QuarterLayerCount(5), 2u);
  EXPECT_EQ(QuarterLayerCount(8), 2u);
  EXPECT_EQ(QuarterLayerCount(9), 3u);
}

TEST(ScopeTest, MatchesOracleForEveryStrategyAndDepth) {
  for (size_t layers = 1; layers <= 9; ++layers) {
    const ModelParams p = Model(layers);
    for (PruneStrategy s : kAllStrategies) {
      EXPECT_EQ(PrunableScope(p, s), oracle::Scope(layers, s))
          << StrategyName(s) << " L=" << layers;
    }
  }
}

TEST(ScopeTest, NeverIncludesEmbeddingsOrNorms) {
  for (PruneStrategy s : kAllStrategies)
    for (TensorId id : PrunableScope(Model(5), s)) EXPECT_TRUE(IsLinear(id.role));
}

TEST(MagnitudeThresholdTest, DropsTwoSmallestMagnitudes) {
  const std::vector<double> v = {0.1, -0.2, 0.3, 0.4};
  const MagnitudeCut cut = *MagnitudeThreshold(v, 0.5);
  EXPECT_EQ(cut.drop_count, 2u);
  EXPECT_THAT(cut.dropped, ElementsAre(0, 1));
  EXPECT_DOUBLE_EQ(cut.threshold, 0.2);
}

TEST(MagnitudeThresholdTest, ZeroFractionDropsNothing) {
  const std::vector<double> v = {0.1, -0.2, 0.3};
  const MagnitudeCut cut = *MagnitudeThreshold(v, 0.0);
  EXPECT_EQ(cut.drop_count, 0u);
  EXPECT_TRUE(cut.dropped.empty());
  EXPECT_EQ(cut.threshold, 0.0);
}

TEST(MagnitudeThresholdTest, AllTiedDropsFirstIndices) {
  // Tie-break oracle: with equal magnitudes the order is plain index order.
  std::vector<double> v(10);
  for (size_t i = 0; i < v.size(); ++i) v[i] = (i % 3 == 0) ? -0.5 : 0.5;
  const MagnitudeCut cut = *MagnitudeThreshold(v, 0.5);
  EXPECT_THAT(cut.dropped, ElementsAre(0, 1, 2, 3, 4));
}

TEST(MagnitudeThresholdTest, MatchesSortOracleOnLargeVectors) {
  Rng rng(3);
  for (size_t n : {1u, 2u, 7u, 1000u, 100000u}) {
    std::vector<double> v(n);
    for (double& x : v) x = std::round(rng.Normal() * 20) / 20;  // many ties
    for (double f : {0.0, 0.1, 0.37, 0.5, 0.99}) {
      std::vector<size_t> order(n);
      std::iota(order.begin(), order.end(), size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return std::fabs(v[a]) < std::fabs(v[b]); });
      const auto k = static_cast<size_t>(std::floor(f * static_cast<double>(n)));
      std::vector<size_t> want(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(want.begin(), want.end());
      const MagnitudeCut cut = *MagnitudeThreshold(v, f);
      ASSERT_EQ(cut.dropped, want) << "n=" << n << " f=" << f;
      if (k > 0) {
        EXPECT_EQ(cut.threshold, std::fabs(v[order[k - 1]]));
      }
    }
  }
}

TEST(MagnitudeThresholdTest, RejectsEmptyAndBadFraction) {
  EXPECT_FALSE(MagnitudeThreshold({}, 0.5).ok());
  const std::vector<double> v = {1.0};
  EXPECT_FALSE(MagnitudeThreshold(v, 1.0).ok());
  EXPECT_FALSE(MagnitudeThreshold(v, -0.1).ok());
}

TEST(PruneTest, TwoHundredRandomCasesMatchOracle) {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const oracle::CaseResult r = oracle::CheckPruneCase(seed);
    ASSERT_TRUE(r.ok) << r.detail;
  }
}

TEST(PruneTest, HandSetTwoLayerGlobalQuarter) {
  ModelParams p = oracle::TieHeavyModel(TinyConfig(2, 4), 5);
  const PruneResult r = *Prune(p, {PruneStrategy::kGlobalAllLinear, 0.25});
  EXPECT_EQ(oracle::MaskZeroSet(r.mask), oracle::ZeroSet(p, PruneStrategy::kGlobalAllLinear, 0.25));
  EXPECT_EQ(r.mask.DroppedCount(), static_cast<size_t>(0.25 * r.report.scope_size));
}

TEST(PruneTest, ZeroSetsNestAcrossFractions) {
  const ModelParams p = oracle::TieHeavyModel(TinyConfig(4, 16), 7);
  for (PruneStrategy s : kAllStrategies) {
    std::set<oracle::Position> prev;
    for (double f : {0.1, 0.2, 0.3, 0.5, 0.9}) {
      const std::set<oracle::Position> cur = oracle::MaskZeroSet(Prune(p, {s, f})->mask);
      EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()))
          << StrategyName(s) << " f=" << f;
      prev = cur;
    }
  }
}

TEST(PruneTest, PruningTwiceAddsNoZeros) {
  for (uint64_t seed : {1u, 2u}) {
    const ModelParams p = seed == 1 ? Model(4) : oracle::TieHeavyModel(TinyConfig(4, 16), 9);
    for (PruneStrategy s : kAllStrategies) {
      const PruneResult once = *Prune(p, {s, 0.3});
      const PruneResult twice = *Prune(once.params, {s, 0.3});
      EXPECT_EQ(oracle::ZeroWeights(twice.params), oracle::ZeroWeights(once.params))
          << StrategyName(s);
      EXPECT_EQ(twice.params, once.params);
    }
  }
}

TEST(PruneTest, MaskApplyIsIdempotent) {
  const PruneResult r = *Prune(Model(4), {PruneStrategy::kGlobalAllLinear, 0.4});
  ModelParams q = r.params;
  ASSERT_TRUE(r.mask.Apply(q).ok());
  EXPECT_EQ(q, r.params);
}

TEST(PruneTest, OutOfScopeTensorsUntouchedAndInputUnmodified) {
  const ModelParams p = Model(4, 3);
  const ModelParams copy = p;
  for (PruneStrategy s : kAllStrategies) {
    const PruneResult r = *Prune(p, {s, 0.6});
    const std::vector<TensorId> scope = PrunableScope(p, s);
    for (TensorId id : p.TensorIds()) {
      if (std::find(scope.begin(), scope.end(), id) != scope.end()) continue;
      double linf = 0;
      for (size_t i = 0; i < p.tensor(id).size(); ++i)
        linf = std::max(linf, std::fabs(p.tensor(id).data()[i] - r.params.tensor(id).data()[i]));
      EXPECT_EQ(linf, 0.0) << StrategyName(s) << " " << TensorName(id);
      EXPECT_EQ(p.tensor(id), r.params.tensor(id));
    }
  }
  EXPECT_EQ(p, copy);
}

TEST(PruneTest, LayerWiseEqualsSingleTensorGlobalCut) {
  // No strategy has a one-tensor scope, so compare each layer-wise tensor with
  // a global cut over that tensor alone.
  const ModelParams p = oracle::TieHeavyModel(TinyConfig(2, 16), 11);
  const PruneResult lw = *Prune(p, {PruneStrategy::kLayerWise, 0.3});
  for (const TensorMask& m : lw.mask.tensors) {
    const MagnitudeCut cut = *MagnitudeThreshold(p.tensor(m.id).values(), 0.3);
    std::vector<size_t> dropped;
    for (size_t i = 0; i < m.keep.size(); ++i)
      if (!m.keep[i]) dropped.push_back(i);
    EXPECT_EQ(dropped, cut.dropped) << TensorName(m.id);
  }
}

TEST(PruneTest, DropTotalsAgreeWithinTensorCount) {
  const ModelParams p = Model(4, 5);
  const PruneResult lw = *Prune(p, {PruneStrategy::kLayerWise, 0.15});
  const PruneResult gl = *Prune(p, {PruneStrategy::kGlobalAllLinear, 0.15});
  const size_t a = lw.mask.DroppedCount(), b = gl.mask.DroppedCount();
  EXPECT_LE(std::max(a, b) - std::min(a, b), lw.mask.tensors.size());
}

TEST(SparsityReportTest, GlobalScopeFractionWithinOneOverN) {
  for (double f : {0.1, 0.15, 0.333}) {
    const PruneResult r = *Prune(Model(4, 6), {PruneStrategy::kGlobalAllLinear, f});
    const double n = static_cast<double>(r.report.scope_size);
    EXPECT_LE(r.report.scope_fraction, f);
    EXPECT_GE(r.report.scope_fraction, f - 1.0 / n);
    EXPECT_EQ(r.report.total_size, r.params.ParameterCount());
    // Layer-norm biases start at zero, so the model-wide count includes them.
    EXPECT_GE(r.report.total_zeros, r.report.scope_zeros);
  }
}

TEST(SparsityReportTest, LayerWiseEveryTensorWithinOneOverSize) {
  const PruneResult r = *Prune(Model(4, 8), {PruneStrategy::kLayerWise, 0.15});
  for (const TensorSparsity& t : r.report.tensors) {
    // Recount independently from the weights.
    const TensorId id = *ParseTensorName(t.name);
    const Tensor2D& w = r.params.tensor(id);
    const auto zeros = static_cast<size_t>(std::count(w.values().begin(), w.values().end(), 0.0));
    EXPECT_EQ(t.zeros, zeros);
    EXPECT_LE(std::fabs(t.fraction - 0.15), 1.0 / static_cast<double>(t.size)) << t.name;
  }
}

TEST(SparsityReportTest, UnprunedModelHasNoZeros) {
  const ModelParams p = Model(4, 9);
  const std::vector<TensorId> scope = PrunableScope(p, PruneStrategy::kGlobalAllLinear);
  const SparsityReport r = ComputeSparsityReport(p, scope);
  EXPECT_EQ(r.scope_zeros, 0u);
  EXPECT_EQ(r.scope_fraction, 0.0);
}

TEST(SparsityReportTest, JsonFields) {
  const PruneSpec spec{PruneStrategy::kGlobalAttentionOnly, 0.25};
  const PruneResult r = *Prune(Model(2), spec);
  const nlohmann::json j = nlohmann::json::parse(SparsityReportToJson(r.report, spec));
  EXPECT_EQ(j["strategy"], "global-attention");
  EXPECT_EQ(j["fraction"], 0.25);
  EXPECT_EQ(j["scope_zeros"], r.report.scope_zeros);
  EXPECT_EQ(j["tensors"].size(), 8u);
}

TEST(StrategyTest, NamesAndLabelsRoundTrip) {
  const std::vector<std::string> names = {"layer-wise", "global", "global-attention",
                                          "first-quarter", "last-quarter"};
  const std::vector<std::string> labels = {"Layer-wise", "Global", "Attention", "First 25%",
                                           "Last 25%"};
  for (size_t i = 0; i < kAllStrategies.size(); ++i) {
    EXPECT_EQ(StrategyName(kAllStrategies[i]), names[i]);
    EXPECT_EQ(StrategyLabel(kAllStrategies[i]), labels[i]);
    EXPECT_EQ(*ParseStrategy(names[i]), kAllStrategies[i]);
  }
  EXPECT_FALSE(ParseStrategy("random").ok());
}

TEST(StrategyTest, SpecValidation) {
  EXPECT_TRUE((PruneSpec{PruneStrategy::kLayerWise, 0.0}).Validate().ok());
  EXPECT_FALSE((PruneSpec{PruneStrategy::kLayerWise, 1.0}).Validate().ok());
  EXPECT_FALSE((PruneSpec{PruneStrategy::kLayerWise, -0.01}).Validate().ok());
  EXPECT_FALSE(Prune(Model(2), {PruneStrategy::kGlobalAllLinear, 1.0}).ok());
}

TEST(StrategyTest, TenAndFifteenPercentLevels) {
  const ModelParams p = Model(4, 12);
  for (double f : {0.10, 0.15}) {
    const PruneResult r = *Prune(p, {PruneStrategy::kGlobalAllLinear, f});
    EXPECT_EQ(r.report.scope_zeros, DropCount(f, r.report.scope_size));
  }
  EXPECT_EQ(DropCount(0.15, 100), 15u);
  EXPECT_EQ(DropCount(0.10, 9), 0u);
}

}  // namespace
}  // namespace prunemem
