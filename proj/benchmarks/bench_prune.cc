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

#include <benchmark/benchmark.h>

#include <vector>

#include "prunemem/model.h"
#include "prunemem/pruning.h"
#include "prunemem/rng.h"

namespace prunemem {
namespace {

void BM_MagnitudeThreshold(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> values(state.range(0));
  for (double& v : values) v = rng.Normal();
  for (auto _ : state) {
    auto cut = MagnitudeThreshold(values, 0.15);
    benchmark::DoNotOptimize(cut);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MagnitudeThreshold)->Arg(1 << 14)->Arg(1 << 20);

void BM_PruneReferenceModel(benchmark::State& state) {
  ModelConfig c;
  c.vocab_size = 256;
  c.n_layers = 4;
  c.n_heads = 4;
  c.d_model = 128;
  c.d_ff = 512;
  c.max_seq_len = 64;
  const ModelParams params = *ModelParams::Initialize(c);
  const PruneSpec spec{static_cast<PruneStrategy>(state.range(0)), 0.15};
  for (auto _ : state) {
    auto result = Prune(params, spec);
    benchmark::DoNotOptimize(result);
  }
  state.SetLabel(std::string(StrategyName(spec.strategy)));
}
BENCHMARK(BM_PruneReferenceModel)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace prunemem

BENCHMARK_MAIN();
