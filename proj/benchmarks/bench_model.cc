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

#include "prunemem/backprop.h"
#include "prunemem/model.h"
#include "prunemem/rng.h"
#include "prunemem/trainer.h"

namespace prunemem {
namespace {

ModelConfig ReferenceModel() {
  ModelConfig c;
  c.vocab_size = 256;
  c.n_layers = 4;
  c.n_heads = 4;
  c.d_model = 128;
  c.d_ff = 512;
  c.max_seq_len = 64;
  c.seed = 1;
  return c;
}

TokenSequence RandomTokens(size_t n, size_t vocab, uint64_t seed) {
  Rng rng(seed);
  TokenSequence seq(n);
  for (Token& t : seq) t = static_cast<Token>(rng.UniformInt(vocab));
  return seq;
}

void BM_Forward(benchmark::State& state) {
  const ModelParams params = *ModelParams::Initialize(ReferenceModel());
  const TokenSequence seq = RandomTokens(state.range(0), 256, 3);
  for (auto _ : state) {
    auto logits = Forward(params, seq);
    benchmark::DoNotOptimize(logits);
  }
  state.counters["tokens"] =
      benchmark::Counter(static_cast<double>(seq.size()), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Forward)->Arg(47)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ForwardBackward(benchmark::State& state) {
  const ModelParams params = *ModelParams::Initialize(ReferenceModel());
  const TransposedWeights transposed = TransposeWeights(params);
  ModelParams grads = ZerosLike(params);
  const TokenSequence seq = RandomTokens(64, 256, 3);
  for (auto _ : state) {
    auto nll = AccumulateGradients(params, transposed, seq, 1.0, grads);
    benchmark::DoNotOptimize(nll);
  }
  state.counters["tokens"] =
      benchmark::Counter(static_cast<double>(seq.size()), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_GreedyDecode(benchmark::State& state) {
  const ModelParams params = *ModelParams::Initialize(ReferenceModel());
  const TokenSequence prefix = RandomTokens(32, 256, 4);
  for (auto _ : state) {
    auto out = GreedyDecode(params, prefix, 16);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_GreedyDecode)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const ModelParams init = *ModelParams::Initialize(ReferenceModel());
  std::vector<TokenSequence> stream;
  for (size_t i = 0; i < 64; ++i) stream.push_back(RandomTokens(64, 256, 10 + i));
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  for (auto _ : state) {
    auto result = Train(init, stream, cfg);
    benchmark::DoNotOptimize(result);
  }
  state.counters["sequences"] =
      benchmark::Counter(static_cast<double>(stream.size()), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace prunemem

BENCHMARK_MAIN();
