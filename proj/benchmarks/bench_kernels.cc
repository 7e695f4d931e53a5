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

#include "prunemem/rng.h"
#include "prunemem/tensor.h"

namespace prunemem {
namespace {

Tensor2D RandomMatrix(size_t rows, size_t cols, uint64_t seed) {
  Tensor2D t(rows, cols);
  Rng rng(seed);
  for (double& v : t.values()) v = rng.Normal();
  return t;
}

void SetFlops(benchmark::State& state, double flops_per_iter) {
  state.counters["flops"] = benchmark::Counter(flops_per_iter, benchmark::Counter::kIsIterationInvariantRate);
}

// Args: m, k, n.
void BM_MatMulAcc(benchmark::State& state) {
  const size_t m = state.range(0), k = state.range(1), n = state.range(2);
  const Tensor2D a = RandomMatrix(m, k, 1);
  const Tensor2D b = RandomMatrix(k, n, 2);
  Tensor2D c(m, n);
  for (auto _ : state) {
    MatMulAcc(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  SetFlops(state, 2.0 * m * n * k);
}
BENCHMARK(BM_MatMulAcc)->Args({64, 128, 128})->Args({64, 128, 512})->Args({64, 512, 128})->Args({1024, 128, 512});

void BM_MatMulTransAAcc(benchmark::State& state) {
  const size_t m = state.range(0), k = state.range(1), n = state.range(2);
  const Tensor2D a = RandomMatrix(m, k, 1);
  const Tensor2D b = RandomMatrix(m, n, 2);
  Tensor2D c(k, n);
  for (auto _ : state) {
    MatMulTransAAcc(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  SetFlops(state, 2.0 * m * n * k);
}
BENCHMARK(BM_MatMulTransAAcc)->Args({64, 128, 128})->Args({64, 128, 512})->Args({64, 256, 128});

void BM_MatMulTransB(benchmark::State& state) {
  const size_t m = state.range(0), k = state.range(1), n = state.range(2);
  const Tensor2D a = RandomMatrix(m, k, 1);
  const Tensor2D b = RandomMatrix(n, k, 2);
  Tensor2D c(m, n);
  for (auto _ : state) {
    MatMulTransB(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  SetFlops(state, 2.0 * m * n * k);
}
BENCHMARK(BM_MatMulTransB)->Args({64, 128, 256});

void BM_Dot(benchmark::State& state) {
  const size_t n = state.range(0);
  const Tensor2D a = RandomMatrix(1, n, 1);
  const Tensor2D b = RandomMatrix(1, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Dot(a.data(), b.data(), n));
  SetFlops(state, 2.0 * n);
}
BENCHMARK(BM_Dot)->Arg(32)->Arg(128);

}  // namespace
}  // namespace prunemem

BENCHMARK_MAIN();
