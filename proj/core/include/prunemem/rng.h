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

#ifndef PRUNEMEM_RNG_H_
#define PRUNEMEM_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace prunemem {

// SplitMix64 finalizer. Used to derive independent sub-seeds from one
// experiment seed.
uint64_t MixSeed(uint64_t seed, uint64_t stream);

// Thin wrapper over std::mt19937_64. The engine's output sequence is fixed by
// the standard; the std distributions are not, so every draw used by the
// toolkit is implemented here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform integer in [0, bound). bound must be > 0.
  uint64_t UniformInt(uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double UniformDouble();
  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // First `count` entries of a seeded permutation of [0, n).
  std::vector<size_t> SampleWithoutReplacement(size_t n, size_t count);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace prunemem

#endif  // PRUNEMEM_RNG_H_
