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

#ifndef PRUNEMEM_TESTS_TEST_UTIL_H_
#define PRUNEMEM_TESTS_TEST_UTIL_H_

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "prunemem/audit.h"
#include "prunemem/experiment.h"
#include "prunemem/model.h"
#include "prunemem/rng.h"

namespace prunemem::testing {

inline ModelConfig TinyConfig(size_t n_layers = 2, size_t d_model = 16, uint64_t seed = 1) {
  ModelConfig c;
  c.vocab_size = 32;
  c.n_layers = n_layers;
  c.n_heads = 2;
  c.d_model = d_model;
  c.d_ff = 2 * d_model;
  c.max_seq_len = 16;
  c.seed = seed;
  return c;
}

// Initialized weights with layer-norm parameters pulled away from 1/0 so
// that every tensor carries signal.
inline ModelParams RandomParams(const ModelConfig& config, uint64_t seed = 3) {
  ModelParams p = *ModelParams::Initialize(config);
  Rng rng(seed);
  for (TensorId id : p.TensorIds()) {
    if (IsLinear(id.role) || id.role == TensorRole::kTokenEmbedding ||
        id.role == TensorRole::kPositionalEmbedding) {
      continue;
    }
    const bool is_scale = id.role == TensorRole::kLn1Scale || id.role == TensorRole::kLn2Scale ||
                          id.role == TensorRole::kFinalLnScale;
    for (double& v : p.tensor(id).values()) v = (is_scale ? 1.0 : 0.0) + 0.1 * rng.Normal();
  }
  return p;
}

inline TokenSequence RandomTokens(size_t n, size_t vocab, uint64_t seed) {
  Rng rng(seed);
  TokenSequence seq(n);
  for (Token& t : seq) t = static_cast<Token>(rng.UniformInt(vocab));
  return seq;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "prunemem-XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string File(const std::string& name) const { return (std::filesystem::path(path_) / name).string(); }

 private:
  std::string path_;
};

inline std::string SourcePath(const std::string& relative) {
  return (std::filesystem::path(PRUNEMEM_SOURCE_DIR) / relative).string();
}

// Hand-built report with every strategy at two levels, used for golden
// rendering and serialization round trips.
// A full grid that runs end to end in about a second.
inline ExperimentConfig TinyExperiment(const std::string& output_dir) {
  ExperimentConfig c;
  c.name = "micro";
  c.corpus.vocab_size = 32;
  c.corpus.n_background = 40;
  c.corpus.seq_len = 16;
  c.corpus.n_canaries = 4;
  c.corpus.canary_dup = 8;
  c.corpus.seed = 1;
  c.corpus.n_heldout = 8;
  c.model = TinyConfig(4, 16, 2);
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.train.learning_rate = 5e-3;
  c.train.seed = 3;
  c.levels = {0.10, 0.15};
  c.strategies.assign(kAllStrategies.begin(), kAllStrategies.end());
  c.audit.context_lengths = {2, 4, 8};
  c.audit.suffix_len = 4;
  c.audit.n_samples = 16;
  c.audit.seed = 5;
  c.output_dir = output_dir;
  return c;
}

inline AuditReport FixtureReport() {
  AuditReport r;
  r.model = "tiny-4L";
  r.context_lengths = {4, 8, 16, 32};
  r.suffix_len = 16;
  r.levels = {0.1, 0.15};
  r.strategies = {"layer-wise", "global", "global-attention", "first-quarter", "last-quarter"};
  auto subset = [&](size_t population, size_t sampled, double base) {
    SubsetResult s;
    s.population = population;
    s.sampled = sampled;
    for (size_t i = 0; i < r.context_lengths.size(); ++i) {
      MemorizationCell c;
      c.k = r.context_lengths[i];
      c.audited = sampled;
      c.extracted = static_cast<size_t>(base * static_cast<double>(sampled)) + i;
      if (c.extracted > sampled) c.extracted = sampled;
      c.fraction = static_cast<double>(c.extracted) / static_cast<double>(sampled);
      s.cells.push_back(c);
    }
    return s;
  };
  VariantResult base;
  base.strategy = kBaselineName;
  base.present = true;
  base.perplexity = 31.25;
  base.canary = subset(8, 8, 0.5);
  base.background = subset(4096, 256, 0.0);
  r.variants.push_back(base);
  for (size_t level = 1; level <= 2; ++level) {
    for (size_t s = 0; s < r.strategies.size(); ++s) {
      VariantResult v;
      v.strategy = r.strategies[s];
      v.level = level;
      v.present = !(level == 2 && s == 4);
      if (v.present) {
        v.perplexity = 31.25 + static_cast<double>(level * 10 + s) * 0.37;
        v.canary = subset(8, 8, 0.25 / static_cast<double>(level + s));
        v.background = subset(4096, 256, 0.0);
      }
      r.variants.push_back(v);
    }
  }
  r.warnings = {"last-quarter level 2 checkpoint missing"};
  r.footnotes = {"Reference model: baseline 0.0065, attention-pruned 0.0008."};
  return r;
}

}  // namespace prunemem::testing

#endif  // PRUNEMEM_TESTS_TEST_UTIL_H_
