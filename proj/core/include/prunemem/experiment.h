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

#ifndef PRUNEMEM_EXPERIMENT_H_
#define PRUNEMEM_EXPERIMENT_H_

#include <cstddef>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "prunemem/audit.h"
#include "prunemem/corpus.h"
#include "prunemem/model.h"
#include "prunemem/pruning.h"
#include "prunemem/trainer.h"

namespace prunemem {

inline constexpr char kToolkitVersion[] = "0.1.0";

struct ExperimentConfig {
  std::string name = "tiny";
  CorpusSpec corpus;
  ModelConfig model;
  TrainConfig train;
  std::vector<double> levels;  // Level 1, Level 2
  std::vector<PruneStrategy> strategies;
  AuditSpec audit;
  std::string output_dir = "run";
  std::vector<std::string> footnotes;

  // Levels: exactly two, strictly increasing in (0, 1). Strategies:
  // non-empty, no repeats. Corpus, model and audit windows must agree.
  absl::Status Validate() const;
  // The corpus spec actually generated: canary prefixes are made unique at
  // the smallest audited context length.
  CorpusSpec EffectiveCorpusSpec() const;
};

// The shipped reference grid: 4-layer d_model 128 decoder, vocab 256,
// seq_len 64, 4096 background sequences, 8 canaries x 32, k in {4,8,16,32},
// suffix 16, all five strategies.
ExperimentConfig ReferenceExperimentConfig();

// Strict JSON schema: unknown keys and wrong types are rejected, omitted
// keys take the defaults above.
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(absl::string_view json);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path);
std::string ExperimentConfigToJson(const ExperimentConfig& config);

// 16 hex digits of FNV-1a over the canonical JSON of every field except
// output_dir.
std::string ConfigHash(const ExperimentConfig& config);

// Artifact paths under an output directory.
struct RunLayout {
  std::string root;

  std::string CorpusPath() const;
  std::string HeldoutPath() const;
  std::string CheckpointDir() const;
  std::string BaselineCheckpoint() const;
  std::string PrunedCheckpoint(PruneStrategy strategy, size_t level) const;
  std::string MaskPath(PruneStrategy strategy, size_t level) const;
  std::string SparsityPath(PruneStrategy strategy, size_t level) const;
  std::string LossLogPath() const;
  std::string ReportPath(absl::string_view extension) const;
  std::string ManifestPath() const;
  absl::Status CreateDirectories() const;
};

// "<strategy>_L<level>", e.g. "global-attention_L2".
std::string VariantStem(PruneStrategy strategy, size_t level);

using LogFn = std::function<void(const std::string&)>;

// Pipeline stages. The CLI subcommands and run-all both go through these, so
// composing subcommands by hand reproduces run-all exactly.
absl::Status GenerateCorpusFiles(const ExperimentConfig& config, const std::string& corpus_path,
                                 const std::string& heldout_path);
absl::StatusOr<TrainResult> TrainFromCorpusFile(const ExperimentConfig& config,
                                                const std::string& corpus_path,
                                                const std::string& checkpoint_out,
                                                const std::string& loss_log_out,
                                                const LogFn& log = nullptr);
absl::StatusOr<SparsityReport> PruneCheckpointFile(const PruneSpec& spec, const std::string& in,
                                                   const std::string& out,
                                                   const std::string& mask_out,
                                                   const std::string& sparsity_out);
// Looks for baseline.ckpt and <strategy>_L<level>.ckpt in checkpoint_dir;
// missing pruned checkpoints become absent cells.
absl::StatusOr<AuditReport> AuditCheckpointDir(const ExperimentConfig& config,
                                               const std::string& corpus_path,
                                               const std::string& heldout_path,
                                               const std::string& checkpoint_dir);
// report.json, report.csv and report.txt.
absl::Status WriteReports(const AuditReport& report, const RunLayout& layout);

struct RunManifest {
  std::string config_hash;
  std::string toolkit_version = kToolkitVersion;
  std::string started_at;
  std::string finished_at;
  std::string status;  // "complete" or "failed"
  std::string failed_stage;
  std::string error;
  std::map<std::string, std::string> artifacts;  // key -> path relative to root
};

std::string ManifestToJson(const RunManifest& manifest);

struct RunOutcome {
  RunManifest manifest;
  AuditReport report;
};

// generate -> train -> prune (strategies x levels) -> audit -> report.
// On failure the partial manifest is written and the error names the stage.
absl::StatusOr<RunOutcome> RunExperiment(const ExperimentConfig& config, const LogFn& log = nullptr);

}  // namespace prunemem

#endif  // PRUNEMEM_EXPERIMENT_H_
