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

#include "prunemem/experiment.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json_internal.h"
#include "prunemem/checkpoint.h"
#include "prunemem/report.h"

namespace prunemem {
namespace {

namespace fs = std::filesystem;
using internal::Json;

Json CorpusToJson(const CorpusSpec& c) {
  return Json{{"vocab_size", c.vocab_size},
              {"n_background", c.n_background},
              {"seq_len", c.seq_len},
              {"n_canaries", c.n_canaries},
              {"canary_dup", c.canary_dup},
              {"seed", c.seed},
              {"background", std::string(BackgroundKindName(c.background))},
              {"motif_period", c.motif_period},
              {"motif_noise", c.motif_noise},
              {"n_heldout", c.n_heldout}};
}

absl::Status CorpusFromJson(const Json& j, CorpusSpec& c) {
  internal::JsonObjectReader r(j, "corpus");
  r.Unsigned("vocab_size", c.vocab_size, false);
  r.Unsigned("n_background", c.n_background, false);
  r.Unsigned("seq_len", c.seq_len, false);
  r.Unsigned("n_canaries", c.n_canaries, false);
  r.Unsigned("canary_dup", c.canary_dup, false);
  r.Unsigned("seed", c.seed, false);
  std::string background(BackgroundKindName(c.background));
  r.String("background", background, false);
  r.Unsigned("motif_period", c.motif_period, false);
  r.Double("motif_noise", c.motif_noise, false);
  r.Unsigned("n_heldout", c.n_heldout, false);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  absl::StatusOr<BackgroundKind> kind = ParseBackgroundKind(background);
  if (!kind.ok()) return kind.status();
  c.background = *kind;
  return absl::OkStatus();
}

Json TrainToJson(const TrainConfig& t) {
  return Json{{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"adam_beta1", t.adam_beta1},
              {"adam_beta2", t.adam_beta2},
              {"adam_eps", t.adam_eps},
              {"grad_clip", t.grad_clip ? Json(*t.grad_clip) : Json(nullptr)},
              {"seed", t.seed}};
}

absl::Status TrainFromJson(const Json& j, TrainConfig& t) {
  internal::JsonObjectReader r(j, "train");
  r.Unsigned("epochs", t.epochs, false);
  r.Unsigned("batch_size", t.batch_size, false);
  r.Double("learning_rate", t.learning_rate, false);
  r.Double("adam_beta1", t.adam_beta1, false);
  r.Double("adam_beta2", t.adam_beta2, false);
  r.Double("adam_eps", t.adam_eps, false);
  if (const Json* clip = r.Raw("grad_clip", false)) {
    if (clip->is_null()) {
      t.grad_clip.reset();
    } else if (clip->is_number()) {
      t.grad_clip = clip->get<double>();
    } else {
      r.Fail("grad_clip", "expected a number or null");
    }
  }
  r.Unsigned("seed", t.seed, false);
  return r.Finish();
}

Json AuditToJson(const AuditSpec& a) {
  return Json{{"context_lengths", a.context_lengths},
              {"suffix_len", a.suffix_len},
              {"n_samples", a.n_samples},
              {"seed", a.seed}};
}

absl::Status AuditFromJson(const Json& j, AuditSpec& a) {
  internal::JsonObjectReader r(j, "audit");
  if (const Json* ks = r.Raw("context_lengths", false)) {
    if (!ks->is_array()) {
      r.Fail("context_lengths", "expected an array");
    } else {
      a.context_lengths.clear();
      for (const Json& k : *ks) {
        if (!k.is_number_unsigned()) {
          r.Fail("context_lengths", "expected non-negative integers");
          break;
        }
        a.context_lengths.push_back(k.get<size_t>());
      }
    }
  }
  r.Unsigned("suffix_len", a.suffix_len, false);
  r.Unsigned("n_samples", a.n_samples, false);
  r.Unsigned("seed", a.seed, false);
  return r.Finish();
}

Json ConfigToJsonObject(const ExperimentConfig& c, bool with_output_dir) {
  Json strategies = Json::array();
  for (PruneStrategy s : c.strategies) strategies.push_back(std::string(StrategyName(s)));
  Json j{{"name", c.name},
         {"corpus", CorpusToJson(c.corpus)},
         {"model", internal::ModelConfigToJson(c.model)},
         {"train", TrainToJson(c.train)},
         {"levels", c.levels},
         {"strategies", strategies},
         {"audit", AuditToJson(c.audit)},
         {"footnotes", c.footnotes}};
  if (with_output_dir) j["output_dir"] = c.output_dir;
  return j;
}

std::string NowUtc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

absl::StatusOr<std::vector<SequenceRecord>> LoadRecords(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<std::vector<SequenceRecord>> records = RecordsFromJsonLines(*text);
  if (!records.ok()) {
    return absl::Status(records.status().code(), absl::StrCat(path, ": ", records.status().message()));
  }
  return records;
}

std::string Relative(const std::string& path, const std::string& root) {
  return fs::path(path).lexically_relative(root).generic_string();
}

}  // namespace

absl::Status ExperimentConfig::Validate() const {
  if (name.empty()) return absl::InvalidArgumentError("experiment name is empty");
  if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
    return absl::InvalidArgumentError("experiment name may not contain commas or newlines");
  }
  if (absl::Status s = corpus.Validate(); !s.ok()) return s;
  if (absl::Status s = model.Validate(); !s.ok()) return s;
  if (absl::Status s = train.Validate(); !s.ok()) return s;
  if (!(train.learning_rate > 0.0)) {
    return absl::InvalidArgumentError("experiment learning_rate must be > 0");
  }
  if (absl::Status s = audit.Validate(corpus.seq_len); !s.ok()) return s;
  if (corpus.vocab_size != model.vocab_size) {
    return absl::InvalidArgumentError("corpus and model vocab_size differ");
  }
  if (corpus.seq_len > model.max_seq_len) {
    return absl::InvalidArgumentError("corpus seq_len exceeds model max_seq_len");
  }
  if (levels.size() != 2) {
    return absl::InvalidArgumentError("levels must list exactly two fractions (Level 1, Level 2)");
  }
  for (size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) {
      return absl::InvalidArgumentError("levels must lie in (0, 1)");
    }
    if (i > 0 && !(levels[i] > levels[i - 1])) {
      return absl::InvalidArgumentError("levels must be strictly increasing");
    }
  }
  if (strategies.empty()) return absl::InvalidArgumentError("strategies must not be empty");
  std::set<PruneStrategy> seen(strategies.begin(), strategies.end());
  if (seen.size() != strategies.size()) {
    return absl::InvalidArgumentError("strategies must not repeat");
  }
  if (output_dir.empty()) return absl::InvalidArgumentError("output_dir is empty");
  return absl::OkStatus();
}

CorpusSpec ExperimentConfig::EffectiveCorpusSpec() const {
  CorpusSpec spec = corpus;
  if (!audit.context_lengths.empty()) {
    spec.unique_prefix_len =
        *std::min_element(audit.context_lengths.begin(), audit.context_lengths.end());
  }
  return spec;
}

ExperimentConfig ReferenceExperimentConfig() {
  ExperimentConfig c;
  c.name = "tiny-4L";
  c.corpus.vocab_size = 256;
  c.corpus.n_background = 4096;
  c.corpus.seq_len = 64;
  c.corpus.n_canaries = 8;
  c.corpus.canary_dup = 32;
  c.corpus.seed = 7;
  c.corpus.background = BackgroundKind::kPeriodic;
  c.corpus.motif_period = 8;
  c.corpus.motif_noise = 0.25;
  c.corpus.n_heldout = 256;
  c.model.vocab_size = 256;
  c.model.n_layers = 4;
  c.model.n_heads = 4;
  c.model.d_model = 128;
  c.model.d_ff = 256;
  c.model.max_seq_len = 64;
  c.model.seed = 11;
  c.train.epochs = 6;
  c.train.batch_size = 16;
  c.train.learning_rate = 3e-3;
  c.train.grad_clip = 1.0;
  c.train.seed = 13;
  c.levels = {0.7, 0.8};
  c.strategies.assign(kAllStrategies.begin(), kAllStrategies.end());
  c.audit.context_lengths = {4, 8, 16, 32};
  c.audit.suffix_len = 16;
  c.audit.n_samples = 256;
  c.audit.seed = 17;
  c.output_dir = "runs/reference";
  return c;
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(absl::string_view text) {
  absl::StatusOr<Json> j = internal::ParseJson(text, "experiment config");
  if (!j.ok()) return j.status();
  ExperimentConfig c = ReferenceExperimentConfig();
  internal::JsonObjectReader r(*j, "experiment config");
  r.String("name", c.name, false);
  r.String("output_dir", c.output_dir, false);
  const Json* corpus = r.Raw("corpus", false);
  const Json* model = r.Raw("model", false);
  const Json* train = r.Raw("train", false);
  const Json* levels = r.Raw("levels", false);
  const Json* strategies = r.Raw("strategies", false);
  const Json* audit = r.Raw("audit", false);
  const Json* footnotes = r.Raw("footnotes", false);
  if (absl::Status s = r.Finish(); !s.ok()) return s;

  if (corpus != nullptr) {
    if (absl::Status s = CorpusFromJson(*corpus, c.corpus); !s.ok()) return s;
  }
  if (model != nullptr) {
    Json merged = internal::ModelConfigToJson(c.model);
    if (!model->is_object()) return absl::InvalidArgumentError("experiment config: model must be an object");
    for (auto it = model->begin(); it != model->end(); ++it) merged[it.key()] = it.value();
    absl::StatusOr<ModelConfig> mc = internal::ModelConfigFromJson(merged);
    if (!mc.ok()) return mc.status();
    c.model = *mc;
  }
  if (train != nullptr) {
    if (absl::Status s = TrainFromJson(*train, c.train); !s.ok()) return s;
  }
  if (levels != nullptr) {
    if (!levels->is_array()) return absl::InvalidArgumentError("experiment config: levels must be an array");
    c.levels.clear();
    for (const Json& l : *levels) {
      if (!l.is_number()) return absl::InvalidArgumentError("experiment config: levels must be numbers");
      c.levels.push_back(l.get<double>());
    }
  }
  if (strategies != nullptr) {
    if (!strategies->is_array()) {
      return absl::InvalidArgumentError("experiment config: strategies must be an array");
    }
    c.strategies.clear();
    for (const Json& s : *strategies) {
      if (!s.is_string()) return absl::InvalidArgumentError("experiment config: strategies must be strings");
      absl::StatusOr<PruneStrategy> parsed = ParseStrategy(s.get<std::string>());
      if (!parsed.ok()) return parsed.status();
      c.strategies.push_back(*parsed);
    }
  }
  if (audit != nullptr) {
    if (absl::Status s = AuditFromJson(*audit, c.audit); !s.ok()) return s;
  }
  if (footnotes != nullptr) {
    if (!footnotes->is_array()) return absl::InvalidArgumentError("experiment config: footnotes must be an array");
    c.footnotes.clear();
    for (const Json& f : *footnotes) {
      if (!f.is_string()) return absl::InvalidArgumentError("experiment config: footnotes must be strings");
      c.footnotes.push_back(f.get<std::string>());
    }
  }
  if (absl::Status s = c.Validate(); !s.ok()) return s;
  return c;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<ExperimentConfig> config = ParseExperimentConfig(*text);
  if (!config.ok()) {
    return absl::Status(config.status().code(), absl::StrCat(path, ": ", config.status().message()));
  }
  return config;
}

std::string ExperimentConfigToJson(const ExperimentConfig& config) {
  return ConfigToJsonObject(config, true).dump(2) + "\n";
}

std::string ConfigHash(const ExperimentConfig& config) {
  const std::string canonical = ConfigToJsonObject(config, false).dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return absl::StrFormat("%016x", h);
}

std::string RunLayout::CorpusPath() const { return (fs::path(root) / "data" / "corpus.jsonl").string(); }
std::string RunLayout::HeldoutPath() const { return (fs::path(root) / "data" / "heldout.jsonl").string(); }
std::string RunLayout::CheckpointDir() const { return (fs::path(root) / "checkpoints").string(); }
std::string RunLayout::BaselineCheckpoint() const {
  return (fs::path(CheckpointDir()) / "baseline.ckpt").string();
}
std::string RunLayout::PrunedCheckpoint(PruneStrategy strategy, size_t level) const {
  return (fs::path(CheckpointDir()) / (VariantStem(strategy, level) + ".ckpt")).string();
}
std::string RunLayout::MaskPath(PruneStrategy strategy, size_t level) const {
  return (fs::path(root) / "masks" / (VariantStem(strategy, level) + ".mask")).string();
}
std::string RunLayout::SparsityPath(PruneStrategy strategy, size_t level) const {
  return (fs::path(root) / "masks" / (VariantStem(strategy, level) + ".sparsity.json")).string();
}
std::string RunLayout::LossLogPath() const { return (fs::path(root) / "logs" / "train_loss.json").string(); }
std::string RunLayout::ReportPath(absl::string_view extension) const {
  return (fs::path(root) / "reports" / absl::StrCat("report.", extension)).string();
}
std::string RunLayout::ManifestPath() const { return (fs::path(root) / "manifest.json").string(); }

absl::Status RunLayout::CreateDirectories() const {
  std::error_code ec;
  for (const char* sub : {"data", "checkpoints", "masks", "reports", "logs"}) {
    fs::create_directories(fs::path(root) / sub, ec);
    if (ec) return absl::PermissionDeniedError(absl::StrCat("cannot create ", root, "/", sub, ": ", ec.message()));
  }
  return absl::OkStatus();
}

std::string VariantStem(PruneStrategy strategy, size_t level) {
  return absl::StrCat(StrategyName(strategy), "_L", level);
}

absl::Status GenerateCorpusFiles(const ExperimentConfig& config, const std::string& corpus_path,
                                 const std::string& heldout_path) {
  absl::StatusOr<Corpus> corpus = GenerateCorpus(config.EffectiveCorpusSpec());
  if (!corpus.ok()) return corpus.status();
  if (absl::Status s = WriteFile(corpus_path, RecordsToJsonLines(corpus->records)); !s.ok()) return s;
  std::vector<SequenceRecord> heldout;
  heldout.reserve(corpus->heldout.size());
  for (TokenSequence& seq : corpus->heldout) heldout.push_back({std::move(seq), false, 1});
  return WriteFile(heldout_path, RecordsToJsonLines(heldout));
}

absl::StatusOr<TrainResult> TrainFromCorpusFile(const ExperimentConfig& config,
                                                const std::string& corpus_path,
                                                const std::string& checkpoint_out,
                                                const std::string& loss_log_out, const LogFn& log) {
  absl::StatusOr<std::vector<SequenceRecord>> records = LoadRecords(corpus_path);
  if (!records.ok()) return records.status();
  std::vector<TokenSequence> stream;
  for (size_t idx : BuildTrainingStream(*records, config.corpus.seed)) {
    stream.push_back((*records)[idx].tokens);
  }
  absl::StatusOr<ModelParams> init = ModelParams::Initialize(config.model);
  if (!init.ok()) return init.status();
  const auto start = std::chrono::steady_clock::now();
  absl::StatusOr<TrainResult> result =
      Train(std::move(*init), stream, config.train, [&](const TrainProgress& p) {
        if (!log) return;
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log(absl::StrFormat("epoch %d/%d step %d loss %.4f (%.0fs)", p.epoch + 1,
                            config.train.epochs, p.step, p.epoch_mean_loss, secs));
      });
  if (!result.ok()) return result.status();
  if (absl::Status s = SaveCheckpoint(result->params, checkpoint_out); !s.ok()) return s;
  if (!loss_log_out.empty()) {
    if (absl::Status s = WriteFile(loss_log_out, LossHistoryToJson(*result)); !s.ok()) return s;
  }
  return result;
}

absl::StatusOr<SparsityReport> PruneCheckpointFile(const PruneSpec& spec, const std::string& in,
                                                   const std::string& out,
                                                   const std::string& mask_out,
                                                   const std::string& sparsity_out) {
  absl::StatusOr<ModelParams> params = LoadCheckpoint(in);
  if (!params.ok()) return params.status();
  absl::StatusOr<PruneResult> pruned = Prune(*params, spec);
  if (!pruned.ok()) return pruned.status();
  if (absl::Status s = SaveCheckpoint(pruned->params, out); !s.ok()) return s;
  if (!mask_out.empty()) {
    if (absl::Status s = WriteFile(mask_out, SerializeMask(pruned->mask)); !s.ok()) return s;
  }
  if (!sparsity_out.empty()) {
    if (absl::Status s = WriteFile(sparsity_out, SparsityReportToJson(pruned->report, spec)); !s.ok()) {
      return s;
    }
  }
  return pruned->report;
}

absl::StatusOr<AuditReport> AuditCheckpointDir(const ExperimentConfig& config,
                                               const std::string& corpus_path,
                                               const std::string& heldout_path,
                                               const std::string& checkpoint_dir) {
  absl::StatusOr<std::vector<SequenceRecord>> records = LoadRecords(corpus_path);
  if (!records.ok()) return records.status();
  absl::StatusOr<std::vector<SequenceRecord>> heldout_records = LoadRecords(heldout_path);
  if (!heldout_records.ok()) return heldout_records.status();
  std::vector<TokenSequence> heldout;
  for (SequenceRecord& r : *heldout_records) heldout.push_back(std::move(r.tokens));

  std::vector<AuditVariant> variants;
  auto load = [](const std::string& path) -> absl::StatusOr<std::optional<ModelParams>> {
    if (!fs::exists(path)) return std::optional<ModelParams>();
    absl::StatusOr<ModelParams> p = LoadCheckpoint(path);
    if (!p.ok()) return p.status();
    return std::optional<ModelParams>(std::move(*p));
  };
  const std::string baseline_path = (fs::path(checkpoint_dir) / "baseline.ckpt").string();
  absl::StatusOr<std::optional<ModelParams>> baseline = load(baseline_path);
  if (!baseline.ok()) return baseline.status();
  if (!baseline->has_value()) {
    return absl::NotFoundError(absl::StrCat("baseline checkpoint missing: ", baseline_path));
  }
  variants.push_back({kBaselineName, 0, std::move(*baseline)});
  for (size_t level = 1; level <= config.levels.size(); ++level) {
    for (PruneStrategy s : config.strategies) {
      const std::string path =
          (fs::path(checkpoint_dir) / (VariantStem(s, level) + ".ckpt")).string();
      absl::StatusOr<std::optional<ModelParams>> p = load(path);
      if (!p.ok()) return p.status();
      variants.push_back({std::string(StrategyName(s)), level, std::move(*p)});
    }
  }

  AuditMatrixInputs inputs;
  inputs.model = config.name;
  inputs.levels = config.levels;
  inputs.strategies = config.strategies;
  inputs.records = *records;
  inputs.heldout = heldout;
  inputs.spec = config.audit;
  inputs.footnotes = config.footnotes;
  return AuditMatrix(variants, inputs);
}

absl::Status WriteReports(const AuditReport& report, const RunLayout& layout) {
  if (absl::Status s = WriteFile(layout.ReportPath("json"), ReportToJson(report)); !s.ok()) return s;
  if (absl::Status s = WriteFile(layout.ReportPath("csv"), RenderCsvReport(report)); !s.ok()) return s;
  return WriteFile(layout.ReportPath("txt"), RenderTextReport(report));
}

std::string ManifestToJson(const RunManifest& m) {
  Json j{{"config_hash", m.config_hash},
         {"toolkit_version", m.toolkit_version},
         {"started_at", m.started_at},
         {"finished_at", m.finished_at},
         {"status", m.status},
         {"artifacts", m.artifacts}};
  if (!m.failed_stage.empty()) {
    j["failed_stage"] = m.failed_stage;
    j["error"] = m.error;
  }
  return j.dump(2) + "\n";
}

absl::StatusOr<RunOutcome> RunExperiment(const ExperimentConfig& config, const LogFn& log) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  const RunLayout layout{config.output_dir};
  if (absl::Status s = layout.CreateDirectories(); !s.ok()) return s;

  RunOutcome outcome;
  RunManifest& manifest = outcome.manifest;
  manifest.config_hash = ConfigHash(config);
  manifest.started_at = NowUtc();
  auto note = [&](const std::string& msg) {
    if (log) log(msg);
  };
  auto record = [&](const std::string& key, const std::string& path) {
    manifest.artifacts[key] = Relative(path, layout.root);
  };
  auto fail = [&](const std::string& stage, const absl::Status& status) -> absl::Status {
    manifest.status = "failed";
    manifest.failed_stage = stage;
    manifest.error = std::string(status.message());
    manifest.finished_at = NowUtc();
    // Best effort: the stage error is what the caller needs to see.
    WriteFile(layout.ManifestPath(), ManifestToJson(manifest)).IgnoreError();
    return absl::Status(status.code(), absl::StrCat("stage '", stage, "' failed: ", status.message()));
  };

  if (absl::Status s = WriteFile((fs::path(layout.root) / "config.json").string(),
                                 ExperimentConfigToJson(config));
      !s.ok()) {
    return fail("setup", s);
  }
  record("config", (fs::path(layout.root) / "config.json").string());

  note("generating corpus");
  if (absl::Status s = GenerateCorpusFiles(config, layout.CorpusPath(), layout.HeldoutPath()); !s.ok()) {
    return fail("generate", s);
  }
  record("corpus", layout.CorpusPath());
  record("heldout", layout.HeldoutPath());

  note("training baseline");
  absl::StatusOr<TrainResult> trained = TrainFromCorpusFile(
      config, layout.CorpusPath(), layout.BaselineCheckpoint(), layout.LossLogPath(), log);
  if (!trained.ok()) return fail("train", trained.status());
  record("checkpoint/baseline", layout.BaselineCheckpoint());
  record("log/train_loss", layout.LossLogPath());

  for (size_t level = 1; level <= config.levels.size(); ++level) {
    for (PruneStrategy strategy : config.strategies) {
      const PruneSpec spec{strategy, config.levels[level - 1]};
      note(absl::StrCat("pruning ", VariantStem(strategy, level)));
      absl::StatusOr<SparsityReport> sparsity = PruneCheckpointFile(
          spec, layout.BaselineCheckpoint(), layout.PrunedCheckpoint(strategy, level),
          layout.MaskPath(strategy, level), layout.SparsityPath(strategy, level));
      if (!sparsity.ok()) return fail("prune", sparsity.status());
      const std::string stem = VariantStem(strategy, level);
      record("checkpoint/" + stem, layout.PrunedCheckpoint(strategy, level));
      record("mask/" + stem, layout.MaskPath(strategy, level));
      record("sparsity/" + stem, layout.SparsityPath(strategy, level));
    }
  }

  note("auditing");
  absl::StatusOr<AuditReport> report = AuditCheckpointDir(config, layout.CorpusPath(),
                                                          layout.HeldoutPath(), layout.CheckpointDir());
  if (!report.ok()) return fail("audit", report.status());
  if (absl::Status s = WriteReports(*report, layout); !s.ok()) return fail("report", s);
  record("report/json", layout.ReportPath("json"));
  record("report/csv", layout.ReportPath("csv"));
  record("report/txt", layout.ReportPath("txt"));

  manifest.status = "complete";
  manifest.finished_at = NowUtc();
  if (absl::Status s = WriteFile(layout.ManifestPath(), ManifestToJson(manifest)); !s.ok()) {
    return fail("manifest", s);
  }
  outcome.report = std::move(*report);
  return outcome;
}

}  // namespace prunemem
