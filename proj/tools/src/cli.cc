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

#include "prunemem_cli/cli.h"

#include <filesystem>
#include <functional>
#include <optional>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "prunemem/checkpoint.h"
#include "prunemem/experiment.h"
#include "prunemem/pruning.h"
#include "prunemem/report.h"

namespace prunemem::cli {
namespace {

namespace fs = std::filesystem;

// Thrown from subcommand bodies to select the usage exit code.
struct UsageError {
  std::string message;
};

int Fail(std::ostream& err, const absl::Status& status) {
  err << "error: " << status.message() << "\n";
  return kExitRuntimeError;
}

ExperimentConfig LoadConfigOrThrow(const std::string& path) {
  absl::StatusOr<ExperimentConfig> config = LoadExperimentConfig(path);
  if (!config.ok()) throw UsageError{std::string(config.status().message())};
  return *std::move(config);
}

std::string Sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension(suffix);
  return p.string();
}

absl::Status EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return absl::OkStatus();
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) return absl::PermissionDeniedError("cannot create " + parent.string() + ": " + ec.message());
  return absl::OkStatus();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"prunemem: memorization under magnitude pruning", "prunemem"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

  std::function<int()> action;
  const LogFn log = [&](const std::string& msg) {
    if (!quiet) err << msg << "\n" << std::flush;
  };

  // gen-corpus
  std::string gen_config, gen_out_dir;
  CLI::App* gen = app.add_subcommand("gen-corpus", "Generate training and held-out corpora");
  gen->add_option("--config", gen_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out-dir", gen_out_dir, "Output directory (default: config output_dir)");
  gen->callback([&] {
    action = [&] {
      ExperimentConfig config = LoadConfigOrThrow(gen_config);
      const RunLayout layout{gen_out_dir.empty() ? config.output_dir : gen_out_dir};
      if (absl::Status s = layout.CreateDirectories(); !s.ok()) return Fail(err, s);
      if (absl::Status s = GenerateCorpusFiles(config, layout.CorpusPath(), layout.HeldoutPath());
          !s.ok()) {
        return Fail(err, s);
      }
      out << layout.CorpusPath() << "\n" << layout.HeldoutPath() << "\n";
      return kExitOk;
    };
  });

  // train
  std::string train_config, train_corpus, train_out, train_loss;
  CLI::App* train = app.add_subcommand("train", "Train the baseline model on a corpus");
  train->add_option("--config", train_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--corpus", train_corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Output checkpoint")->required();
  train->add_option("--loss-log", train_loss, "Loss history JSON (optional)");
  train->callback([&] {
    action = [&] {
      ExperimentConfig config = LoadConfigOrThrow(train_config);
      for (const std::string& p : {train_out, train_loss}) {
        if (absl::Status s = EnsureParent(p); !p.empty() && !s.ok()) return Fail(err, s);
      }
      absl::StatusOr<TrainResult> result =
          TrainFromCorpusFile(config, train_corpus, train_out, train_loss, log);
      if (!result.ok()) return Fail(err, result.status());
      out << absl::StrFormat("final epoch loss %.6f\n", result->epoch_losses.back());
      return kExitOk;
    };
  });

  // prune
  std::string prune_strategy, prune_in, prune_out, prune_mask, prune_sparsity;
  double prune_fraction = 0.0;
  CLI::App* prune = app.add_subcommand("prune", "Apply one magnitude-pruning strategy");
  prune->add_option("--strategy", prune_strategy,
                    "layer-wise | global | global-attention | first-quarter | last-quarter")
      ->required();
  prune->add_option("--fraction", prune_fraction, "Fraction of in-scope weights to zero")->required();
  prune->add_option("--in", prune_in, "Input checkpoint")->required()->check(CLI::ExistingFile);
  prune->add_option("--out", prune_out, "Output checkpoint")->required();
  prune->add_option("--mask", prune_mask, "Mask output (default: <out>.mask)");
  prune->add_option("--sparsity", prune_sparsity, "Sparsity JSON (default: <out>.sparsity.json)");
  prune->callback([&] {
    action = [&] {
      absl::StatusOr<PruneStrategy> strategy = ParseStrategy(prune_strategy);
      if (!strategy.ok()) throw UsageError{std::string(strategy.status().message())};
      const PruneSpec spec{*strategy, prune_fraction};
      if (absl::Status s = spec.Validate(); !s.ok()) throw UsageError{std::string(s.message())};
      if (prune_mask.empty()) prune_mask = Sibling(prune_out, ".mask");
      if (prune_sparsity.empty()) prune_sparsity = Sibling(prune_out, ".sparsity.json");
      for (const std::string& p : {prune_out, prune_mask, prune_sparsity}) {
        if (absl::Status s = EnsureParent(p); !s.ok()) return Fail(err, s);
      }
      absl::StatusOr<SparsityReport> report =
          PruneCheckpointFile(spec, prune_in, prune_out, prune_mask, prune_sparsity);
      if (!report.ok()) return Fail(err, report.status());
      out << absl::StrFormat("scope %d weights, %d zero (%.4f)\n", report->scope_size,
                             report->scope_zeros, report->scope_fraction);
      return kExitOk;
    };
  });

  // audit
  std::string audit_config, audit_corpus, audit_heldout, audit_ckpts, audit_out;
  CLI::App* audit = app.add_subcommand("audit", "Audit baseline and pruned checkpoints");
  audit->add_option("--config", audit_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  audit->add_option("--corpus", audit_corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  audit->add_option("--heldout", audit_heldout, "Held-out JSONL")->required()->check(CLI::ExistingFile);
  audit->add_option("--checkpoints", audit_ckpts, "Directory with baseline.ckpt and pruned variants")
      ->required()
      ->check(CLI::ExistingDirectory);
  audit->add_option("--out", audit_out, "Report JSON output")->required();
  audit->callback([&] {
    action = [&] {
      ExperimentConfig config = LoadConfigOrThrow(audit_config);
      if (absl::Status s = EnsureParent(audit_out); !s.ok()) return Fail(err, s);
      absl::StatusOr<AuditReport> report =
          AuditCheckpointDir(config, audit_corpus, audit_heldout, audit_ckpts);
      if (!report.ok()) return Fail(err, report.status());
      if (absl::Status s = WriteFile(audit_out, ReportToJson(*report)); !s.ok()) return Fail(err, s);
      for (const std::string& w : report->warnings) err << "warning: " << w << "\n";
      return kExitOk;
    };
  });

  // report
  std::string report_in, report_format = "text", report_out;
  CLI::App* report = app.add_subcommand("report", "Render an audit report");
  report->add_option("--in", report_in, "Report JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--format", report_format, "text | csv | json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  report->add_option("--out", report_out, "Output file (default: stdout)");
  report->callback([&] {
    action = [&] {
      absl::StatusOr<std::string> text = ReadFile(report_in);
      if (!text.ok()) return Fail(err, text.status());
      absl::StatusOr<AuditReport> parsed = ReportFromJson(*text);
      if (!parsed.ok()) return Fail(err, parsed.status());
      std::string rendered;
      if (report_format == "csv") {
        rendered = RenderCsvReport(*parsed);
      } else if (report_format == "json") {
        rendered = ReportToJson(*parsed);
      } else {
        rendered = RenderTextReport(*parsed);
      }
      if (report_out.empty()) {
        out << rendered;
        return kExitOk;
      }
      if (absl::Status s = WriteFile(report_out, rendered); !s.ok()) return Fail(err, s);
      return kExitOk;
    };
  });

  // run-all
  std::string run_config, run_out_dir;
  CLI::App* run = app.add_subcommand("run-all", "Run the full pipeline from a config");
  run->add_option("--config", run_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", run_out_dir, "Override the config output_dir");
  run->callback([&] {
    action = [&] {
      ExperimentConfig config = LoadConfigOrThrow(run_config);
      if (!run_out_dir.empty()) config.output_dir = run_out_dir;
      absl::StatusOr<RunOutcome> outcome = RunExperiment(config, log);
      if (!outcome.ok()) return Fail(err, outcome.status());
      out << RenderTextReport(outcome->report);
      return kExitOk;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsageError;
  }
  try {
    return action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.message << "\n";
    return kExitUsageError;
  }
}

}  // namespace prunemem::cli
