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

#include "prunemem/report.h"

#include <algorithm>
#include <vector>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "json_internal.h"
#include "prunemem/pruning.h"

namespace prunemem {
namespace {

using internal::Json;

constexpr char kCsvHeader[] = "model,strategy,level,k,fraction,perplexity";

std::string FormatFraction(std::optional<double> v) {
  return v ? absl::StrFormat("%.4f", *v) : "n/a";
}

std::string FormatPerplexity(std::optional<double> v) {
  return v ? absl::StrFormat("%.2f", *v) : "n/a";
}

std::string FormatExact(double v) { return absl::StrFormat("%.17g", v); }

std::string ColumnLabel(const std::string& strategy) {
  if (strategy == kBaselineName) return "Baseline";
  absl::StatusOr<PruneStrategy> s = ParseStrategy(strategy);
  return s.ok() ? std::string(StrategyLabel(*s)) : strategy;
}

std::string SectionName(const AuditReport& report, size_t level) {
  const std::string pct = absl::StrFormat("%g%%", report.levels[level - 1] * 100.0);
  if (report.levels.size() == 2) {
    return absl::StrCat(level == 1 ? "Lesser Pruning" : "Higher Pruning", " (Level ", level, ", ",
                        pct, ")");
  }
  return absl::StrCat("Level ", level, " (", pct, ")");
}

std::string SubsetName(AuditSubset subset) {
  return subset == AuditSubset::kCanary ? "canaries" : "background";
}

// Rows of cells; a row with a single cell is a section heading spanning the
// table. First column left-aligned, the rest right-aligned.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void AddRow(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void AddSection(std::string title) { rows_.push_back({std::move(title)}); }

  std::string Render(const std::string& title) const {
    std::vector<size_t> widths(header_.size(), 0);
    auto widen = [&](const std::vector<std::string>& row) {
      if (row.size() != header_.size()) return;
      for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    };
    widen(header_);
    for (const auto& row : rows_) widen(row);
    size_t total = 0;
    for (size_t w : widths) total += w;
    total += 2 * (widths.size() - 1);

    std::string out = title + "\n";
    const std::string rule(total, '-');
    out += rule + "\n" + FormatRow(header_, widths) + "\n" + rule + "\n";
    for (size_t r = 0; r < rows_.size(); ++r) {
      const auto& row = rows_[r];
      if (row.size() == 1) {
        const size_t pad = row[0].size() < total ? (total - row[0].size()) / 2 : 0;
        if (r > 0) out += rule + "\n";
        out += std::string(pad, ' ') + row[0] + "\n" + rule + "\n";
      } else {
        out += FormatRow(row, widths) + "\n";
      }
    }
    out += rule + "\n";
    return out;
  }

 private:
  static std::string FormatRow(const std::vector<std::string>& row, const std::vector<size_t>& widths) {
    std::string line;
    for (size_t i = 0; i < row.size(); ++i) {
      if (i > 0) line += "  ";
      const std::string pad(widths[i] - row[i].size(), ' ');
      line += i == 0 ? row[i] + pad : pad + row[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> Columns(const AuditReport& report) {
  std::vector<std::string> cols = {kBaselineName};
  cols.insert(cols.end(), report.strategies.begin(), report.strategies.end());
  return cols;
}

std::vector<std::string> Header(const AuditReport& report, const std::string& first) {
  std::vector<std::string> header = {first};
  for (const std::string& c : Columns(report)) header.push_back(ColumnLabel(c));
  return header;
}

std::string AverageTable(const AuditReport& report, AuditSubset subset) {
  TextTable table(Header(report, "Models"));
  std::vector<std::string> row = {report.model};
  for (const std::string& c : Columns(report)) row.push_back(FormatFraction(report.Average(subset, c)));
  table.AddRow(std::move(row));
  return table.Render(absl::StrCat("Model-wise Average Fraction of Memorized Data (", SubsetName(subset),
                                   ")"));
}

std::string AveragePerplexityTable(const AuditReport& report) {
  TextTable table(Header(report, "Models"));
  std::vector<std::string> row = {report.model};
  for (const std::string& c : Columns(report)) row.push_back(FormatPerplexity(report.AveragePerplexity(c)));
  table.AddRow(std::move(row));
  return table.Render("Average perplexity values across both pruning levels");
}

std::string LevelPerplexityTable(const AuditReport& report, size_t level) {
  TextTable table(Header(report, "Models"));
  std::vector<std::string> row = {report.model};
  for (const std::string& c : Columns(report)) row.push_back(FormatPerplexity(report.Perplexity(c, level)));
  table.AddRow(std::move(row));
  std::string title;
  if (report.levels.size() == 2) {
    title = absl::StrFormat("Perplexity values for a %s level of pruning (Level %d, %g%%)",
                            level == 1 ? "lower" : "higher", level, report.levels[level - 1] * 100.0);
  } else {
    title = absl::StrCat("Perplexity values for ", SectionName(report, level));
  }
  return table.Render(title);
}

std::string ContextTable(const AuditReport& report, AuditSubset subset) {
  TextTable table(Header(report, "Context Length"));
  for (size_t level = 1; level <= report.levels.size(); ++level) {
    table.AddSection(SectionName(report, level));
    for (size_t k : report.context_lengths) {
      std::vector<std::string> row = {absl::StrCat(k)};
      for (const std::string& c : Columns(report)) {
        row.push_back(FormatFraction(report.Fraction(subset, c, level, k)));
      }
      table.AddRow(std::move(row));
    }
  }
  return table.Render(
      absl::StrCat("Fraction of Memorization for ", report.model, " (", SubsetName(subset), ")"));
}

Json CellsToJson(const SubsetResult& s) {
  Json cells = Json::array();
  for (const MemorizationCell& c : s.cells) {
    cells.push_back(Json{{"k", c.k},
                         {"extracted", c.extracted},
                         {"audited", c.audited},
                         {"skipped", c.skipped},
                         {"fraction", c.fraction}});
  }
  return Json{{"population", s.population}, {"sampled", s.sampled}, {"cells", cells}};
}

absl::Status SubsetFromJson(const Json* j, const std::string& where, SubsetResult& out) {
  if (j == nullptr) return absl::InvalidArgumentError(absl::StrCat(where, ": missing"));
  internal::JsonObjectReader r(*j, where);
  r.Unsigned("population", out.population);
  r.Unsigned("sampled", out.sampled);
  const Json* cells = r.Raw("cells");
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (!cells->is_array()) return absl::InvalidArgumentError(absl::StrCat(where, ": cells must be an array"));
  for (const Json& cj : *cells) {
    MemorizationCell c;
    internal::JsonObjectReader cr(cj, where + " cell");
    cr.Unsigned("k", c.k);
    cr.Unsigned("extracted", c.extracted);
    cr.Unsigned("audited", c.audited);
    cr.Unsigned("skipped", c.skipped);
    cr.Double("fraction", c.fraction);
    if (absl::Status s = cr.Finish(); !s.ok()) return s;
    out.cells.push_back(c);
  }
  return absl::OkStatus();
}

Json OptionalToJson(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

template <typename T>
absl::Status StringList(const Json* j, const std::string& what, std::vector<T>& out) {
  if (j == nullptr) return absl::OkStatus();
  if (!j->is_array()) return absl::InvalidArgumentError(absl::StrCat(what, " must be an array"));
  for (const Json& e : *j) {
    if (!e.is_string()) return absl::InvalidArgumentError(absl::StrCat(what, " entries must be strings"));
    out.push_back(e.get<std::string>());
  }
  return absl::OkStatus();
}

}  // namespace

std::string RenderTextReport(const AuditReport& report) {
  std::vector<std::string> blocks;
  blocks.push_back(absl::StrCat("Memorization audit: ", report.model, "\n", "suffix length ",
                                report.suffix_len, ", context lengths ",
                                absl::StrJoin(report.context_lengths, ", "), "\n"));
  blocks.push_back(AverageTable(report, AuditSubset::kCanary));
  blocks.push_back(AverageTable(report, AuditSubset::kBackground));
  blocks.push_back(AveragePerplexityTable(report));
  for (size_t level = 1; level <= report.levels.size(); ++level) {
    blocks.push_back(LevelPerplexityTable(report, level));
  }
  blocks.push_back(ContextTable(report, AuditSubset::kCanary));
  blocks.push_back(ContextTable(report, AuditSubset::kBackground));
  if (!report.warnings.empty()) {
    std::string w = "Warnings\n";
    for (const std::string& line : report.warnings) absl::StrAppend(&w, "  * ", line, "\n");
    blocks.push_back(w);
  }
  if (!report.footnotes.empty()) {
    std::string f = "Notes\n";
    for (size_t i = 0; i < report.footnotes.size(); ++i) {
      absl::StrAppend(&f, "  [", i + 1, "] ", report.footnotes[i], "\n");
    }
    blocks.push_back(f);
  }
  return absl::StrJoin(blocks, "\n");
}

std::string RenderCsvReport(const AuditReport& report) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (size_t level = 1; level <= report.levels.size(); ++level) {
    for (const std::string& c : Columns(report)) {
      const std::optional<double> ppl = report.Perplexity(c, level);
      for (size_t k : report.context_lengths) {
        const std::optional<double> f = report.Fraction(AuditSubset::kCanary, c, level, k);
        absl::StrAppend(&out, report.model, ",", c, ",", level, ",", k, ",",
                        f ? FormatExact(*f) : "", ",", ppl ? FormatExact(*ppl) : "", "\n");
      }
    }
  }
  return out;
}

ReportGrid GridFromReport(const AuditReport& report) {
  ReportGrid grid;
  for (size_t level = 1; level <= report.levels.size(); ++level) {
    for (const std::string& c : Columns(report)) {
      for (size_t k : report.context_lengths) {
        grid[{report.model, c, level, k}] =
            GridValue{report.Fraction(AuditSubset::kCanary, c, level, k), report.Perplexity(c, level)};
      }
    }
  }
  return grid;
}

absl::StatusOr<ReportGrid> ParseCsvReport(absl::string_view csv) {
  ReportGrid grid;
  std::vector<absl::string_view> lines = absl::StrSplit(csv, '\n', absl::SkipEmpty());
  if (lines.empty() || lines[0] != kCsvHeader) {
    return absl::InvalidArgumentError(absl::StrCat("CSV header must be '", kCsvHeader, "'"));
  }
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = absl::StrSplit(lines[i], ',');
    if (f.size() != 6) {
      return absl::InvalidArgumentError(absl::StrCat("CSV line ", i + 1, " has ", f.size(), " fields"));
    }
    size_t level = 0, k = 0;
    if (!absl::SimpleAtoi(f[2], &level) || !absl::SimpleAtoi(f[3], &k)) {
      return absl::InvalidArgumentError(absl::StrCat("CSV line ", i + 1, ": bad level or k"));
    }
    auto parse_opt = [&](const std::string& s, std::optional<double>& out) {
      if (s.empty()) return true;
      double v = 0.0;
      if (!absl::SimpleAtod(s, &v)) return false;
      out = v;
      return true;
    };
    GridValue value;
    if (!parse_opt(f[4], value.fraction) || !parse_opt(f[5], value.perplexity)) {
      return absl::InvalidArgumentError(absl::StrCat("CSV line ", i + 1, ": bad number"));
    }
    if (!grid.emplace(std::make_tuple(f[0], f[1], level, k), value).second) {
      return absl::InvalidArgumentError(absl::StrCat("CSV line ", i + 1, ": duplicate cell"));
    }
  }
  return grid;
}

std::string ReportToJson(const AuditReport& report) {
  Json variants = Json::array();
  for (const VariantResult& v : report.variants) {
    variants.push_back(Json{{"strategy", v.strategy},
                            {"level", v.level},
                            {"present", v.present},
                            {"perplexity", OptionalToJson(v.perplexity)},
                            {"canary", CellsToJson(v.canary)},
                            {"background", CellsToJson(v.background)}});
  }
  Json summary = Json::object();
  for (const std::string& c : Columns(report)) {
    summary[c] = Json{{"canary_average", OptionalToJson(report.Average(AuditSubset::kCanary, c))},
                      {"background_average", OptionalToJson(report.Average(AuditSubset::kBackground, c))},
                      {"perplexity_average", OptionalToJson(report.AveragePerplexity(c))}};
  }
  Json j{{"model", report.model},
         {"context_lengths", report.context_lengths},
         {"suffix_len", report.suffix_len},
         {"levels", report.levels},
         {"strategies", report.strategies},
         {"variants", variants},
         {"warnings", report.warnings},
         {"footnotes", report.footnotes},
         {"summary", summary}};
  return j.dump(1) + "\n";
}

absl::StatusOr<AuditReport> ReportFromJson(absl::string_view text) {
  absl::StatusOr<Json> j = internal::ParseJson(text, "audit report");
  if (!j.ok()) return j.status();
  AuditReport report;
  internal::JsonObjectReader r(*j, "audit report");
  r.String("model", report.model);
  const Json* ks = r.Raw("context_lengths");
  r.Unsigned("suffix_len", report.suffix_len);
  const Json* levels = r.Raw("levels");
  const Json* strategies = r.Raw("strategies");
  const Json* variants = r.Raw("variants");
  const Json* warnings = r.Raw("warnings", false);
  const Json* footnotes = r.Raw("footnotes", false);
  r.Raw("summary", false);  // derived; recomputed on output
  if (absl::Status s = r.Finish(); !s.ok()) return s;

  if (!ks->is_array() || !levels->is_array() || !variants->is_array()) {
    return absl::InvalidArgumentError("audit report: malformed arrays");
  }
  for (const Json& k : *ks) {
    if (!k.is_number_unsigned()) return absl::InvalidArgumentError("audit report: bad context length");
    report.context_lengths.push_back(k.get<size_t>());
  }
  for (const Json& l : *levels) {
    if (!l.is_number()) return absl::InvalidArgumentError("audit report: bad level");
    report.levels.push_back(l.get<double>());
  }
  if (absl::Status s = StringList(strategies, "strategies", report.strategies); !s.ok()) return s;
  if (absl::Status s = StringList(warnings, "warnings", report.warnings); !s.ok()) return s;
  if (absl::Status s = StringList(footnotes, "footnotes", report.footnotes); !s.ok()) return s;

  for (const Json& vj : *variants) {
    VariantResult v;
    internal::JsonObjectReader vr(vj, "audit report variant");
    vr.String("strategy", v.strategy);
    vr.Unsigned("level", v.level);
    vr.Bool("present", v.present);
    const Json* ppl = vr.Raw("perplexity");
    const Json* canary = vr.Raw("canary");
    const Json* background = vr.Raw("background");
    if (absl::Status s = vr.Finish(); !s.ok()) return s;
    if (ppl->is_number()) {
      v.perplexity = ppl->get<double>();
    } else if (!ppl->is_null()) {
      return absl::InvalidArgumentError("audit report: perplexity must be a number or null");
    }
    if (absl::Status s = SubsetFromJson(canary, "canary", v.canary); !s.ok()) return s;
    if (absl::Status s = SubsetFromJson(background, "background", v.background); !s.ok()) return s;
    report.variants.push_back(std::move(v));
  }
  return report;
}

}  // namespace prunemem
