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

#ifndef PRUNEMEM_SRC_JSON_INTERNAL_H_
#define PRUNEMEM_SRC_JSON_INTERNAL_H_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/string_view.h"
#include "json.hpp"
#include "prunemem/model.h"

namespace prunemem::internal {

using Json = nlohmann::json;

inline absl::StatusOr<Json> ParseJson(absl::string_view text, absl::string_view what) {
  Json j = Json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat("malformed JSON in ", what));
  }
  return j;
}

// Typed field access on a JSON object with schema errors reported as
// InvalidArgument. Keys not consumed by any accessor are rejected by Finish().
class JsonObjectReader {
 public:
  JsonObjectReader(const Json& obj, std::string context)
      : obj_(obj), context_(std::move(context)) {
    if (!obj_.is_object()) status_ = Error("expected a JSON object");
  }

  bool Has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

  template <typename T>
  void Unsigned(const std::string& key, T& out, bool required = true) {
    const Json* v = Find(key, required);
    if (v == nullptr) return;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<int64_t>() >= 0)) {
      Fail(key, "expected a non-negative integer");
      return;
    }
    out = static_cast<T>(v->get<uint64_t>());
  }

  void Double(const std::string& key, double& out, bool required = true) {
    const Json* v = Find(key, required);
    if (v == nullptr) return;
    if (!v->is_number()) {
      Fail(key, "expected a number");
      return;
    }
    out = v->get<double>();
  }

  void String(const std::string& key, std::string& out, bool required = true) {
    const Json* v = Find(key, required);
    if (v == nullptr) return;
    if (!v->is_string()) {
      Fail(key, "expected a string");
      return;
    }
    out = v->get<std::string>();
  }

  void Bool(const std::string& key, bool& out, bool required = true) {
    const Json* v = Find(key, required);
    if (v == nullptr) return;
    if (!v->is_boolean()) {
      Fail(key, "expected a boolean");
      return;
    }
    out = v->get<bool>();
  }

  // Returns nullptr (and records an error if required) when absent.
  const Json* Raw(const std::string& key, bool required = true) { return Find(key, required); }

  void Fail(const std::string& key, absl::string_view message) {
    if (status_.ok()) status_ = Error(absl::StrCat("field '", key, "': ", message));
  }

  absl::Status Finish() {
    if (status_.ok() && obj_.is_object()) {
      for (auto it = obj_.begin(); it != obj_.end(); ++it) {
        if (!seen_.count(it.key())) return Error(absl::StrCat("unknown field '", it.key(), "'"));
      }
    }
    return status_;
  }

 private:
  const Json* Find(const std::string& key, bool required) {
    seen_.insert(key);
    if (!obj_.is_object()) return nullptr;
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) Fail(key, "missing");
      return nullptr;
    }
    return &*it;
  }

  absl::Status Error(absl::string_view message) const {
    return absl::InvalidArgumentError(absl::StrCat(context_, ": ", message));
  }

  const Json& obj_;
  std::string context_;
  std::set<std::string> seen_;
  absl::Status status_;
};

inline Json ModelConfigToJson(const ModelConfig& c) {
  return Json{{"vocab_size", c.vocab_size}, {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},       {"d_model", c.d_model},
              {"d_ff", c.d_ff},             {"max_seq_len", c.max_seq_len},
              {"seed", c.seed}};
}

inline absl::StatusOr<ModelConfig> ModelConfigFromJson(const Json& j, bool all_required = true) {
  ModelConfig c;
  JsonObjectReader r(j, "model config");
  r.Unsigned("vocab_size", c.vocab_size, all_required);
  r.Unsigned("n_layers", c.n_layers, all_required);
  r.Unsigned("n_heads", c.n_heads, all_required);
  r.Unsigned("d_model", c.d_model, all_required);
  r.Unsigned("d_ff", c.d_ff, all_required);
  r.Unsigned("max_seq_len", c.max_seq_len, all_required);
  r.Unsigned("seed", c.seed, all_required);
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (absl::Status s = c.Validate(); !s.ok()) return s;
  return c;
}

}  // namespace prunemem::internal

#endif  // PRUNEMEM_SRC_JSON_INTERNAL_H_
