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

#include "prunemem/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "json_internal.h"

namespace prunemem {
namespace {

using internal::Json;

void AppendU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t ReadU32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

std::string SerializeCheckpoint(const ModelParams& params) {
  Json tensors = Json::array();
  uint64_t offset = 0;
  const std::vector<TensorId> ids = params.TensorIds();
  for (TensorId id : ids) {
    const Tensor2D& t = params.tensor(id);
    tensors.push_back(
        Json{{"name", TensorName(id)}, {"rows", t.rows()}, {"cols", t.cols()}, {"offset", offset}});
    offset += 4 * t.size();
  }
  const Json header{{"config", internal::ModelConfigToJson(params.config)}, {"tensors", tensors}};
  const std::string header_text = header.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  AppendU32(out, kCheckpointVersion);
  AppendU32(out, static_cast<uint32_t>(header_text.size()));
  out += header_text;
  out.reserve(out.size() + offset);
  for (TensorId id : ids) {
    for (double v : params.tensor(id).values()) {
      AppendU32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

absl::StatusOr<ModelParams> ParseCheckpoint(absl::string_view bytes) {
  constexpr size_t kPreamble = sizeof(kCheckpointMagic) + 8;
  if (bytes.size() < kPreamble ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    return absl::InvalidArgumentError("not a checkpoint: bad magic");
  }
  const uint32_t version = ReadU32(bytes.data() + 8);
  if (version != kCheckpointVersion) {
    return absl::InvalidArgumentError(absl::StrCat("unsupported checkpoint version ", version));
  }
  const uint32_t header_len = ReadU32(bytes.data() + 12);
  if (bytes.size() < kPreamble + header_len) {
    return absl::InvalidArgumentError("checkpoint truncated inside header");
  }
  absl::StatusOr<Json> header =
      internal::ParseJson(bytes.substr(kPreamble, header_len), "checkpoint header");
  if (!header.ok()) return header.status();
  if (!header->is_object() || !header->contains("config") || !header->contains("tensors") ||
      !(*header)["tensors"].is_array()) {
    return absl::InvalidArgumentError("checkpoint header lacks config or tensors");
  }
  absl::StatusOr<ModelConfig> config = internal::ModelConfigFromJson((*header)["config"]);
  if (!config.ok()) return config.status();
  absl::StatusOr<ModelParams> params = ModelParams::Zeros(*config);
  if (!params.ok()) return params.status();

  const absl::string_view payload = bytes.substr(kPreamble + header_len);
  const Json& manifest = (*header)["tensors"];
  const std::vector<TensorId> ids = params->TensorIds();
  if (manifest.size() != ids.size()) {
    return absl::InvalidArgumentError(absl::StrCat("checkpoint lists ", manifest.size(),
                                                   " tensors, model needs ", ids.size()));
  }
  uint64_t expected_offset = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    const Json& entry = manifest[i];
    std::string name;
    size_t rows = 0, cols = 0;
    uint64_t offset = 0;
    internal::JsonObjectReader r(entry, absl::StrCat("tensor manifest entry ", i));
    r.String("name", name);
    r.Unsigned("rows", rows);
    r.Unsigned("cols", cols);
    r.Unsigned("offset", offset);
    if (absl::Status s = r.Finish(); !s.ok()) return s;
    if (name != TensorName(ids[i])) {
      return absl::InvalidArgumentError(absl::StrCat("manifest entry ", i, " is '", name,
                                                     "', expected '", TensorName(ids[i]), "'"));
    }
    Tensor2D& t = params->tensor(ids[i]);
    if (rows != t.rows() || cols != t.cols()) {
      return absl::InvalidArgumentError(absl::StrCat("tensor ", name, " shape mismatch"));
    }
    if (offset != expected_offset) {
      return absl::InvalidArgumentError(absl::StrCat("tensor ", name, " has offset ", offset,
                                                     ", expected ", expected_offset));
    }
    if (payload.size() < offset + 4 * t.size()) {
      return absl::InvalidArgumentError(absl::StrCat("checkpoint truncated in tensor ", name));
    }
    const char* p = payload.data() + offset;
    for (double& v : t.values()) {
      v = static_cast<double>(std::bit_cast<float>(ReadU32(p)));
      p += 4;
    }
    expected_offset += 4 * t.size();
  }
  if (payload.size() != expected_offset) {
    return absl::InvalidArgumentError("checkpoint has trailing bytes");
  }
  if (absl::Status s = params->CheckConsistency(); !s.ok()) return s;
  return params;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return absl::DataLossError(absl::StrCat("read failed: ", path));
  return std::move(ss).str();
}

absl::Status WriteFile(const std::string& path, absl::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::Status SaveCheckpoint(const ModelParams& params, const std::string& path) {
  if (absl::Status s = params.CheckConsistency(); !s.ok()) return s;
  return WriteFile(path, SerializeCheckpoint(params));
}

absl::StatusOr<ModelParams> LoadCheckpoint(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFile(path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<ModelParams> params = ParseCheckpoint(*bytes);
  if (!params.ok()) {
    return absl::Status(params.status().code(),
                        absl::StrCat(path, ": ", params.status().message()));
  }
  return params;
}

ModelParams RoundToCheckpointPrecision(const ModelParams& params) {
  ModelParams out = params;
  for (TensorId id : out.TensorIds()) {
    for (double& v : out.tensor(id).values()) v = static_cast<double>(static_cast<float>(v));
  }
  return out;
}

}  // namespace prunemem
