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

#include <algorithm>
#include <cstring>

#include "absl/strings/str_cat.h"
#include "json_internal.h"
#include "prunemem/pruning.h"

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

std::string SerializeMask(const SparsityMask& mask) {
  Json tensors = Json::array();
  std::string payload;
  for (const TensorMask& m : mask.tensors) {
    const size_t kept = static_cast<size_t>(std::count(m.keep.begin(), m.keep.end(), 1));
    tensors.push_back(Json{{"name", TensorName(m.id)},
                           {"rows", m.rows},
                           {"cols", m.cols},
                           {"offset", payload.size()},
                           {"kept", kept}});
    std::string bits((m.keep.size() + 7) / 8, '\0');
    for (size_t i = 0; i < m.keep.size(); ++i) {
      if (m.keep[i]) bits[i / 8] = static_cast<char>(bits[i / 8] | (1u << (i % 8)));
    }
    payload += bits;
  }
  const std::string header = Json{{"strategy", std::string(StrategyName(mask.strategy))},
                                  {"fraction", mask.fraction},
                                  {"tensors", tensors}}
                                 .dump();
  std::string out(kMaskMagic, sizeof(kMaskMagic));
  AppendU32(out, kMaskVersion);
  AppendU32(out, static_cast<uint32_t>(header.size()));
  out += header;
  out += payload;
  return out;
}

absl::StatusOr<SparsityMask> ParseMask(absl::string_view bytes) {
  constexpr size_t kPreamble = sizeof(kMaskMagic) + 8;
  if (bytes.size() < kPreamble || std::memcmp(bytes.data(), kMaskMagic, sizeof(kMaskMagic)) != 0) {
    return absl::InvalidArgumentError("not a mask file: bad magic");
  }
  if (ReadU32(bytes.data() + 8) != kMaskVersion) {
    return absl::InvalidArgumentError("unsupported mask version");
  }
  const uint32_t header_len = ReadU32(bytes.data() + 12);
  if (bytes.size() < kPreamble + header_len) return absl::InvalidArgumentError("mask truncated");
  absl::StatusOr<Json> header = internal::ParseJson(bytes.substr(kPreamble, header_len), "mask header");
  if (!header.ok()) return header.status();

  SparsityMask mask;
  std::string strategy;
  internal::JsonObjectReader r(*header, "mask header");
  r.String("strategy", strategy);
  r.Double("fraction", mask.fraction);
  const Json* tensors = r.Raw("tensors");
  if (absl::Status s = r.Finish(); !s.ok()) return s;
  absl::StatusOr<PruneStrategy> parsed = ParseStrategy(strategy);
  if (!parsed.ok()) return parsed.status();
  mask.strategy = *parsed;
  if (!tensors->is_array()) return absl::InvalidArgumentError("mask tensors must be an array");

  const absl::string_view payload = bytes.substr(kPreamble + header_len);
  size_t expected_offset = 0;
  for (const Json& entry : *tensors) {
    std::string name;
    size_t offset = 0, kept = 0;
    TensorMask m{};
    internal::JsonObjectReader er(entry, "mask tensor");
    er.String("name", name);
    er.Unsigned("rows", m.rows);
    er.Unsigned("cols", m.cols);
    er.Unsigned("offset", offset);
    er.Unsigned("kept", kept);
    if (absl::Status s = er.Finish(); !s.ok()) return s;
    absl::StatusOr<TensorId> id = ParseTensorName(name);
    if (!id.ok()) return id.status();
    m.id = *id;
    const size_t n = m.rows * m.cols;
    const size_t nbytes = (n + 7) / 8;
    if (offset != expected_offset || payload.size() < offset + nbytes) {
      return absl::InvalidArgumentError(absl::StrCat("mask payload for ", name, " is malformed"));
    }
    m.keep.resize(n);
    size_t count = 0;
    for (size_t i = 0; i < n; ++i) {
      m.keep[i] = (static_cast<unsigned char>(payload[offset + i / 8]) >> (i % 8)) & 1u;
      count += m.keep[i];
    }
    if (count != kept) {
      return absl::InvalidArgumentError(absl::StrCat("mask for ", name, " has ", count,
                                                     " kept bits, header says ", kept));
    }
    expected_offset += nbytes;
    mask.tensors.push_back(std::move(m));
  }
  if (payload.size() != expected_offset) return absl::InvalidArgumentError("mask has trailing bytes");
  return mask;
}

}  // namespace prunemem
