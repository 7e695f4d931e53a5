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

#ifndef PRUNEMEM_CHECKPOINT_H_
#define PRUNEMEM_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "prunemem/model.h"

namespace prunemem {

// Checkpoint layout, all integers little-endian:
//   8 bytes   magic "PMEMCKPT"
//   u32       format version (kCheckpointVersion)
//   u32       byte length of the JSON header
//   ...       UTF-8 JSON header: {"config": ModelConfig,
//             "tensors": [{"name", "rows", "cols", "offset"}, ...]}
//   ...       IEEE-754 float32 payloads in manifest order; "offset" is the
//             byte offset of each payload from the end of the header.
inline constexpr char kCheckpointMagic[8] = {'P', 'M', 'E', 'M', 'C', 'K', 'P', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const ModelParams& params);
absl::StatusOr<ModelParams> ParseCheckpoint(absl::string_view bytes);

absl::Status SaveCheckpoint(const ModelParams& params, const std::string& path);
absl::StatusOr<ModelParams> LoadCheckpoint(const std::string& path);

// Rounds every weight through float32, i.e. what a save/load cycle yields.
ModelParams RoundToCheckpointPrecision(const ModelParams& params);

// Whole-file helpers shared by the other on-disk formats.
absl::StatusOr<std::string> ReadFile(const std::string& path);
absl::Status WriteFile(const std::string& path, absl::string_view contents);

}  // namespace prunemem

#endif  // PRUNEMEM_CHECKPOINT_H_
