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

#ifndef PRUNEMEM_STATUS_MACROS_H_
#define PRUNEMEM_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define PRUNEMEM_STATUS_CONCAT_INNER_(a, b) a##b
#define PRUNEMEM_STATUS_CONCAT_(a, b) PRUNEMEM_STATUS_CONCAT_INNER_(a, b)

#define PRUNEMEM_RETURN_IF_ERROR(expr)          \
  do {                                          \
    const absl::Status _prunemem_st = (expr);   \
    if (!_prunemem_st.ok()) return _prunemem_st; \
  } while (0)

#define PRUNEMEM_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                    \
  if (!tmp.ok()) return tmp.status();                    \
  lhs = std::move(tmp).value()

// Usage: PRUNEMEM_ASSIGN_OR_RETURN(auto x, MaybeX());
#define PRUNEMEM_ASSIGN_OR_RETURN(lhs, rexpr) \
  PRUNEMEM_ASSIGN_OR_RETURN_IMPL_(            \
      PRUNEMEM_STATUS_CONCAT_(_prunemem_or_, __LINE__), lhs, rexpr)

#endif  // PRUNEMEM_STATUS_MACROS_H_
