// Copyright 2026 The Selftalk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SELFTALK_CHECKPOINT_H_
#define SELFTALK_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "json.hpp"
#include "selftalk/kernel.h"

namespace selftalk {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kCheckpointFormatVersion = 1;

// {"name": {"shape": [r, c], "data": [...]}, ...} in lexicographic order.
OrderedJson ParamsToJson(const ParamStore& store);

// Copies serialized values into an already-shaped store. Every parameter
// must be present with a matching shape; unknown names are errors.
void ParamsFromJson(const nlohmann::json& params, ParamStore& store);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& content);

// Serialized form of a checkpoint document, newline-terminated.
std::string DumpCheckpoint(const OrderedJson& doc);

}  // namespace selftalk

#endif  // SELFTALK_CHECKPOINT_H_
