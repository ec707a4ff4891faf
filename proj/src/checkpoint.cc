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

#include "selftalk/checkpoint.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "selftalk/errors.h"

namespace selftalk {

OrderedJson ParamsToJson(const ParamStore& store) {
  OrderedJson out = OrderedJson::object();
  for (const auto& [name, p] : store) {
    OrderedJson entry;
    entry["shape"] = {p.value.rows(), p.value.cols()};
    entry["data"] = p.value.data();
    out[name] = std::move(entry);
  }
  return out;
}

void ParamsFromJson(const nlohmann::json& params, ParamStore& store) {
  if (!params.is_object()) throw DataError("checkpoint params must be an object");
  for (const auto& [name, entry] : params.items()) {
    if (!store.contains(name)) throw DataError("unknown parameter " + name);
  }
  for (auto& [name, p] : store) {
    if (!params.contains(name)) throw DataError("missing parameter " + name);
    const auto& entry = params.at(name);
    const auto shape = entry.at("shape").get<std::vector<size_t>>();
    if (shape.size() != 2 || shape[0] != p.value.rows() ||
        shape[1] != p.value.cols()) {
      throw DataError("shape mismatch for parameter " + name);
    }
    auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != p.value.size()) {
      throw DataError("data length mismatch for parameter " + name);
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw DataError("non-finite value in " + name);
    }
    p.value.data() = std::move(data);
    p.grad.Fill(0.0);
  }
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

std::string DumpCheckpoint(const OrderedJson& doc) { return doc.dump() + "\n"; }

}  // namespace selftalk
