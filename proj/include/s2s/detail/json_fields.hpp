// Copyright 2026 The s2snet Authors
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

#pragma once

// Field accessors for the JSON file formats. Failures throw ParseError with
// `source: /json/pointer: reason`, or `source:line:col: reason` for syntax
// errors.

#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

namespace s2s::detail {

using Json = nlohmann::json;

class JsonContext {
 public:
  explicit JsonContext(std::string source) : source_(std::move(source)) {}

  /// Parses `text`, reporting syntax errors with line and column.
  Json parse(std::string_view text) const;

  [[noreturn]] void fail(const std::string& path, const std::string& reason) const;

  const Json& require(const Json& obj, const std::string& path, const char* key) const;
  double number(const Json& v, const std::string& path) const;
  std::string string(const Json& v, const std::string& path) const;
  std::uint64_t uint(const Json& v, const std::string& path) const;
  Eigen::Vector3d vec3(const Json& v, const std::string& path) const;
  Eigen::Vector4d vec4(const Json& v, const std::string& path) const;

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

std::string read_text_file(const std::string& path);

}  // namespace s2s::detail
