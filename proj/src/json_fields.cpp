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

#include "s2s/detail/json_fields.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "s2s/errors.hpp"

namespace s2s::detail {

Json JsonContext::parse(std::string_view text) const {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source_ + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": syntax error");
  }
}

void JsonContext::fail(const std::string& path, const std::string& reason) const {
  throw ParseError(source_ + ": " + (path.empty() ? "/" : path) + ": " + reason);
}

const Json& JsonContext::require(const Json& obj, const std::string& path, const char* key) const {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing field");
  return *it;
}

double JsonContext::number(const Json& v, const std::string& path) const {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "expected a finite number");
  return d;
}

std::string JsonContext::string(const Json& v, const std::string& path) const {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::uint64_t JsonContext::uint(const Json& v, const std::string& path) const {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Eigen::Vector3d JsonContext::vec3(const Json& v, const std::string& path) const {
  if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
  return {number(v[0], path + "/0"), number(v[1], path + "/1"), number(v[2], path + "/2")};
}

Eigen::Vector4d JsonContext::vec4(const Json& v, const std::string& path) const {
  if (!v.is_array() || v.size() != 4) fail(path, "expected an array of 4 numbers");
  return {number(v[0], path + "/0"), number(v[1], path + "/1"), number(v[2], path + "/2"),
          number(v[3], path + "/3")};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace s2s::detail
