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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace s2s {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, sensor or scenario parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A coordinate or index outside the valid grid.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Operands that must share a GridConfig do not.
class IncompatibleGridError : public Error {
 public:
  using Error::Error;
};

/// Channel width or spatial dims disagree between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Wire message could not be decoded. `offset()` is the byte position at
/// which decoding failed.
class MalformedMessageError : public Error {
 public:
  MalformedMessageError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class WeightFileError : public Error {
 public:
  using Error::Error;
};

/// Scene, scenario or box-dump parse failure. Messages carry
/// `source:line: field: reason` diagnostics.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace s2s
