/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PSZ_ERROR_HPP_
#define PSZ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace psz {

// Numeric values double as process exit codes and C API status codes.
enum class ErrorKind : int {
  kInternal = 1,
  kConfig = 2,
  kDomain = 3,
  kNumerical = 4,
  kIo = 5,
  kFormat = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad parameters or inconsistent configuration.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

// Geometry/domain violations: points outside an area, empty zones,
// coincident source and receiver.
struct DomainError : Error {
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::kDomain, what) {}
};

// Singular systems, NaN losses, insufficient decay.
struct NumericalError : Error {
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

// Bad magic, unknown version, or header/shape mismatch in a data file.
struct FormatError : Error {
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::kFormat, what) {}
};

// Tensor shape mismatches and misuse of the autodiff graph.
struct StructuralError : Error {
  explicit StructuralError(const std::string& what)
      : Error(ErrorKind::kInternal, what) {}
};

}  // namespace psz

#endif  // PSZ_ERROR_HPP_
