// Copyright 2026 The balanced-mc Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bmc {

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative method produces non-finite values or diverges.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        message_(what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }
  /// The description without the line prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t line_;
};

/// Input that parsed but is out of the admissible range (e.g. index bounds).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bmc
