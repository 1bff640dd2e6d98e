// Copyright 2026 The metricgen Authors.
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

#ifndef METRICGEN_ERRORS_H_
#define METRICGEN_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace metricgen {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed metric expression text.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected,
             const std::string& message);

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

// A well-formed expression that breaks a metric graph invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Some intermediate value of a metric evaluation was NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Bad dataset file content. line() is 1-based, 0 when not line related.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& message)
      : Error(message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Negative sampling could not find an unobserved item for a user.
class SamplerStall : public Error {
 public:
  using Error::Error;
};

// Training through a metric produced too many non-finite batches.
class DegenerateCandidate : public Error {
 public:
  using Error::Error;
};

class EmptyRelevant : public Error {
 public:
  using Error::Error;
};

class UnknownToken : public Error {
 public:
  using Error::Error;
};

}  // namespace metricgen

#endif  // METRICGEN_ERRORS_H_
