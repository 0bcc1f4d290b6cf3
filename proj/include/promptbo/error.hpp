// Copyright 2026 The promptbo Authors. All Rights Reserved.
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
// =============================================================================

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promptbo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition (length mismatch, bad argument).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Partition could not be drawn (too few examples, single class).
class PartitionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky failure or non-positive pivot.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  explicit ExtractionError(std::string raw)
      : Error("no label token in response: \"" + raw + "\""), raw_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Backend failure while scoring a batch; names the example that failed.
class EvaluationError : public Error {
 public:
  EvaluationError(std::string example_id, const std::string& cause)
      : Error("evaluation failed on example " + example_id + ": " + cause),
        example_id_(std::move(example_id)) {}
  const std::string& example_id() const noexcept { return example_id_; }

 private:
  std::string example_id_;
};

class EditError : public Error {
 public:
  using Error::Error;
};

class ExpansionError : public Error {
 public:
  using Error::Error;
};

class ExpansionExhausted : public ExpansionError {
 public:
  using ExpansionError::ExpansionError;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : Error(key_path + ": " + what), key_path_(std::move(key_path)) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace promptbo
