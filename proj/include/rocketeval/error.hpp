// Copyright 2026 The RocketEval Authors.
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

#include <stdexcept>
#include <string>

namespace rocketeval {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: malformed files, broken invariants, bad configuration.
// The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed line in a line-delimited file.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A backend could not be reached or kept failing after all retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The backend is reachable but cannot serve the request at all (for example
// it does not return token log-probabilities). Never retried.
class BackendCapabilityError : public Error {
 public:
  using Error::Error;
};

// The model answered, but its output could not be turned into a judgment.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

// Too many per-request failures in a batch.
class FailureThresholdError : public Error {
 public:
  using Error::Error;
};

// An iterative fit did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace rocketeval
