// Copyright 2026 the bnclab authors
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

#ifndef BNCLAB_ERRORS_H_
#define BNCLAB_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bnclab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid sizes, out-of-range arguments, violated preconditions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Structurally well-formed input whose dimensions do not agree.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, uint64_t problem_digest)
      : Error(what), problem_digest_(problem_digest) {}
  uint64_t problem_digest() const { return problem_digest_; }

 private:
  uint64_t problem_digest_;
};

// An oracle was asked to do something it does not support (unbounded
// enumeration box, too many sign vectors, ...).
class RefusedError : public Error {
 public:
  using Error::Error;
};

}  // namespace bnclab

#endif  // BNCLAB_ERRORS_H_
