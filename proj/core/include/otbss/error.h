// Copyright 2026 The otbss Authors. All Rights Reserved.
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

#ifndef OTBSS_ERROR_H_
#define OTBSS_ERROR_H_

#include <stdexcept>
#include <string>

namespace otbss {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or argument check failed.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file is structurally broken (bad RIFF header, truncated chunk, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A well-formed file uses an encoding we do not read.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

// The requested computation exceeds what the chosen path can do, e.g. a dense
// transport plan for a large bin count.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Bin count has too few prime factors for the requested Kronecker order.
class FactorizationUnavailableError : public Error {
 public:
  using Error::Error;
};

// Source coincides with a microphone or another source.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

// An iteration produced a non-finite or singular intermediate. `iteration()`
// and the optional (source, index) pair locate where it happened; index is a
// frame for Sinkhorn failures and a frequency bin for demixing failures.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, int iteration = -1,
                        int source = -1, int index = -1);

  int iteration() const { return iteration_; }
  int source() const { return source_; }
  int index() const { return index_; }

  // Copy with source/index filled in, keeping the iteration.
  NumericError WithLocation(int source, int index) const;

 private:
  std::string base_;
  int iteration_;
  int source_;
  int index_;
};

}  // namespace otbss

#endif  // OTBSS_ERROR_H_
