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

#include "otbss/error.h"

#include <sstream>

namespace otbss {
namespace {

std::string Describe(const std::string& base, int iteration, int source,
                     int index) {
  std::ostringstream os;
  os << base;
  if (iteration >= 0) os << " [iteration " << iteration << "]";
  if (source >= 0) os << " [source " << source << "]";
  if (index >= 0) os << " [index " << index << "]";
  return os.str();
}

}  // namespace

NumericError::NumericError(const std::string& what, int iteration, int source,
                           int index)
    : Error(Describe(what, iteration, source, index)),
      base_(what),
      iteration_(iteration),
      source_(source),
      index_(index) {}

NumericError NumericError::WithLocation(int source, int index) const {
  return NumericError(base_, iteration_, source, index);
}

}  // namespace otbss
