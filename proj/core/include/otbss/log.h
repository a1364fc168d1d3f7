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

#ifndef OTBSS_LOG_H_
#define OTBSS_LOG_H_

#include <spdlog/spdlog.h>

namespace otbss {

// Library-wide logger. Verbosity is read once from the OTBSS_LOG environment
// variable (trace, debug, info, warn, error, off); the default is warn.
spdlog::logger& Log();

}  // namespace otbss

#endif  // OTBSS_LOG_H_
