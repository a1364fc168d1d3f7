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

#ifndef OTBSS_METRICS_H_
#define OTBSS_METRICS_H_

#include <vector>

#include "otbss/signal_io.h"

namespace otbss {

inline constexpr int kProjectionTaps = 512;
inline constexpr double kMetricClampDb = 100.0;

// Metrics indexed by reference; estimate permutation[j] is matched to
// reference j.
struct EvalResult {
  std::vector<double> sdr;
  std::vector<double> sir;
  std::vector<int> permutation;
  double clamp = kMetricClampDb;
  int size() const { return static_cast<int>(sdr.size()); }
};

// bss_eval decomposition with time-invariant 512-tap projection filters,
// aligned to the permutation with the largest mean SIR. Every signal is a
// single channel; lengths and rates must match.
EvalResult SdrSir(const std::vector<TimeSignal>& estimates,
                  const std::vector<TimeSignal>& references);

struct EvalDelta {
  std::vector<double> sdr;
  std::vector<double> sir;
};

// processed - unprocessed per reference. Clamped values are subtracted as is.
EvalDelta Improvement(const EvalResult& processed, const EvalResult& unprocessed);

// The unprocessed baseline: the reference-microphone mixture used as the
// estimate of every source.
EvalResult MixtureBaseline(const TimeSignal& mixture_channel,
                           const std::vector<TimeSignal>& references);

}  // namespace otbss

#endif  // OTBSS_METRICS_H_
