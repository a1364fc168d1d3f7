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


#include <random>

#include <Eigen/Core>
#include <benchmark/benchmark.h>

#include "otbss/signal_io.h"

namespace {

otbss::TimeSignal Noise(int channels, int length) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd s(channels, length);
  for (int i = 0; i < s.size(); ++i) s.data()[i] = g(rng);
  return {s, 16000};
}

void BM_Stft(benchmark::State& state) {
  const otbss::StftConfig cfg{static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(0)) / 4,
                              otbss::WindowType::kHann};
  const otbss::TimeSignal x = Noise(2, 48000);
  for (auto _ : state) {
    otbss::Spectrogram s = otbss::Stft(x, cfg);
    benchmark::DoNotOptimize(s.data[0].data());
  }
}
BENCHMARK(BM_Stft)->Arg(256)->Arg(1024);

void BM_StftRoundTrip(benchmark::State& state) {
  const otbss::StftConfig cfg{static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(0)) / 4,
                              otbss::WindowType::kHann};
  const otbss::TimeSignal x = Noise(2, 48000);
  for (auto _ : state) {
    otbss::TimeSignal y = otbss::Istft(otbss::Stft(x, cfg), cfg);
    benchmark::DoNotOptimize(y.samples.data());
  }
}
BENCHMARK(BM_StftRoundTrip)->Arg(256)->Arg(1024);

}  // namespace
