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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "otbss/error.h"
#include "otbss/room_sim.h"

namespace otbss {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Formant {
  double freq;
  double bandwidth;
  double gain;
};

double FormantGain(double f, const std::vector<Formant>& formants) {
  double g = 0.02;
  for (const auto& fm : formants) {
    const double z = (f - fm.freq) / fm.bandwidth;
    g += fm.gain * std::exp(-0.5 * z * z);
  }
  return g;
}

}  // namespace

std::vector<double> SynthSpeechLike(std::size_t length, int sample_rate,
                                    std::uint64_t seed) {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  std::vector<double> out(length, 0.0);
  if (length == 0) return out;

  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double fs = sample_rate;
  const double speaker_f0 = uniform(95.0, 230.0);

  std::size_t pos = static_cast<std::size_t>(uniform(0.0, 0.15) * fs);
  while (pos < length) {
    const std::size_t syl_len = static_cast<std::size_t>(uniform(0.12, 0.35) * fs);
    const std::size_t end = std::min(length, pos + syl_len);
    const bool voiced = uniform(0.0, 1.0) < 0.8;
    const double level = uniform(0.4, 1.0);

    if (voiced) {
      const double f0_start = speaker_f0 * uniform(0.85, 1.15);
      const double f0_end = f0_start * uniform(0.85, 1.15);
      const std::vector<Formant> formants = {
          {uniform(300.0, 850.0), uniform(60.0, 120.0), 1.0},
          {uniform(900.0, 2400.0), uniform(80.0, 160.0), 0.6},
          {uniform(2400.0, 3400.0), uniform(120.0, 220.0), 0.3},
      };
      const int harmonics =
          static_cast<int>(0.45 * fs / std::min(f0_start, f0_end));
      std::vector<double> phase(harmonics, 0.0);
      for (auto& p : phase) p = uniform(0.0, kTwoPi);
      double f0_phase = 0.0;
      for (std::size_t j = pos; j < end; ++j) {
        const double tau = static_cast<double>(j - pos) / syl_len;
        const double env = std::sin(std::numbers::pi * tau);
        const double f0 = f0_start + (f0_end - f0_start) * tau;
        f0_phase += kTwoPi * f0 / fs;
        double v = 0.0;
        for (int h = 1; h <= harmonics; ++h) {
          const double hf = h * f0;
          if (hf >= 0.45 * fs) break;
          v += FormantGain(hf, formants) / std::sqrt(static_cast<double>(h)) *
               std::sin(h * f0_phase + phase[h - 1]);
        }
        v += 0.03 * gauss(rng);  // breath
        out[j] = level * env * env * v;
      }
    } else {
      // Fricative: pre-emphasized white noise.
      double prev = 0.0;
      const double tilt = uniform(0.6, 0.95);
      for (std::size_t j = pos; j < end; ++j) {
        const double tau = static_cast<double>(j - pos) / syl_len;
        const double env = std::sin(std::numbers::pi * tau);
        const double w = gauss(rng);
        out[j] = 0.3 * level * env * env * (w - tilt * prev);
        prev = w;
      }
    }

    pos = end;
    const bool long_pause = uniform(0.0, 1.0) < 0.15;
    const double gap = long_pause ? uniform(0.3, 0.7) : uniform(0.04, 0.25);
    pos += static_cast<std::size_t>(gap * fs);
  }

  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(length));
  if (rms > 0.0) {
    for (double& v : out) v /= rms;
  }
  return out;
}

}  // namespace otbss
