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

#ifndef OTBSS_ROOM_SIM_H_
#define OTBSS_ROOM_SIM_H_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "otbss/signal_io.h"

namespace otbss {

using Point3 = std::array<double, 3>;

struct RoomScene {
  Point3 dimensions{8.0, 8.0, 3.0};
  std::vector<Point3> source_positions;
  std::vector<Point3> mic_positions;
  double t60 = 0.0;
  // 0 selects a length long enough for the direct paths plus 1.25 * t60.
  int max_rir_len = 0;
  int sample_rate = 16000;
  double speed_of_sound = 343.0;
  // Seed for the source material associated with this scene.
  std::uint64_t seed = 0;

  int num_sources() const { return static_cast<int>(source_positions.size()); }
  int num_mics() const { return static_cast<int>(mic_positions.size()); }

  // Throws ValidationError on out-of-room positions, t60 < 0, empty arrays.
  void Validate() const;
  // max_rir_len if set, otherwise the default described above.
  int ResolvedRirLength() const;
};

// Impulse responses a_{nm}(j), one vector per (source, mic).
struct Rir {
  int num_sources = 0;
  int num_mics = 0;
  int sample_rate = 16000;
  std::vector<std::vector<double>> taps;  // index: source * num_mics + mic

  const std::vector<double>& at(int source, int mic) const {
    return taps[static_cast<std::size_t>(source) * num_mics + mic];
  }
  std::vector<double>& at(int source, int mic) {
    return taps[static_cast<std::size_t>(source) * num_mics + mic];
  }
  // Source `source` as an M-channel signal, for inspection.
  TimeSignal AsSignal(int source) const;
};

// Uniform wall absorption from Sabine's formula, 0.161 V / (S t60), clamped
// to (0, 1]. Returns nullopt for t60 == 0 (anechoic: no reflections).
std::optional<double> SabineAbsorption(const Point3& dimensions, double t60);

// Number of lattice periods per axis so that image amplitude falls 60 dB
// below the direct path, capped at 30.
int ImageOrder(double absorption);

constexpr int kSincTaps = 81;

// Image-source RIRs with windowed-sinc fractional delays.
Rir ImageSourceRir(const RoomScene& scene);

struct Mixture {
  TimeSignal mixture;               // M channels
  std::vector<TimeSignal> images;   // per source, M channels: a_nm * s_n
};

// x_m = sum_n a_nm * s_n, full convolution trimmed to the source length.
// The mixture is the exact sum of the returned images.
Mixture ConvolveMix(const std::vector<TimeSignal>& sources, const Rir& rir);

// A uniform linear array along x centered at `center` (default: the room
// center in plan at `height`), with sources on a circle of radius
// source_distance in the horizontal plane.
struct ArrayGeometry {
  Point3 dimensions{8.0, 8.0, 3.0};
  int num_mics = 2;
  double mic_spacing = 0.0566;
  double source_distance = 2.0;
  double height = 1.5;
  std::optional<Point3> center;
  void Validate() const;
};

// One source per angle, measured from broadside (+y) toward the array axis
// (+x). Validates the resulting scene.
RoomScene MakeArrayScene(const ArrayGeometry& geometry, double t60,
                         const std::vector<double>& angles_deg, std::uint64_t seed);

// Two mics 5.66 cm apart centered in an 8 x 8 x 3 m room, two sources 2 m from
// the array center at the given angles from broadside, everything at 1.5 m.
// angle1 in [0, 90], angle2 in [-90, 0] degrees.
RoomScene MakeSceneSisec(double t60, double angle1_deg, double angle2_deg,
                         std::uint64_t seed);

// Angles drawn uniformly from [0, 90] and [-90, 0] for the given seed.
std::array<double, 2> SampleSisecAngles(std::uint64_t seed);

// Reverberation time estimated from the Schroeder backward integral: a line
// fitted to the decay between -5 and -35 dB (or -25 dB when the curve is
// short) and extrapolated to -60 dB.
double SchroederT60(const std::vector<double>& rir, int sample_rate);

// Speech-like test material: syllable-gated harmonic tones with a gliding
// pitch and random formant envelope, mixed with shaped noise, separated by
// exact silences. Unit RMS over the whole signal. Deterministic per seed.
std::vector<double> SynthSpeechLike(std::size_t length, int sample_rate,
                                    std::uint64_t seed);

}  // namespace otbss

#endif  // OTBSS_ROOM_SIM_H_
