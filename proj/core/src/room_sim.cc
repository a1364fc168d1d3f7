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

#include "otbss/room_sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fft.h"
#include "otbss/error.h"
#include "otbss/log.h"

namespace otbss {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSincHalf = kSincTaps / 2;  // 40

double Distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool InsideRoom(const Point3& p, const Point3& dims) {
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] > 0.0 && p[i] < dims[i])) return false;
  }
  return true;
}

// Adds amplitude * hann(x) * sinc(x), x = n - delay, to taps around `delay`.
// The window spans 81 taps; cos(pi x / 41) is expanded by angle addition so
// only one sin/cos pair is evaluated per image.
class SincStamp {
 public:
  SincStamp() {
    for (int k = -kSincHalf; k <= kSincHalf; ++k) {
      cos_k_[k + kSincHalf] = std::cos(kPi * k / (kSincHalf + 1));
      sin_k_[k + kSincHalf] = std::sin(kPi * k / (kSincHalf + 1));
    }
  }

  void Add(std::vector<double>& taps, double delay, double amplitude) const {
    const double base = std::floor(delay);
    const double frac = delay - base;
    const double sin_frac = std::sin(kPi * frac);
    const double cw = std::cos(kPi * frac / (kSincHalf + 1));
    const double sw = std::sin(kPi * frac / (kSincHalf + 1));
    const long b = static_cast<long>(base);
    const long len = static_cast<long>(taps.size());
    for (int k = -kSincHalf; k <= kSincHalf; ++k) {
      const long idx = b + k;
      if (idx < 0 || idx >= len) continue;
      const double x = k - frac;
      double sinc;
      if (std::abs(x) < 1e-12) {
        sinc = 1.0;
      } else {
        // sin(pi (k - frac)) = -(-1)^k sin(pi frac)
        const double s = (k % 2 == 0) ? -sin_frac : sin_frac;
        sinc = s / (kPi * x);
      }
      // cos(pi (k - frac) / 41)
      const double c = cos_k_[k + kSincHalf] * cw + sin_k_[k + kSincHalf] * sw;
      taps[idx] += amplitude * 0.5 * (1.0 + c) * sinc;
    }
  }

 private:
  std::array<double, kSincTaps> cos_k_{};
  std::array<double, kSincTaps> sin_k_{};
};

}  // namespace

void RoomScene::Validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(dimensions[i] > 0.0)) throw ValidationError("room dimensions must be positive");
  }
  if (source_positions.empty()) throw ValidationError("scene has no sources");
  if (mic_positions.empty()) throw ValidationError("scene has no microphones");
  if (!(t60 >= 0.0)) throw ValidationError("t60 must be >= 0");
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  if (!(speed_of_sound > 0.0)) throw ValidationError("speed_of_sound must be positive");
  if (max_rir_len < 0) throw ValidationError("max_rir_len must be >= 0");
  for (const auto& p : source_positions) {
    if (!InsideRoom(p, dimensions)) throw ValidationError("source outside the room");
  }
  for (const auto& p : mic_positions) {
    if (!InsideRoom(p, dimensions)) throw ValidationError("microphone outside the room");
  }
  for (std::size_t i = 0; i < source_positions.size(); ++i) {
    for (std::size_t j = i + 1; j < source_positions.size(); ++j) {
      if (Distance(source_positions[i], source_positions[j]) < 1e-6) {
        throw DegenerateGeometryError("two sources at the same position");
      }
    }
    for (const auto& m : mic_positions) {
      if (Distance(source_positions[i], m) < 1e-6) {
        throw DegenerateGeometryError("source coincides with a microphone");
      }
    }
  }
}

int RoomScene::ResolvedRirLength() const {
  if (max_rir_len > 0) return max_rir_len;
  double max_direct = 0.0;
  for (const auto& s : source_positions) {
    for (const auto& m : mic_positions) {
      max_direct = std::max(max_direct, Distance(s, m));
    }
  }
  const double direct_samples = max_direct / speed_of_sound * sample_rate;
  return static_cast<int>(std::ceil(direct_samples + 1.25 * t60 * sample_rate)) +
         kSincHalf + 1;
}

TimeSignal Rir::AsSignal(int source) const {
  std::size_t len = 0;
  for (int m = 0; m < num_mics; ++m) len = std::max(len, at(source, m).size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(num_mics, static_cast<Eigen::Index>(len));
  for (int m = 0; m < num_mics; ++m) {
    const auto& h = at(source, m);
    for (std::size_t j = 0; j < h.size(); ++j) s(m, static_cast<Eigen::Index>(j)) = h[j];
  }
  return TimeSignal(std::move(s), sample_rate);
}

std::optional<double> SabineAbsorption(const Point3& dimensions, double t60) {
  const double lx = dimensions[0], ly = dimensions[1], lz = dimensions[2];
  if (!(lx > 0 && ly > 0 && lz > 0)) throw ValidationError("room dimensions must be positive");
  if (!(t60 >= 0.0)) throw ValidationError("t60 must be >= 0");
  if (t60 == 0.0) return std::nullopt;
  const double volume = lx * ly * lz;
  const double surface = 2.0 * (lx * ly + lx * lz + ly * lz);
  double alpha = 0.161 * volume / (surface * t60);
  if (alpha > 1.0) {
    Log().warn("Sabine absorption {:.3f} > 1 for t60 = {} s; room too small, clamping to 1",
               alpha, t60);
    alpha = 1.0;
  }
  return alpha;
}

int ImageOrder(double absorption) {
  if (absorption >= 1.0) return 0;
  const double beta = std::sqrt(1.0 - absorption);
  if (beta <= 0.0) return 0;
  // beta^(2 N) <= 1e-3 along one axis.
  const double reflections = std::log(1e-3) / std::log(beta);
  return std::min(30, static_cast<int>(std::ceil(reflections / 2.0)));
}

Rir ImageSourceRir(const RoomScene& scene) {
  scene.Validate();
  const std::optional<double> alpha = SabineAbsorption(scene.dimensions, scene.t60);
  const double beta = alpha ? std::sqrt(1.0 - *alpha) : 0.0;
  const int order = alpha ? ImageOrder(*alpha) : 0;
  const int len = scene.ResolvedRirLength();
  const double fs = scene.sample_rate;
  const double c = scene.speed_of_sound;
  const Point3& room = scene.dimensions;
  const double max_dist = (len + kSincHalf) / fs * c;

  Rir rir;
  rir.num_sources = scene.num_sources();
  rir.num_mics = scene.num_mics();
  rir.sample_rate = scene.sample_rate;
  rir.taps.assign(static_cast<std::size_t>(rir.num_sources) * rir.num_mics,
                  std::vector<double>(len, 0.0));

  // beta^r for r up to the largest reflection count on one axis.
  std::vector<double> beta_pow(2 * order + 2, 1.0);
  for (std::size_t r = 1; r < beta_pow.size(); ++r) beta_pow[r] = beta_pow[r - 1] * beta;

  const SincStamp stamp;
  for (int n = 0; n < rir.num_sources; ++n) {
    const Point3& src = scene.source_positions[n];
    for (int m = 0; m < rir.num_mics; ++m) {
      const Point3& mic = scene.mic_positions[m];
      std::vector<double>& taps = rir.at(n, m);
      if (!alpha) {
        const double d = Distance(src, mic);
        stamp.Add(taps, d / c * fs, 1.0 / (4.0 * kPi * d));
        continue;
      }
      for (int qx = 0; qx <= 1; ++qx) {
        for (int nx = -order; nx <= order; ++nx) {
          const double ix = (1 - 2 * qx) * src[0] + 2.0 * nx * room[0] - mic[0];
          const int rx = std::abs(2 * nx - qx);
          if (std::abs(ix) > max_dist) continue;
          for (int qy = 0; qy <= 1; ++qy) {
            for (int ny = -order; ny <= order; ++ny) {
              const double iy = (1 - 2 * qy) * src[1] + 2.0 * ny * room[1] - mic[1];
              const int ry = std::abs(2 * ny - qy);
              if (ix * ix + iy * iy > max_dist * max_dist) continue;
              for (int qz = 0; qz <= 1; ++qz) {
                for (int nz = -order; nz <= order; ++nz) {
                  const double iz = (1 - 2 * qz) * src[2] + 2.0 * nz * room[2] - mic[2];
                  const double d = std::sqrt(ix * ix + iy * iy + iz * iz);
                  if (d > max_dist) continue;
                  const int rz = std::abs(2 * nz - qz);
                  const double gain = beta_pow[rx] * beta_pow[ry] * beta_pow[rz];
                  stamp.Add(taps, d / c * fs, gain / (4.0 * kPi * d));
                }
              }
            }
          }
        }
      }
    }
  }
  return rir;
}

Mixture ConvolveMix(const std::vector<TimeSignal>& sources, const Rir& rir) {
  if (static_cast<int>(sources.size()) != rir.num_sources) {
    throw ValidationError("number of sources does not match the RIR");
  }
  if (sources.empty()) throw ValidationError("no sources to mix");
  const std::size_t len = sources[0].length();
  for (const auto& s : sources) {
    if (s.channels() != 1) throw ValidationError("sources must be single channel");
    if (s.length() != len) throw ValidationError("sources differ in length");
    if (s.sample_rate != rir.sample_rate) {
      throw ValidationError("source sample rate does not match the RIR");
    }
  }

  Mixture out;
  out.mixture.sample_rate = rir.sample_rate;
  out.mixture.samples =
      Eigen::MatrixXd::Zero(rir.num_mics, static_cast<Eigen::Index>(len));
  for (int n = 0; n < rir.num_sources; ++n) {
    std::vector<double> s(sources[n].samples.data(),
                          sources[n].samples.data() + len);
    TimeSignal image;
    image.sample_rate = rir.sample_rate;
    image.samples = Eigen::MatrixXd::Zero(rir.num_mics, static_cast<Eigen::Index>(len));
    for (int m = 0; m < rir.num_mics; ++m) {
      const std::vector<double> y = internal::FftConvolve(s, rir.at(n, m));
      for (std::size_t j = 0; j < len; ++j) image.samples(m, static_cast<Eigen::Index>(j)) = y[j];
    }
    out.mixture.samples += image.samples;
    out.images.push_back(std::move(image));
  }
  return out;
}

void ArrayGeometry::Validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(dimensions[i] > 0.0)) throw ValidationError("room dimensions must be positive");
  }
  if (!(mic_spacing > 0.0)) throw ValidationError("mic_spacing must be positive");
  if (num_mics < 1) throw ValidationError("num_mics must be >= 1");
  if (!(source_distance > 0.0)) throw ValidationError("source_distance must be positive");
}

RoomScene MakeArrayScene(const ArrayGeometry& geometry, double t60,
                         const std::vector<double>& angles_deg, std::uint64_t seed) {
  geometry.Validate();
  if (angles_deg.empty()) throw ValidationError("at least one source angle is required");
  RoomScene scene;
  scene.dimensions = geometry.dimensions;
  scene.t60 = t60;
  scene.seed = seed;
  const Point3 center = geometry.center.value_or(
      Point3{geometry.dimensions[0] / 2.0, geometry.dimensions[1] / 2.0, geometry.height});
  const double first = -0.5 * (geometry.num_mics - 1) * geometry.mic_spacing;
  for (int m = 0; m < geometry.num_mics; ++m) {
    scene.mic_positions.push_back(
        {center[0] + first + m * geometry.mic_spacing, center[1], center[2]});
  }
  for (double deg : angles_deg) {
    if (!std::isfinite(deg)) throw ValidationError("source angles must be finite");
    const double a = deg * kPi / 180.0;
    // Broadside (0 deg) is +y; 90 deg points along the array axis (+x).
    scene.source_positions.push_back({center[0] + geometry.source_distance * std::sin(a),
                                      center[1] + geometry.source_distance * std::cos(a),
                                      center[2]});
  }
  scene.Validate();
  return scene;
}

RoomScene MakeSceneSisec(double t60, double angle1_deg, double angle2_deg,
                         std::uint64_t seed) {
  if (!(angle1_deg >= 0.0 && angle1_deg <= 90.0)) {
    throw ValidationError("angle1 must lie in [0, 90] degrees");
  }
  if (!(angle2_deg >= -90.0 && angle2_deg <= 0.0)) {
    throw ValidationError("angle2 must lie in [-90, 0] degrees");
  }
  return MakeArrayScene(ArrayGeometry{}, t60, {angle1_deg, angle2_deg}, seed);
}

std::array<double, 2> SampleSisecAngles(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> first(0.0, 90.0);
  std::uniform_real_distribution<double> second(-90.0, 0.0);
  const double a1 = first(rng);
  const double a2 = second(rng);
  return {a1, a2};
}

double SchroederT60(const std::vector<double>& rir, int sample_rate) {
  const std::size_t n = rir.size();
  std::vector<double> edc(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) edc[i] = edc[i + 1] + rir[i] * rir[i];
  if (!(edc[0] > 0.0)) throw ValidationError("impulse response has no energy");

  auto db = [&](std::size_t i) { return 10.0 * std::log10(edc[i] / edc[0]); };
  auto first_below = [&](double level) -> std::size_t {
    for (std::size_t i = 0; i < n; ++i) {
      if (edc[i] <= 0.0 || db(i) <= level) return i;
    }
    return n;
  };
  const std::size_t start = first_below(-5.0);
  std::size_t stop = first_below(-35.0);
  if (stop >= n) stop = first_below(-25.0);
  if (stop >= n || stop <= start + 1) {
    throw ValidationError("decay curve too short for a T60 estimate");
  }

  // Least-squares line through (i, dB(i)) on [start, stop).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double count = static_cast<double>(stop - start);
  for (std::size_t i = start; i < stop; ++i) {
    const double x = static_cast<double>(i), y = db(i);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  if (!(slope < 0.0)) throw ValidationError("decay curve is not decreasing");
  return -60.0 / slope / sample_rate;
}

}  // namespace otbss
