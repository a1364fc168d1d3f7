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


#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <gtest/gtest.h>

#include "otbss/error.h"
#include "otbss/room_sim.h"

namespace otbss {
namespace {

constexpr double kPi = std::numbers::pi;

double Norm3(const Point3& a, const Point3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

TimeSignal Noise(int length, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  Eigen::MatrixXd s(1, length);
  for (int j = 0; j < length; ++j) s(0, j) = g(rng);
  return TimeSignal(s, 16000);
}

TEST(SabineTest, HandEvaluation) {
  const auto alpha = SabineAbsorption({8, 8, 3}, 0.3);
  ASSERT_TRUE(alpha.has_value());
  EXPECT_NEAR(*alpha, 0.161 * 192.0 / (224.0 * 0.3), 1e-12);
  EXPECT_NEAR(*alpha, 0.460, 5e-4);
}

TEST(SabineTest, LimitsAndScaling) {
  EXPECT_FALSE(SabineAbsorption({8, 8, 3}, 0.0).has_value());
  EXPECT_LT(*SabineAbsorption({8, 8, 3}, 1e9), 1e-9);
  EXPECT_NEAR(*SabineAbsorption({8, 8, 3}, 0.4), 0.5 * *SabineAbsorption({8, 8, 3}, 0.2),
              1e-15);
  EXPECT_EQ(*SabineAbsorption({8, 8, 3}, 0.01), 1.0);  // clamped
  EXPECT_THROW(SabineAbsorption({8, 8, 3}, -1.0), ValidationError);
  EXPECT_THROW(SabineAbsorption({0, 8, 3}, 0.3), ValidationError);
}

TEST(ImageSourceTest, AnechoicDirectPath) {
  RoomScene scene;
  scene.source_positions = {{2.0, 3.0, 1.5}};
  scene.mic_positions = {{4.0, 4.0, 1.5}, {5.0, 6.5, 1.2}};
  const Rir rir = ImageSourceRir(scene);
  for (int m = 0; m < 2; ++m) {
    const auto& h = rir.at(0, m);
    const double d = Norm3(scene.source_positions[0], scene.mic_positions[m]);
    const double delay = d / scene.speed_of_sound * scene.sample_rate;
    std::size_t peak = 0;
    double sum = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
      sum += h[j];
      if (std::abs(h[j]) > std::abs(h[peak])) peak = j;
    }
    EXPECT_LE(std::abs(static_cast<double>(peak) - delay), 0.5);
    // A windowed sinc has unit DC gain up to the window ripple.
    EXPECT_NEAR(sum * 4.0 * kPi * d, 1.0, 0.02);
    // Nothing outside the interpolation support.
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (std::abs(static_cast<double>(j) - delay) > kSincTaps / 2 + 1) {
        ASSERT_EQ(h[j], 0.0);
      }
    }
  }
}

TEST(ImageSourceTest, MirrorSymmetry) {
  // Mirror x -> 8 - x.
  RoomScene a;
  a.t60 = 0.3;
  a.source_positions = {{2.5, 3.0, 1.4}};
  a.mic_positions = {{4.7, 5.0, 1.6}};
  RoomScene b = a;
  b.source_positions = {{8.0 - 2.5, 3.0, 1.4}};
  b.mic_positions = {{8.0 - 4.7, 5.0, 1.6}};
  const Rir ra = ImageSourceRir(a), rb = ImageSourceRir(b);
  ASSERT_EQ(ra.at(0, 0).size(), rb.at(0, 0).size());
  double peak = 0.0;
  for (double v : ra.at(0, 0)) peak = std::max(peak, std::abs(v));
  for (std::size_t j = 0; j < ra.at(0, 0).size(); ++j) {
    ASSERT_NEAR(ra.at(0, 0)[j], rb.at(0, 0)[j], 1e-10 * peak) << j;
  }
}

TEST(ImageSourceTest, Deterministic) {
  const RoomScene scene = MakeSceneSisec(0.3, 30.0, -45.0, 5);
  const Rir a = ImageSourceRir(scene), b = ImageSourceRir(scene);
  EXPECT_EQ(a.taps, b.taps);
}

TEST(ImageSourceTest, DegenerateGeometry) {
  RoomScene scene;
  scene.source_positions = {{2.0, 2.0, 1.0}};
  scene.mic_positions = {{2.0, 2.0, 1.0}};
  EXPECT_THROW(ImageSourceRir(scene), DegenerateGeometryError);
  scene.mic_positions = {{9.0, 2.0, 1.0}};
  EXPECT_THROW(ImageSourceRir(scene), ValidationError);
}

TEST(ImageSourceTest, MaxLengthTruncates) {
  RoomScene scene = MakeSceneSisec(0.3, 10.0, -10.0, 0);
  scene.max_rir_len = 500;
  const Rir rir = ImageSourceRir(scene);
  for (const auto& h : rir.taps) EXPECT_LE(h.size(), 500u);
}

TEST(ImageSourceTest, SchroederDecayAtT60Point4) {
  const RoomScene scene = MakeSceneSisec(0.4, 40.0, -20.0, 0);
  const Rir rir = ImageSourceRir(scene);
  const double t60 = SchroederT60(rir.at(0, 0), scene.sample_rate);
  EXPECT_NEAR(t60, 0.4, 0.2 * 0.4);
}

TEST(ImageSourceTest, SchroederAcrossGrid) {
  for (double target : {0.2, 0.3, 0.4, 0.5, 0.6}) {
    const RoomScene scene = MakeSceneSisec(target, 40.0, -20.0, 0);
    const Rir rir = ImageSourceRir(scene);
    const double t60 = SchroederT60(rir.at(0, 0), scene.sample_rate);
    EXPECT_NEAR(t60, target, 0.2 * target) << "target " << target;
  }
}

TEST(ConvolveMixTest, UnitImpulses) {
  Rir rir;
  rir.num_sources = 2;
  rir.num_mics = 2;
  rir.taps.assign(4, std::vector<double>{1.0});
  const std::vector<TimeSignal> s = {Noise(300, 1), Noise(300, 2)};
  const Mixture mix = ConvolveMix(s, rir);
  for (int m = 0; m < 2; ++m) {
    for (int j = 0; j < 300; ++j) {
      ASSERT_NEAR(mix.mixture.samples(m, j), s[0].samples(0, j) + s[1].samples(0, j), 1e-14);
    }
  }
}

TEST(ConvolveMixTest, DelayedImpulse) {
  Rir rir;
  rir.num_sources = 1;
  rir.num_mics = 1;
  const int d = 17;
  rir.taps = {std::vector<double>(d + 1, 0.0)};
  rir.taps[0][d] = 1.0;
  const TimeSignal s = Noise(200, 3);
  const Mixture mix = ConvolveMix({s}, rir);
  ASSERT_EQ(mix.mixture.length(), 200u);
  for (int j = 0; j < 200; ++j) {
    const double expected = j < d ? 0.0 : s.samples(0, j - d);
    ASSERT_NEAR(mix.mixture.samples(0, j), expected, 1e-14);
  }
}

TEST(ConvolveMixTest, AdditiveAndLinear) {
  const RoomScene scene = MakeSceneSisec(0.2, 20.0, -60.0, 4);
  const Rir rir = ImageSourceRir(scene);
  const std::vector<TimeSignal> s = {Noise(4000, 5), Noise(4000, 6)};
  const Mixture mix = ConvolveMix(s, rir);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 4000);
  for (const auto& img : mix.images) sum += img.samples;
  EXPECT_EQ((mix.mixture.samples - sum).cwiseAbs().maxCoeff(), 0.0);

  // Linearity in the first source.
  const std::vector<TimeSignal> s2 = {TimeSignal(2.5 * s[0].samples, 16000), s[1]};
  const Mixture mix2 = ConvolveMix(s2, rir);
  const double err = (mix2.images[0].samples - 2.5 * mix.images[0].samples).cwiseAbs().maxCoeff();
  EXPECT_LT(err, 1e-12 * mix2.images[0].samples.cwiseAbs().maxCoeff());

  // Direct convolution oracle on a few samples.
  for (int m = 0; m < 2; ++m) {
    const auto& h = rir.at(1, m);
    for (int j : {0, 100, 2500, 3999}) {
      double acc = 0.0;
      for (int k = 0; k <= j && k < static_cast<int>(h.size()); ++k) {
        acc += h[k] * s[1].samples(0, j - k);
      }
      EXPECT_NEAR(mix.images[1].samples(m, j), acc, 1e-12);
    }
  }
}

TEST(ConvolveMixTest, Mismatch) {
  const Rir rir = ImageSourceRir(MakeSceneSisec(0.0, 20.0, -60.0, 4));
  EXPECT_THROW(ConvolveMix({Noise(100, 1)}, rir), ValidationError);
  EXPECT_THROW(ConvolveMix({Noise(100, 1), Noise(99, 2)}, rir), ValidationError);
  TimeSignal other = Noise(100, 2);
  other.sample_rate = 8000;
  EXPECT_THROW(ConvolveMix({Noise(100, 1), other}, rir), ValidationError);
}

TEST(SceneTest, SisecGeometry) {
  const RoomScene scene = MakeSceneSisec(0.0, 90.0, -30.0, 0);
  ASSERT_EQ(scene.num_mics(), 2);
  ASSERT_EQ(scene.num_sources(), 2);
  const Point3 center{4.0, 4.0, 1.5};
  EXPECT_NEAR(scene.mic_positions[0][0], 4.0 - 0.0283, 1e-12);
  EXPECT_NEAR(scene.mic_positions[1][0], 4.0 + 0.0283, 1e-12);
  for (const auto& m : scene.mic_positions) {
    EXPECT_NEAR(m[1], 4.0, 1e-12);
    EXPECT_NEAR(m[2], 1.5, 1e-12);
  }
  // 90 degrees lies on the array axis.
  EXPECT_NEAR(scene.source_positions[0][0], 6.0, 1e-12);
  EXPECT_NEAR(scene.source_positions[0][1], 4.0, 1e-12);
  EXPECT_NEAR(scene.source_positions[0][2], 1.5, 1e-12);
  EXPECT_NEAR(Norm3(scene.source_positions[1], center), 2.0, 1e-12);
  EXPECT_NEAR(scene.source_positions[1][0], 4.0 + 2.0 * std::sin(-kPi / 6), 1e-12);
  EXPECT_NEAR(scene.source_positions[1][1], 4.0 + 2.0 * std::cos(-kPi / 6), 1e-12);
}

TEST(SceneTest, AngleValidation) {
  EXPECT_THROW(MakeSceneSisec(0.0, 0.0, 0.0, 0), DegenerateGeometryError);
  EXPECT_THROW(MakeSceneSisec(0.0, 100.0, -10.0, 0), ValidationError);
  EXPECT_THROW(MakeSceneSisec(0.0, 10.0, 10.0, 0), ValidationError);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = SampleSisecAngles(seed);
    EXPECT_GE(a[0], 0.0);
    EXPECT_LE(a[0], 90.0);
    EXPECT_GE(a[1], -90.0);
    EXPECT_LE(a[1], 0.0);
  }
}

TEST(SynthTest, DeterministicWithUnitRms) {
  const auto a = SynthSpeechLike(16000, 16000, 3);
  const auto b = SynthSpeechLike(16000, 16000, 3);
  const auto c = SynthSpeechLike(16000, 16000, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  double energy = 0.0;
  for (double v : a) {
    ASSERT_TRUE(std::isfinite(v));
    energy += v * v;
  }
  EXPECT_NEAR(std::sqrt(energy / a.size()), 1.0, 1e-12);
}

}  // namespace
}  // namespace otbss
