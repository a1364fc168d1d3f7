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

#ifndef OTBSS_SIGNAL_IO_H_
#define OTBSS_SIGNAL_IO_H_

#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace otbss {

// Multichannel real signal, one row per channel.
struct TimeSignal {
  Eigen::MatrixXd samples;  // channels x samples
  int sample_rate = 16000;

  TimeSignal() = default;
  TimeSignal(Eigen::MatrixXd s, int rate);

  int channels() const { return static_cast<int>(samples.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(samples.cols()); }

  // Throws ValidationError unless sample_rate > 0.
  void Validate() const;
};

enum class WavEncoding { kPcm16, kFloat32, kFloat64 };

TimeSignal ReadWav(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, const TimeSignal& sig,
              WavEncoding encoding = WavEncoding::kFloat32);

// Quantization used by the PCM16 writer: round(x * 32768), saturated.
std::int16_t QuantizePcm16(double x);

enum class WindowType { kHann, kRectangular };

struct StftConfig {
  int window_len = 1024;
  int hop = 256;
  WindowType window = WindowType::kHann;

  int fft_len() const { return window_len; }
  int num_bins() const { return window_len / 2 + 1; }

  // Power-of-two length, 0 < hop <= window_len, and constant overlap-add.
  void Validate() const;
};

// Analysis window (periodic Hann or boxcar) of cfg.window_len samples.
Eigen::VectorXd MakeWindow(const StftConfig& cfg);

// One-sided STFT coefficients, one F x T matrix per channel (or source).
struct Spectrogram {
  std::vector<Eigen::MatrixXcd> data;
  int window_len = 0;
  int hop = 0;
  int sample_rate = 0;
  std::size_t original_length = 0;

  int channels() const { return static_cast<int>(data.size()); }
  int bins() const { return data.empty() ? 0 : static_cast<int>(data[0].rows()); }
  int frames() const { return data.empty() ? 0 : static_cast<int>(data[0].cols()); }

  // Empty spectrogram with the same framing metadata as `like`.
  static Spectrogram LikeShape(const Spectrogram& like, int channels);
};

// Number of frames for a signal of `length` samples. The signal is preceded by
// window_len - hop zeros so every input sample is covered by the same number
// of frames, and followed by enough zeros to complete the last frame.
int NumFrames(std::size_t length, const StftConfig& cfg);

Spectrogram Stft(const TimeSignal& sig, const StftConfig& cfg);

// Weighted overlap-add synthesis normalized by the summed squared window,
// trimmed to spec.original_length.
TimeSignal Istft(const Spectrogram& spec, const StftConfig& cfg);

}  // namespace otbss

#endif  // OTBSS_SIGNAL_IO_H_
