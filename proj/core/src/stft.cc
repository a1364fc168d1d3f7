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
#include <vector>

#include "fft.h"
#include "otbss/error.h"
#include "otbss/signal_io.h"

namespace otbss {

void StftConfig::Validate() const {
  if (window_len < 2 || (window_len & (window_len - 1)) != 0) {
    throw ValidationError("STFT window_len must be a power of two >= 2");
  }
  if (hop <= 0 || hop > window_len) {
    throw ValidationError("STFT hop must satisfy 0 < hop <= window_len");
  }
  // Constant overlap-add of the analysis window.
  const Eigen::VectorXd w = MakeWindow(*this);
  double first = 0.0;
  for (int n = 0; n < hop; ++n) {
    double sum = 0.0;
    for (int m = n; m < window_len; m += hop) sum += w[m];
    if (n == 0) first = sum;
    if (std::abs(sum - first) > 1e-10 * std::abs(first)) {
      throw ValidationError("STFT window/hop pair is not constant overlap-add");
    }
  }
}

Eigen::VectorXd MakeWindow(const StftConfig& cfg) {
  Eigen::VectorXd w(cfg.window_len);
  if (cfg.window == WindowType::kRectangular) {
    w.setOnes();
    return w;
  }
  for (int n = 0; n < cfg.window_len; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / cfg.window_len);
  }
  return w;
}

Spectrogram Spectrogram::LikeShape(const Spectrogram& like, int channels) {
  Spectrogram s;
  s.window_len = like.window_len;
  s.hop = like.hop;
  s.sample_rate = like.sample_rate;
  s.original_length = like.original_length;
  s.data.assign(channels, Eigen::MatrixXcd::Zero(like.bins(), like.frames()));
  return s;
}

int NumFrames(std::size_t length, const StftConfig& cfg) {
  const std::size_t pad = cfg.window_len - cfg.hop;
  return static_cast<int>((pad + length - 1) / cfg.hop) + 1;
}

Spectrogram Stft(const TimeSignal& sig, const StftConfig& cfg) {
  cfg.Validate();
  sig.Validate();
  if (sig.length() < 1) throw ValidationError("stft of an empty signal");

  const int n = cfg.window_len;
  const int frames = NumFrames(sig.length(), cfg);
  const std::size_t pad = n - cfg.hop;
  const Eigen::VectorXd w = MakeWindow(cfg);

  Spectrogram spec;
  spec.window_len = n;
  spec.hop = cfg.hop;
  spec.sample_rate = sig.sample_rate;
  spec.original_length = sig.length();
  spec.data.resize(sig.channels());

  internal::RealFft fft(n);
  std::vector<double> frame(n);
  for (int c = 0; c < sig.channels(); ++c) {
    Eigen::MatrixXcd& out = spec.data[c];
    out.resize(cfg.num_bins(), frames);
    for (int t = 0; t < frames; ++t) {
      const std::ptrdiff_t start =
          static_cast<std::ptrdiff_t>(t) * cfg.hop - static_cast<std::ptrdiff_t>(pad);
      for (int i = 0; i < n; ++i) {
        const std::ptrdiff_t j = start + i;
        const bool inside =
            j >= 0 && j < static_cast<std::ptrdiff_t>(sig.length());
        frame[i] = inside ? sig.samples(c, j) * w[i] : 0.0;
      }
      fft.Forward(frame.data(), out.col(t).data());
    }
  }
  return spec;
}

TimeSignal Istft(const Spectrogram& spec, const StftConfig& cfg) {
  cfg.Validate();
  if (spec.window_len != cfg.window_len || spec.hop != cfg.hop) {
    throw ValidationError("spectrogram framing does not match STFT config");
  }
  if (spec.bins() != cfg.num_bins()) {
    throw ValidationError("spectrogram bin count does not match STFT config");
  }
  if (spec.channels() > 0 &&
      spec.frames() < NumFrames(std::max<std::size_t>(spec.original_length, 1), cfg)) {
    throw ValidationError("spectrogram has too few frames for its length");
  }

  const int n = cfg.window_len;
  const std::size_t pad = n - cfg.hop;
  const std::size_t len = spec.original_length;
  const Eigen::VectorXd w = MakeWindow(cfg);

  // Sum of squared windows seen by each output sample.
  std::vector<double> norm(len, 0.0);
  for (int t = 0; t < spec.frames(); ++t) {
    const std::ptrdiff_t start =
        static_cast<std::ptrdiff_t>(t) * cfg.hop - static_cast<std::ptrdiff_t>(pad);
    for (int i = 0; i < n; ++i) {
      const std::ptrdiff_t j = start + i;
      if (j >= 0 && j < static_cast<std::ptrdiff_t>(len)) norm[j] += w[i] * w[i];
    }
  }

  TimeSignal out;
  out.sample_rate = spec.sample_rate;
  out.samples = Eigen::MatrixXd::Zero(spec.channels(), static_cast<Eigen::Index>(len));
  internal::RealFft fft(n);
  std::vector<double> frame(n);
  for (int c = 0; c < spec.channels(); ++c) {
    for (int t = 0; t < spec.frames(); ++t) {
      fft.Inverse(spec.data[c].col(t).data(), frame.data());
      const std::ptrdiff_t start =
          static_cast<std::ptrdiff_t>(t) * cfg.hop - static_cast<std::ptrdiff_t>(pad);
      for (int i = 0; i < n; ++i) {
        const std::ptrdiff_t j = start + i;
        if (j >= 0 && j < static_cast<std::ptrdiff_t>(len)) {
          out.samples(c, j) += frame[i] * w[i];
        }
      }
    }
    for (std::size_t j = 0; j < len; ++j) {
      if (norm[j] > 1e-12) out.samples(c, static_cast<Eigen::Index>(j)) /= norm[j];
    }
  }
  return out;
}

}  // namespace otbss
