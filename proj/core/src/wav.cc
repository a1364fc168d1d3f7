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

// RIFF/WAVE reader and writer for PCM16 and IEEE float (32/64-bit) data.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "otbss/error.h"
#include "otbss/signal_io.h"

namespace otbss {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
}

void PutTag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

template <typename T>
T LoadLe(const unsigned char* p) {
  // Bytes are little endian on disk; reassemble portably.
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  if constexpr (sizeof(T) == 4) {
    std::uint32_t b32 = static_cast<std::uint32_t>(bits);
    T v;
    std::memcpy(&v, &b32, 4);
    return v;
  } else {
    T v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
}

template <typename T>
void StoreLe(std::vector<unsigned char>& out, T v) {
  std::uint64_t bits = 0;
  if constexpr (sizeof(T) == 4) {
    std::uint32_t b32;
    std::memcpy(&b32, &v, 4);
    bits = b32;
  } else {
    std::memcpy(&bits, &v, 8);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFF));
  }
}

}  // namespace

TimeSignal::TimeSignal(Eigen::MatrixXd s, int rate)
    : samples(std::move(s)), sample_rate(rate) {
  Validate();
}

void TimeSignal::Validate() const {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
}

std::int16_t QuantizePcm16(double x) {
  const double scaled = std::round(x * 32768.0);
  if (scaled >= 32767.0) return 32767;
  if (scaled <= -32768.0) return -32768;
  return static_cast<std::int16_t>(scaled);
}

TimeSignal ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(name + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw FormatError(name + ": chunk extends past end of file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError(name + ": fmt chunk too short");
      const unsigned char* f = bytes.data() + body;
      format = ReadU16(f);
      channels = ReadU16(f + 2);
      rate = ReadU32(f + 4);
      block_align = ReadU16(f + 12);
      bits = ReadU16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(name + ": extensible fmt too short");
        format = ReadU16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw FormatError(name + ": missing fmt chunk");
  if (data == nullptr) throw FormatError(name + ": missing data chunk");
  if (channels == 0) throw FormatError(name + ": zero channels");
  if (rate == 0) throw FormatError(name + ": zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  const bool f64 = format == kFormatFloat && bits == 64;
  if (!pcm16 && !f32 && !f64) {
    throw UnsupportedFormatError(name + ": unsupported encoding (format " +
                                 std::to_string(format) + ", " +
                                 std::to_string(bits) + " bits)");
  }
  const std::size_t width = bits / 8;
  if (block_align != channels * width) {
    throw FormatError(name + ": inconsistent block alignment");
  }
  const std::size_t frames = data_size / block_align;

  Eigen::MatrixXd samples(channels, static_cast<Eigen::Index>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * block_align + c * width;
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(ReadU16(p)) / 32768.0;
      } else if (f32) {
        v = LoadLe<float>(p);
      } else {
        v = LoadLe<double>(p);
      }
      samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return TimeSignal(std::move(samples), static_cast<int>(rate));
}

void WriteWav(const std::filesystem::path& path, const TimeSignal& sig,
              WavEncoding encoding) {
  sig.Validate();
  if (sig.channels() < 1) throw ValidationError("signal has no channels");
  if (!sig.samples.allFinite()) {
    throw ValidationError("refusing to write non-finite samples to " +
                          path.string());
  }
  const std::uint16_t channels = static_cast<std::uint16_t>(sig.channels());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16   ? 16
                             : encoding == WavEncoding::kFloat32 ? 32
                                                                 : 64;
  const std::uint16_t format =
      encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint16_t block_align = channels * (bits / 8);
  const std::uint32_t frames = static_cast<std::uint32_t>(sig.length());
  const std::uint32_t data_size = frames * block_align;
  const bool is_float = format == kFormatFloat;
  const std::uint32_t fmt_size = is_float ? 18 : 16;

  std::vector<unsigned char> out;
  out.reserve(64 + data_size);
  PutTag(out, "RIFF");
  const std::uint32_t riff_size =
      4 + (8 + fmt_size) + (is_float ? 12 : 0) + 8 + data_size + (data_size & 1u);
  PutU32(out, riff_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, fmt_size);
  PutU16(out, format);
  PutU16(out, channels);
  PutU32(out, static_cast<std::uint32_t>(sig.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(sig.sample_rate) * block_align);
  PutU16(out, block_align);
  PutU16(out, bits);
  if (is_float) {
    PutU16(out, 0);  // cbSize
    PutTag(out, "fact");
    PutU32(out, 4);
    PutU32(out, frames);
  }
  PutTag(out, "data");
  PutU32(out, data_size);
  for (std::uint32_t i = 0; i < frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = sig.samples(c, i);
      switch (encoding) {
        case WavEncoding::kPcm16:
          PutU16(out, static_cast<std::uint16_t>(QuantizePcm16(v)));
          break;
        case WavEncoding::kFloat32:
          StoreLe<float>(out, static_cast<float>(v));
          break;
        case WavEncoding::kFloat64:
          StoreLe<double>(out, v);
          break;
      }
    }
  }
  if (data_size & 1u) out.push_back(0);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace otbss
