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

#ifndef OTBSS_SRC_FFT_H_
#define OTBSS_SRC_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace otbss::internal {

// Real-to-complex FFT of fixed length n backed by FFTW. Each instance owns its
// plans and buffers, so distinct instances can be used from different threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // in: n reals; out: n/2+1 bins. Unnormalized.
  void Forward(const double* in, std::complex<double>* out);
  // in: n/2+1 bins; out: n reals. Scaled by 1/n so Inverse(Forward(x)) = x.
  void Inverse(const std::complex<double>* in, double* out);

 private:
  std::size_t n_;
  double* real_;
  void* spec_;
  void* forward_;
  void* inverse_;
};

// Smallest power of two >= n.
std::size_t NextPow2(std::size_t n);

// Full linear convolution of a and b via FFT.
std::vector<double> FftConvolve(const std::vector<double>& a,
                                const std::vector<double>& b);

}  // namespace otbss::internal

#endif  // OTBSS_SRC_FFT_H_
