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

#include "otbss/metrics.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "fft.h"
#include "otbss/error.h"

namespace otbss {
namespace {

using Cplx = std::complex<double>;

double Db(double num, double den) {
  if (!(num > 0.0)) return -kMetricClampDb;
  if (!(den > num * 1e-10)) return kMetricClampDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricClampDb, kMetricClampDb);
}

Eigen::RowVectorXd Mono(const TimeSignal& s, const char* what, int index) {
  if (s.channels() != 1) {
    throw ValidationError(std::string(what) + " " + std::to_string(index) +
                          " must be single-channel");
  }
  return s.samples.row(0);
}

}  // namespace

EvalResult SdrSir(const std::vector<TimeSignal>& estimates,
                  const std::vector<TimeSignal>& references) {
  const int n = static_cast<int>(references.size());
  if (n < 1) throw ValidationError("sdr_sir needs at least one reference");
  if (static_cast<int>(estimates.size()) != n) {
    throw ValidationError("sdr_sir: " + std::to_string(estimates.size()) +
                          " estimates for " + std::to_string(n) + " references");
  }
  if (n > 8) throw ValidationError("sdr_sir supports at most 8 sources");
  const int len = static_cast<int>(references[0].length());
  const int rate = references[0].sample_rate;
  for (int i = 0; i < n; ++i) {
    for (const TimeSignal* s : {&references[i], &estimates[i]}) {
      if (static_cast<int>(s->length()) != len || s->sample_rate != rate) {
        throw ValidationError("sdr_sir: lengths and sample rates must match");
      }
    }
  }
  const int taps = kProjectionTaps;
  const std::size_t nfft = internal::NextPow2(static_cast<std::size_t>(len + taps));
  internal::RealFft fft(nfft);
  const std::size_t nb = fft.bins();

  auto spectrum = [&](const Eigen::RowVectorXd& x) {
    std::vector<double> buf(nfft, 0.0);
    std::copy(x.data(), x.data() + x.size(), buf.begin());
    std::vector<Cplx> out(nb);
    fft.Forward(buf.data(), out.data());
    return out;
  };
  // xcorr(p, q)[tau] = sum_t p[t] q[t + tau], stored modulo nfft.
  auto xcorr = [&](const std::vector<Cplx>& p, const std::vector<Cplx>& q) {
    std::vector<Cplx> prod(nb);
    for (std::size_t k = 0; k < nb; ++k) prod[k] = std::conj(p[k]) * q[k];
    std::vector<double> out(nfft);
    fft.Inverse(prod.data(), out.data());
    return out;
  };

  std::vector<std::vector<Cplx>> ref_spec(n), est_spec(n);
  std::vector<double> est_energy(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd r = Mono(references[i], "reference", i);
    if (!(r.squaredNorm() > 0.0)) {
      throw ValidationError("reference " + std::to_string(i) + " has zero energy");
    }
    ref_spec[i] = spectrum(r);
    const Eigen::RowVectorXd e = Mono(estimates[i], "estimate", i);
    est_energy[i] = e.squaredNorm();
    est_spec[i] = spectrum(e);
  }

  const int dim = n * taps;
  Eigen::MatrixXd gram(dim, dim);
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      const std::vector<double> r = xcorr(ref_spec[i], ref_spec[k]);
      for (int a = 0; a < taps; ++a) {
        for (int b = 0; b < taps; ++b) {
          const int lag = a - b;
          const double v = r[lag >= 0 ? lag : nfft + lag];
          gram(i * taps + a, k * taps + b) = v;
          gram(k * taps + b, i * taps + a) = v;
        }
      }
    }
  }
  const double ridge = 1e-12 * gram.trace() / dim;
  gram.diagonal().array() += ridge;

  std::vector<Eigen::VectorXd> proj(n);
  for (int j = 0; j < n; ++j) {
    proj[j].resize(dim);
    for (int i = 0; i < n; ++i) {
      const std::vector<double> r = xcorr(ref_spec[i], est_spec[j]);
      for (int a = 0; a < taps; ++a) proj[j](i * taps + a) = r[a];
    }
  }

  const Eigen::LDLT<Eigen::MatrixXd> all(gram);
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> single(n);
  for (int i = 0; i < n; ++i) {
    single[i].compute(gram.block(i * taps, i * taps, taps, taps));
  }

  // sdr(r, j), sir(r, j): estimate j against reference r.
  Eigen::MatrixXd sdr(n, n), sir(n, n);
#pragma omp parallel for
  for (int j = 0; j < n; ++j) {
    const double total = std::max(0.0, proj[j].dot(all.solve(proj[j])));
    for (int r = 0; r < n; ++r) {
      const Eigen::VectorXd d = proj[j].segment(r * taps, taps);
      const double target = std::max(0.0, d.dot(single[r].solve(d)));
      sdr(r, j) = Db(target, est_energy[j] - target);
      sir(r, j) = Db(target, total - target);
    }
  }

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double score = 0.0;
    for (int r = 0; r < n; ++r) score += sir(r, perm[r]);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  EvalResult out;
  out.permutation = best;
  for (int r = 0; r < n; ++r) {
    out.sdr.push_back(sdr(r, best[r]));
    out.sir.push_back(sir(r, best[r]));
  }
  return out;
}

EvalDelta Improvement(const EvalResult& processed, const EvalResult& unprocessed) {
  if (processed.size() != unprocessed.size() ||
      processed.sir.size() != unprocessed.sir.size()) {
    throw ValidationError("improvement: source counts differ");
  }
  EvalDelta d;
  for (int i = 0; i < processed.size(); ++i) {
    d.sdr.push_back(processed.sdr[i] - unprocessed.sdr[i]);
    d.sir.push_back(processed.sir[i] - unprocessed.sir[i]);
  }
  return d;
}

EvalResult MixtureBaseline(const TimeSignal& mixture_channel,
                           const std::vector<TimeSignal>& references) {
  std::vector<TimeSignal> est(references.size(), mixture_channel);
  return SdrSir(est, references);
}

}  // namespace otbss
