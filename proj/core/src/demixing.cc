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

// Demixing-matrix operations shared by ILRMA and SDILRMA.

#include <cmath>
#include <complex>
#include <exception>
#include <mutex>

#include <Eigen/LU>

#include "otbss/error.h"
#include "otbss/log.h"
#include "otbss/separation.h"

namespace otbss {
namespace {

using Complex = std::complex<double>;

// M x T snapshot of all channels at one bin.
Eigen::MatrixXcd BinSlice(const Spectrogram& x, int bin) {
  Eigen::MatrixXcd s(x.channels(), x.frames());
  for (int m = 0; m < x.channels(); ++m) s.row(m) = x.data[m].row(bin);
  return s;
}

// Solves (D V) d = e_n and normalizes d^H V d = 1. Returns false when the
// system is numerically singular or the quadratic form is not positive.
bool SolveProjection(const Eigen::MatrixXcd& d_f, const Eigen::MatrixXcd& v,
                     int n, Eigen::VectorXcd& d) {
  const Eigen::MatrixXcd dv = d_f * v;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(dv);
  if (!(lu.rcond() > 1e-14)) return false;
  d = lu.solve(Eigen::VectorXcd::Unit(dv.rows(), n));
  const double q = (d.adjoint() * v * d)(0, 0).real();
  if (!(q > 0.0) || !d.allFinite()) return false;
  d /= std::sqrt(q);
  return true;
}

}  // namespace

DemixingMatrices InitDemixing(int mics, int sources, int bins) {
  if (sources < 1 || mics < 1 || bins < 1) {
    throw ValidationError("demixing dimensions must be >= 1");
  }
  if (sources > mics) {
    throw ValidationError("more sources than microphones is not supported");
  }
  DemixingMatrices d;
  d.D.assign(bins, Eigen::MatrixXcd::Identity(sources, mics));
  return d;
}

Spectrogram ApplyDemixing(const DemixingMatrices& demix, const Spectrogram& x) {
  if (demix.bins() != x.bins() || demix.mics() != x.channels()) {
    throw ValidationError("demixing matrices do not match the spectrogram");
  }
  Spectrogram y = Spectrogram::LikeShape(x, demix.sources());
  for (int f = 0; f < x.bins(); ++f) {
    const Eigen::MatrixXcd& d = demix.D[f];
    for (int n = 0; n < d.rows(); ++n) {
      for (int m = 0; m < d.cols(); ++m) {
        y.data[n].row(f) += d(n, m) * x.data[m].row(f);
      }
    }
  }
  return y;
}

std::vector<Eigen::MatrixXd> SourcePowers(const Spectrogram& y) {
  std::vector<Eigen::MatrixXd> p;
  p.reserve(y.channels());
  for (const auto& s : y.data) p.push_back(s.cwiseAbs2());
  return p;
}

Eigen::MatrixXcd WeightedCovariance(const Spectrogram& x,
                                    const Eigen::MatrixXd& lambda, int bin) {
  const Eigen::MatrixXcd xs = BinSlice(x, bin);
  const Eigen::RowVectorXd w = lambda.row(bin).cwiseInverse();
  const Eigen::MatrixXcd weighted = xs * w.asDiagonal();
  Eigen::MatrixXcd v = weighted * xs.adjoint() / static_cast<double>(x.frames());
  // Exactly Hermitian.
  return 0.5 * (v + v.adjoint());
}

DemixingMatrices IpUpdate(const DemixingMatrices& demix, const Spectrogram& x,
                          const std::vector<Eigen::MatrixXd>& lambdas) {
  const int n_src = demix.sources();
  if (n_src != demix.mics()) {
    throw ValidationError("iterative projection needs square demixing matrices");
  }
  if (static_cast<int>(lambdas.size()) != n_src || demix.bins() != x.bins() ||
      demix.mics() != x.channels()) {
    throw ValidationError("IP update: inconsistent shapes");
  }
  DemixingMatrices out = demix;
  std::exception_ptr failure;
  std::mutex failure_mutex;

#pragma omp parallel for schedule(static)
  for (int f = 0; f < x.bins(); ++f) {
    try {
      const Eigen::MatrixXcd xs = BinSlice(x, f);
      Eigen::MatrixXcd& d_f = out.D[f];
      for (int n = 0; n < n_src; ++n) {
        const Eigen::RowVectorXd w = lambdas[n].row(f).cwiseInverse();
        Eigen::MatrixXcd v = (xs * w.asDiagonal()) * xs.adjoint() /
                             static_cast<double>(x.frames());
        v = 0.5 * (v + v.adjoint());
        Eigen::VectorXcd d;
        if (!SolveProjection(d_f, v, n, d)) {
          const double delta = 1e-8 * v.trace().real() / v.rows();
          const Eigen::MatrixXcd reg =
              v + std::max(delta, 1e-300) *
                      Eigen::MatrixXcd::Identity(v.rows(), v.cols());
          if (!SolveProjection(d_f, reg, n, d)) {
            throw NumericError("singular demixing system", -1, n, f);
          }
        }
        d_f.row(n) = d.adjoint();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double IlrmaLogLikelihood(const Spectrogram& y,
                          const std::vector<Eigen::MatrixXd>& lambdas,
                          const DemixingMatrices& demix) {
  if (static_cast<int>(lambdas.size()) != y.channels()) {
    throw ValidationError("log-likelihood: one variance matrix per source needed");
  }
  double ll = 0.0;
  for (int n = 0; n < y.channels(); ++n) {
    const Eigen::ArrayXXd p = y.data[n].cwiseAbs2().array();
    const Eigen::ArrayXXd l = lambdas[n].array();
    ll -= (p / l + l.log()).sum();
  }
  const double frames = y.frames();
  for (const auto& d : demix.D) {
    const Complex det = (d * d.adjoint()).determinant();
    ll += frames * std::log(det.real());
  }
  return ll;
}

std::vector<double> Normalize(DemixingMatrices& demix,
                              std::vector<NmfModel>& models,
                              const Spectrogram& x) {
  if (static_cast<int>(models.size()) != demix.sources()) {
    throw ValidationError("normalize: one model per source needed");
  }
  const Spectrogram y = ApplyDemixing(demix, x);
  std::vector<double> rho(demix.sources(), 1.0);
  for (int n = 0; n < demix.sources(); ++n) {
    const double mean_power =
        y.data[n].cwiseAbs2().sum() / static_cast<double>(y.data[n].size());
    const double r = std::sqrt(mean_power);
    if (!(r > 0.0) || !std::isfinite(r)) {
      Log().warn("normalize: source {} has zero power; skipping", n);
      continue;
    }
    rho[n] = r;
    for (auto& d : demix.D) d.row(n) /= r;
    models[n].W /= r * r;
  }
  return rho;
}

Spectrogram BackProject(const Spectrogram& y, const DemixingMatrices& demix,
                        int ref_mic) {
  if (ref_mic < 0 || ref_mic >= demix.mics()) {
    throw ValidationError("reference microphone out of range");
  }
  if (demix.sources() != y.channels() || demix.bins() != y.bins()) {
    throw ValidationError("back-projection: inconsistent shapes");
  }
  Spectrogram out = Spectrogram::LikeShape(y, y.channels());
  bool warned = false;
  for (int f = 0; f < y.bins(); ++f) {
    const Eigen::MatrixXcd& d = demix.D[f];
    Eigen::MatrixXcd inv;
    bool singular = true;
    if (d.rows() == d.cols()) {
      const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(d);
      if (lu.rcond() > 1e-14) {
        inv = lu.inverse();
        singular = false;
      }
    }
    if (singular) {
      // Regularized left inverse (D^H D + delta I)^{-1} D^H; also the
      // pseudo-inverse route for non-square D.
      const Eigen::MatrixXcd dhd = d.adjoint() * d;
      const double delta = d.rows() == d.cols()
                               ? 1e-8 * dhd.trace().real() / dhd.rows()
                               : 0.0;
      if (d.rows() == d.cols() && !warned) {
        Log().warn("back-projection: singular demixing matrix at bin {}; "
                   "using a regularized inverse", f);
        warned = true;
      }
      if (d.rows() == d.cols()) {
        inv = (dhd + delta * Eigen::MatrixXcd::Identity(dhd.rows(), dhd.cols()))
                  .inverse() * d.adjoint();
      } else {
        inv = d.adjoint() * (d * d.adjoint()).inverse();
      }
    }
    for (int n = 0; n < y.channels(); ++n) {
      out.data[n].row(f) = inv(ref_mic, n) * y.data[n].row(f);
    }
  }
  return out;
}

}  // namespace otbss
