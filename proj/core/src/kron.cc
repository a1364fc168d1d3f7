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

#include "otbss/kron.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "otbss/error.h"
#include "otbss/log.h"

namespace otbss {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<int> PrimeFactors(int n) {
  std::vector<int> primes;
  for (int p = 2; static_cast<long>(p) * p <= n; ++p) {
    while (n % p == 0) {
      primes.push_back(p);
      n /= p;
    }
  }
  if (n > 1) primes.push_back(n);
  return primes;
}

// Extents of the (pre, f_q, post) view of a row-major tensor.
void ModeExtents(const BinFactorization& dims, int mode, Eigen::Index& pre,
                 Eigen::Index& post) {
  pre = 1;
  post = 1;
  for (int q = 0; q < mode; ++q) pre *= dims.dims[q];
  for (int q = mode + 1; q < dims.order(); ++q) post *= dims.dims[q];
}

// out(p, i, s) = sum_j m(i, j) in(p, j, s).
void ApplyMode(const double* in, double* out, const Eigen::MatrixXd& m,
               Eigen::Index pre, Eigen::Index post) {
  const Eigen::Index f = m.rows();
  if (post == 1) {
    // All (pre x f) rows at once: out = in * m^T.
    Eigen::Map<const RowMajor> src(in, pre, f);
    Eigen::Map<RowMajor> dst(out, pre, f);
    dst.noalias() = src * m.transpose();
    return;
  }
  for (Eigen::Index p = 0; p < pre; ++p) {
    Eigen::Map<const RowMajor> src(in + p * f * post, f, post);
    Eigen::Map<RowMajor> dst(out + p * f * post, f, post);
    dst.noalias() = m * src;
  }
}

}  // namespace

int BinFactorization::total() const {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
}

int BinFactorization::stride(int q) const {
  int s = 1;
  for (int r = q + 1; r < order(); ++r) s *= dims[r];
  return s;
}

void BinFactorization::Validate() const {
  if (dims.empty()) throw ValidationError("bin factorization is empty");
  for (int d : dims) {
    if (d < 1) throw ValidationError("bin factors must be >= 1");
    if (order() >= 2 && d < 2) {
      throw ValidationError("bin factors must be >= 2 when Q >= 2");
    }
  }
}

BinFactorization FactorizeBins(int bins, int order) {
  if (bins < 1) throw ValidationError("bin count must be >= 1");
  if (order < 1) throw ValidationError("Kronecker order must be >= 1");
  if (order == 1) return BinFactorization{{bins}};
  std::vector<int> primes = PrimeFactors(bins);
  if (static_cast<int>(primes.size()) < order) {
    throw FactorizationUnavailableError(
        std::to_string(bins) + " bins cannot be split into " +
        std::to_string(order) + " factors");
  }
  std::sort(primes.rbegin(), primes.rend());
  std::vector<int> groups(order, 1);
  for (int p : primes) {
    *std::min_element(groups.begin(), groups.end()) *= p;
  }
  std::sort(groups.rbegin(), groups.rend());
  return BinFactorization{groups};
}

KroneckerCost KronSumCost(const BinFactorization& dims) {
  dims.Validate();
  const double total = dims.total();
  KroneckerCost cost;
  cost.dims = dims;
  for (int q = 0; q < dims.order(); ++q) {
    const int f = dims.dims[q];
    const int stride = dims.stride(q);
    Eigen::MatrixXd c(f, f);
    for (int i = 0; i < f; ++i) {
      for (int j = 0; j < f; ++j) {
        const double d = static_cast<double>((i - j) * stride) / total;
        c(i, j) = d * d;
      }
    }
    cost.factors.push_back(std::move(c));
  }
  return cost;
}

CostMatrix MaterializeKronSum(const KroneckerCost& cost) {
  const int total = cost.dims.total();
  if (total > kMaxMaterializedBins) {
    throw CapabilityError("materializing a " + std::to_string(total) +
                          "-bin Kronecker sum exceeds the limit of " +
                          std::to_string(kMaxMaterializedBins));
  }
  CostMatrix out;
  out.C = Eigen::MatrixXd::Zero(total, total);
  for (int i = 0; i < total; ++i) {
    const std::vector<int> di = FlatToDigits(i, cost.dims);
    for (int j = 0; j < total; ++j) {
      const std::vector<int> dj = FlatToDigits(j, cost.dims);
      for (int q = 0; q < cost.dims.order(); ++q) {
        out.C(i, j) += cost.factors[q](di[q], dj[q]);
      }
    }
  }
  return out;
}

std::vector<int> FlatToDigits(int flat, const BinFactorization& dims) {
  std::vector<int> digits(dims.order());
  for (int q = dims.order() - 1; q >= 0; --q) {
    digits[q] = flat % dims.dims[q];
    flat /= dims.dims[q];
  }
  return digits;
}

int DigitsToFlat(std::span<const int> digits, const BinFactorization& dims) {
  if (static_cast<int>(digits.size()) != dims.order()) {
    throw ValidationError("digit count does not match tensor order");
  }
  int flat = 0;
  for (int q = 0; q < dims.order(); ++q) {
    if (digits[q] < 0 || digits[q] >= dims.dims[q]) {
      throw ValidationError("tensor index out of range");
    }
    flat = flat * dims.dims[q] + digits[q];
  }
  return flat;
}

FoldedTensor Fold(const Eigen::VectorXd& v, const BinFactorization& dims) {
  dims.Validate();
  if (v.size() != dims.total()) {
    throw ValidationError("vector length " + std::to_string(v.size()) +
                          " does not match tensor size " +
                          std::to_string(dims.total()));
  }
  return FoldedTensor{dims, std::vector<double>(v.data(), v.data() + v.size())};
}

Eigen::VectorXd Unfold(const FoldedTensor& t) {
  if (static_cast<int>(t.data.size()) != t.dims.total()) {
    throw ValidationError("tensor data does not match its shape");
  }
  return Eigen::Map<const Eigen::VectorXd>(t.data.data(),
                                           static_cast<Eigen::Index>(t.data.size()));
}

FoldedTensor ModeProduct(const FoldedTensor& t, const Eigen::MatrixXd& m, int mode) {
  if (mode < 0 || mode >= t.dims.order()) throw ValidationError("mode out of range");
  if (m.rows() != t.dims.dims[mode] || m.cols() != t.dims.dims[mode]) {
    throw ValidationError("mode product needs a square factor of the mode size");
  }
  Eigen::Index pre, post;
  ModeExtents(t.dims, mode, pre, post);
  FoldedTensor out{t.dims, std::vector<double>(t.data.size())};
  ApplyMode(t.data.data(), out.data.data(), m, pre, post);
  return out;
}

FactorizedKernel::FactorizedKernel(const KroneckerCost& cost, double mu,
                                   double floor)
    : dims_(cost.dims), total_(cost.dims.total()), scale_(std::exp(-1.0)) {
  dims_.Validate();
  if (!(mu >= 0.0)) throw ValidationError("Gibbs kernel needs mu >= 0");
  if (static_cast<int>(cost.factors.size()) != dims_.order()) {
    throw ValidationError("Kronecker cost has the wrong number of factors");
  }
  Eigen::Index floored = 0;
  for (int q = 0; q < dims_.order(); ++q) {
    const Eigen::MatrixXd& c = cost.factors[q];
    if (c.rows() != dims_.dims[q] || c.cols() != dims_.dims[q]) {
      throw ValidationError("Kronecker cost factor has the wrong shape");
    }
    Eigen::MatrixXd k = (-mu * c).array().exp();
    for (Eigen::Index i = 0; i < k.size(); ++i) {
      if (k.data()[i] < floor) {
        k.data()[i] = floor;
        ++floored;
      }
    }
    kernels_t_.push_back(k.transpose());
    kernels_.push_back(std::move(k));
  }
  if (floored > 0) {
    Log().warn("factorized Gibbs kernel: {} factor entries below {:g} were floored",
               floored, floor);
  }
}

void FactorizedKernel::ApplyModes(const Eigen::VectorXd& in, Eigen::VectorXd& out,
                                  bool transpose) const {
  if (in.size() != total_) throw ValidationError("kernel apply: length mismatch");
  Eigen::VectorXd a = in;
  Eigen::VectorXd b(total_);
  std::int64_t ops = 0;
  for (int q = 0; q < dims_.order(); ++q) {
    Eigen::Index pre, post;
    ModeExtents(dims_, q, pre, post);
    if (transpose) {
      ApplyMode(a.data(), b.data(), kernels_t_[q], pre, post);
    } else {
      ApplyMode(a.data(), b.data(), kernels_[q], pre, post);
    }
    ops += static_cast<std::int64_t>(total_) * dims_.dims[q];
    a.swap(b);
  }
  counter_.fetch_add(ops, std::memory_order_relaxed);
  out = scale_ * a;
}

void FactorizedKernel::Apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  ApplyModes(v, out, false);
}

void FactorizedKernel::ApplyTranspose(const Eigen::VectorXd& u,
                                      Eigen::VectorXd& out) const {
  ApplyModes(u, out, true);
}

void FactorizedKernel::LogApply(const Eigen::VectorXd& log_v,
                                Eigen::VectorXd& out) const {
  const double shift = log_v.maxCoeff();
  ApplyModes((log_v.array() - shift).exp().matrix(), out, false);
  out = (out.array().log() + shift).matrix();
}

void FactorizedKernel::LogApplyTranspose(const Eigen::VectorXd& log_u,
                                         Eigen::VectorXd& out) const {
  const double shift = log_u.maxCoeff();
  ApplyModes((log_u.array() - shift).exp().matrix(), out, true);
  out = (out.array().log() + shift).matrix();
}

std::int64_t FactorizedKernel::MultiplyAddsPerApply() const {
  std::int64_t sum = 0;
  for (int d : dims_.dims) sum += d;
  return static_cast<std::int64_t>(total_) * sum;
}

Eigen::MatrixXd FactorizedKernel::Dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(1, 1, scale_);
  for (const Eigen::MatrixXd& k : kernels_) {
    Eigen::MatrixXd next(out.rows() * k.rows(), out.cols() * k.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        next.block(i * k.rows(), j * k.cols(), k.rows(), k.cols()) = out(i, j) * k;
      }
    }
    out.swap(next);
  }
  return out;
}

Eigen::VectorXd KronRowMarginal(const Eigen::VectorXd& u,
                                const FactorizedKernel& kernel,
                                const Eigen::VectorXd& v) {
  Eigen::VectorXd gv;
  kernel.Apply(v, gv);
  return u.cwiseProduct(gv);
}

Eigen::VectorXd KronColMarginal(const Eigen::VectorXd& u,
                                const FactorizedKernel& kernel,
                                const Eigen::VectorXd& v) {
  Eigen::VectorXd gtu;
  kernel.ApplyTranspose(u, gtu);
  return v.cwiseProduct(gtu);
}

}  // namespace otbss
