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

#ifndef OTBSS_KRON_H_
#define OTBSS_KRON_H_

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "otbss/sinkhorn.h"

namespace otbss {

// F = f_1 * ... * f_Q. Flat bin index i maps to mixed-radix digits
// (i_1, ..., i_Q), most significant first (row-major in dims).
struct BinFactorization {
  std::vector<int> dims;

  int order() const { return static_cast<int>(dims.size()); }
  int total() const;
  // Stride of digit q in the flat index: prod_{q' > q} f_q'.
  int stride(int q) const;
  void Validate() const;
};

// Prime-factorizes F and greedily deals the primes (largest first) to the
// currently smallest of Q groups; factors are returned in descending order.
// FactorizationUnavailableError when F has fewer than Q prime factors.
BinFactorization FactorizeBins(int bins, int order);

// Kronecker-sum cost: factor q acts on digit q, C(i, j) = sum_q C_q(i_q, j_q).
struct KroneckerCost {
  BinFactorization dims;
  std::vector<Eigen::MatrixXd> factors;  // C_q, f_q x f_q
};

// C_q(i, j) = ((i - j) stride_q / F)^2, so the Kronecker sum at flat indices
// (i, j) is sum_q ((i_q - j_q) stride_q / F)^2: the squared bin distance with
// the cross-digit terms dropped. Q = 1 reproduces BuildCostSq.
KroneckerCost KronSumCost(const BinFactorization& dims);

constexpr int kMaxMaterializedBins = 1024;

// Dense cost C(i, j) = sum_q C_q(i_q, j_q) over every pair of flat indices,
// so that exp(-mu C) is the Kronecker product of the exp(-mu C_q).
// CapabilityError above 1024 bins.
CostMatrix MaterializeKronSum(const KroneckerCost& cost);

std::vector<int> FlatToDigits(int flat, const BinFactorization& dims);
int DigitsToFlat(std::span<const int> digits, const BinFactorization& dims);

// Order-Q tensor of shape dims holding a folded length-F vector.
struct FoldedTensor {
  BinFactorization dims;
  std::vector<double> data;  // row-major in dims

  double& at(std::span<const int> digits) { return data[DigitsToFlat(digits, dims)]; }
  double at(std::span<const int> digits) const {
    return data[DigitsToFlat(digits, dims)];
  }
};

FoldedTensor Fold(const Eigen::VectorXd& v, const BinFactorization& dims);
Eigen::VectorXd Unfold(const FoldedTensor& t);

// Mode-q product: out[.., i, ..] = sum_j m(i, j) t[.., j, ..].
FoldedTensor ModeProduct(const FoldedTensor& t, const Eigen::MatrixXd& m, int mode);

// G = e^{-1} (x)_q exp(-mu C_q), applied to vectors by folding and taking one
// mode product per factor; never forms the F x F matrix.
class FactorizedKernel : public KernelOperator {
 public:
  FactorizedKernel(const KroneckerCost& cost, double mu, double floor = 1e-30);

  const BinFactorization& dims() const { return dims_; }
  const std::vector<Eigen::MatrixXd>& kernels() const { return kernels_; }
  double scale() const { return scale_; }

  int size() const override { return total_; }
  void Apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const override;
  void ApplyTranspose(const Eigen::VectorXd& u,
                      Eigen::VectorXd& out) const override;
  void LogApply(const Eigen::VectorXd& log_v,
                Eigen::VectorXd& out) const override;
  void LogApplyTranspose(const Eigen::VectorXd& log_u,
                         Eigen::VectorXd& out) const override;

  // F * sum_q f_q: multiply-adds in one Apply.
  std::int64_t MultiplyAddsPerApply() const;
  // Multiply-adds actually executed by Apply/ApplyTranspose so far.
  std::int64_t multiply_adds() const { return counter_.load(); }
  void ResetCounter() { counter_.store(0); }

  // e^{-1} (x)_q G_q as a dense matrix, for tests and comparisons.
  Eigen::MatrixXd Dense() const;

 private:
  void ApplyModes(const Eigen::VectorXd& in, Eigen::VectorXd& out,
                  bool transpose) const;

  BinFactorization dims_;
  int total_ = 0;
  double scale_ = 0.0;
  std::vector<Eigen::MatrixXd> kernels_;      // exp(-mu C_q), floored
  std::vector<Eigen::MatrixXd> kernels_t_;
  mutable std::atomic<std::int64_t> counter_{0};
};

// u .* (G v) and v .* (G^T u) through the factorized kernel.
Eigen::VectorXd KronRowMarginal(const Eigen::VectorXd& u,
                                const FactorizedKernel& kernel,
                                const Eigen::VectorXd& v);
Eigen::VectorXd KronColMarginal(const Eigen::VectorXd& u,
                                const FactorizedKernel& kernel,
                                const Eigen::VectorXd& v);

}  // namespace otbss

#endif  // OTBSS_KRON_H_
