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

#ifndef OTBSS_SINKHORN_H_
#define OTBSS_SINKHORN_H_

#include <Eigen/Core>

namespace otbss {

// Symmetric, nonnegative, zero-diagonal transport cost between bins.
struct CostMatrix {
  Eigen::MatrixXd C;

  int size() const { return static_cast<int>(C.rows()); }
  // Throws ValidationError if C is not square, symmetric, zero-diagonal and
  // finite.
  void Validate() const;
};

struct SinkhornParams {
  double mu = 100.0;     // entropic regularization strength
  double gamma = 10.0;   // marginal relaxation weight
  int max_iter = 50;
  double tol = 1e-6;     // on the max relative change of the scalings
  double floor = 1e-30;  // masses and kernel entries

  // gamma mu / (1 + gamma mu), the exponent of the scaling fixed point.
  double exponent() const { return gamma * mu / (1.0 + gamma * mu); }
  void Validate() const;
};

// C_ij = ((i - j) / F)^2.
CostMatrix BuildCostSq(int bins);

// Kernel-vector products used by the scaling iteration, plus the log-domain
// products log(G exp(x)) used when the linear iteration leaves range. The
// log products shift x by its maximum; with every kernel entry floored, the
// largest term keeps each sum far from underflow.
class KernelOperator {
 public:
  virtual ~KernelOperator() = default;
  virtual int size() const = 0;
  virtual void Apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const = 0;
  virtual void ApplyTranspose(const Eigen::VectorXd& u,
                              Eigen::VectorXd& out) const = 0;
  virtual void LogApply(const Eigen::VectorXd& log_v,
                        Eigen::VectorXd& out) const = 0;
  virtual void LogApplyTranspose(const Eigen::VectorXd& log_u,
                                 Eigen::VectorXd& out) const = 0;
};

// Dense G = exp(-mu C - 1). Entries below `floor` are raised to it with a
// warning; log_matrix() is the log of the floored kernel.
class GibbsKernel : public KernelOperator {
 public:
  GibbsKernel(const CostMatrix& cost, double mu, double floor = 1e-30);
  // Takes an already formed kernel; ValidationError unless square, finite and
  // positive.
  explicit GibbsKernel(Eigen::MatrixXd kernel);

  const Eigen::MatrixXd& matrix() const { return G_; }
  const Eigen::MatrixXd& log_matrix() const { return log_G_; }

  int size() const override { return static_cast<int>(G_.rows()); }
  void Apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const override;
  void ApplyTranspose(const Eigen::VectorXd& u,
                      Eigen::VectorXd& out) const override;
  void LogApply(const Eigen::VectorXd& log_v,
                Eigen::VectorXd& out) const override;
  void LogApplyTranspose(const Eigen::VectorXd& log_u,
                         Eigen::VectorXd& out) const override;

 private:
  Eigen::MatrixXd G_;
  Eigen::MatrixXd log_G_;
};

// When used_log_domain is set, log_u and log_v are authoritative and u, v are
// their exponentials, which may have under- or overflowed.
struct Scalings {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd log_u;
  Eigen::VectorXd log_v;
  int iterations = 0;
  bool converged = false;
  bool used_log_domain = false;

  Eigen::VectorXd LogU() const;
  Eigen::VectorXd LogV() const;
  // u, v <- factor * u, factor * v.
  void Rescale(double factor);
};

// Unbalanced Sinkhorn fixed point for P = diag(u) G diag(v):
//   u <- (a / G v)^k,  v <- (b / G^T u)^k,  k = gamma mu / (1 + gamma mu),
// from u = v = 1 or from `warm_start`. a and b are floored at params.floor.
// Switches to the log domain when a scaling leaves [1e-150, 1e150] and stays
// there; a log-domain warm start resumes in the log domain unless its
// scalings are representable. Throws
// NumericError with the iteration index on a non-finite log scaling.
Scalings SinkhornScalings(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const KernelOperator& kernel,
                          const SinkhornParams& params,
                          const Scalings* warm_start = nullptr);

struct TransportSummary {
  Eigen::VectorXd row_marginal;  // P 1
  Eigen::VectorXd col_marginal;  // P^T 1
  // <P, C> - H(P) / mu + gamma KL(P1 | a) + gamma KL(P^T 1 | b); NaN when
  // not requested.
  double objective = 0.0;
};

constexpr int kMaxDensePlanBins = 256;

// Marginals of P = diag(u) G diag(v), and optionally the objective evaluated
// on the materialized plan (CapabilityError for more than 256 bins).
TransportSummary SummarizeTransport(const Scalings& s, const GibbsKernel& kernel,
                                    const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b,
                                    const CostMatrix& cost,
                                    const SinkhornParams& params,
                                    bool with_objective = true);

// Marginals through any kernel operator, no plan materialized.
void TransportMarginals(const Scalings& s, const KernelOperator& kernel,
                        Eigen::VectorXd& row, Eigen::VectorXd& col);

// The same objective from the scalings and marginals alone. Because
// log P_ij + mu C_ij = log u_i + log v_j - 1, the transport and entropy terms
// collapse to (sum_i r_i log u_i + sum_j c_j log v_j - sum_i r_i) / mu. Exact
// wherever the kernel was not floored.
double ObjectiveFromScalings(const Scalings& s, const Eigen::VectorXd& row,
                             const Eigen::VectorXd& col,
                             const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             const SinkhornParams& params);

// Generalized KL: sum x log(x / y) - x + y, with 0 log 0 = 0.
double KlDivergence(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Entropy -sum P log P over positive entries.
double PlanEntropy(const Eigen::MatrixXd& plan);

// Converged per-frame objective for masses a, b under cost C (dense plan).
double SinkhornDivergence(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const CostMatrix& cost, const SinkhornParams& params);

}  // namespace otbss

#endif  // OTBSS_SINKHORN_H_
