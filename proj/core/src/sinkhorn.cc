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

#include "otbss/sinkhorn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "otbss/error.h"
#include "otbss/log.h"

namespace otbss {
namespace {

constexpr double kUpperRange = 1e150;
constexpr double kLowerRange = 1e-150;

bool InRange(const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (!std::isfinite(v) || v > kUpperRange || v < kLowerRange) return false;
  }
  return true;
}

double MaxRelativeChange(const Eigen::VectorXd& next, const Eigen::VectorXd& prev) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    const double scale = std::max(std::abs(next[i]), std::abs(prev[i]));
    if (scale > 0.0) worst = std::max(worst, std::abs(next[i] - prev[i]) / scale);
  }
  return worst;
}

// out_i = log sum_j k(i, j) exp(x_j), shifted by max_j x_j.
void ShiftedLogApply(const Eigen::MatrixXd& k, const Eigen::VectorXd& x,
                     Eigen::VectorXd& out) {
  const double shift = x.maxCoeff();
  out.noalias() = k * (x.array() - shift).exp().matrix();
  out = (out.array().log() + shift).matrix();
}

// Log-domain continuation of the scaling iteration.
void LogDomainIterate(const Eigen::VectorXd& log_a, const Eigen::VectorXd& log_b,
                      const KernelOperator& kernel, const SinkhornParams& p,
                      Eigen::VectorXd& log_u, Eigen::VectorXd& log_v,
                      int first_iter, Scalings& result) {
  const double k = p.exponent();
  Eigen::VectorXd tmp;
  for (int it = first_iter; it <= p.max_iter; ++it) {
    kernel.LogApply(log_v, tmp);
    Eigen::VectorXd next_u = k * (log_a - tmp);
    kernel.LogApplyTranspose(next_u, tmp);
    Eigen::VectorXd next_v = k * (log_b - tmp);
    if (!next_u.allFinite() || !next_v.allFinite()) {
      throw NumericError("non-finite log-domain Sinkhorn scaling", it);
    }
    const double change = std::max((next_u - log_u).cwiseAbs().maxCoeff(),
                                   (next_v - log_v).cwiseAbs().maxCoeff());
    log_u = std::move(next_u);
    log_v = std::move(next_v);
    result.iterations = it;
    if (change < p.tol) {
      result.converged = true;
      break;
    }
  }
  result.u = log_u.array().exp().matrix();
  result.v = log_v.array().exp().matrix();
  result.log_u = std::move(log_u);
  result.log_v = std::move(log_v);
}

}  // namespace

void CostMatrix::Validate() const {
  if (C.rows() != C.cols()) throw ValidationError("cost matrix must be square");
  if (!C.allFinite()) throw ValidationError("cost matrix must be finite");
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    if (C(i, i) != 0.0) throw ValidationError("cost matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      if (C(i, j) < 0.0) throw ValidationError("cost matrix must be nonnegative");
      if (C(i, j) != C(j, i)) throw ValidationError("cost matrix must be symmetric");
    }
  }
}

void SinkhornParams::Validate() const {
  if (!(mu > 0.0)) throw ValidationError("Sinkhorn mu must be > 0");
  if (!(gamma > 0.0)) throw ValidationError("Sinkhorn gamma must be > 0");
  if (max_iter < 1) throw ValidationError("Sinkhorn max_iter must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("Sinkhorn tol must be > 0");
  if (!(floor > 0.0)) throw ValidationError("Sinkhorn floor must be > 0");
}

CostMatrix BuildCostSq(int bins) {
  if (bins < 1) throw ValidationError("cost matrix needs at least one bin");
  CostMatrix cost;
  cost.C.resize(bins, bins);
  for (int i = 0; i < bins; ++i) {
    for (int j = 0; j < bins; ++j) {
      const double d = static_cast<double>(i - j) / bins;
      cost.C(i, j) = d * d;
    }
  }
  return cost;
}

GibbsKernel::GibbsKernel(const CostMatrix& cost, double mu, double floor) {
  if (!(mu >= 0.0)) throw ValidationError("Gibbs kernel needs mu >= 0");
  if (cost.C.rows() != cost.C.cols()) throw ValidationError("cost matrix must be square");
  G_ = ((-mu * cost.C).array() - 1.0).exp();
  Eigen::Index floored = 0;
  for (Eigen::Index i = 0; i < G_.size(); ++i) {
    if (G_.data()[i] < floor) {
      G_.data()[i] = floor;
      ++floored;
    }
  }
  if (floored > 0) {
    Log().warn("Gibbs kernel: {} of {} entries below {:g} were floored (mu = {} "
               "is large for this cost scale)",
               floored, G_.size(), floor, mu);
  }
  log_G_ = G_.array().log();
}

GibbsKernel::GibbsKernel(Eigen::MatrixXd kernel) : G_(std::move(kernel)) {
  if (G_.rows() != G_.cols()) throw ValidationError("Gibbs kernel must be square");
  if (!G_.allFinite() || !(G_.array() > 0.0).all()) {
    throw ValidationError("Gibbs kernel entries must be finite and positive");
  }
  log_G_ = G_.array().log();
}

void GibbsKernel::Apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  out.noalias() = G_ * v;
}

void GibbsKernel::ApplyTranspose(const Eigen::VectorXd& u,
                                 Eigen::VectorXd& out) const {
  out.noalias() = G_.transpose() * u;
}

void GibbsKernel::LogApply(const Eigen::VectorXd& log_v,
                           Eigen::VectorXd& out) const {
  ShiftedLogApply(G_, log_v, out);
}

void GibbsKernel::LogApplyTranspose(const Eigen::VectorXd& log_u,
                                    Eigen::VectorXd& out) const {
  const double shift = log_u.maxCoeff();
  out.noalias() = G_.transpose() * (log_u.array() - shift).exp().matrix();
  out = (out.array().log() + shift).matrix();
}

Scalings SinkhornScalings(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const KernelOperator& kernel,
                          const SinkhornParams& params,
                          const Scalings* warm_start) {
  params.Validate();
  const int n = kernel.size();
  if (a.size() != n || b.size() != n) {
    throw ValidationError("Sinkhorn masses do not match the kernel size");
  }
  const double k = params.exponent();
  const Eigen::VectorXd log_a = a.cwiseMax(params.floor).array().log().matrix();
  const Eigen::VectorXd log_b = b.cwiseMax(params.floor).array().log().matrix();

  Scalings s;
  const bool warm_ok = warm_start != nullptr && warm_start->u.size() == n &&
                       warm_start->v.size() == n;
  if (warm_ok && warm_start->used_log_domain &&
      !(InRange(warm_start->u) && InRange(warm_start->v))) {
    Eigen::VectorXd log_u = warm_start->log_u;
    Eigen::VectorXd log_v = warm_start->log_v;
    s.used_log_domain = true;
    LogDomainIterate(log_a, log_b, kernel, params, log_u, log_v, 1, s);
    return s;
  }
  if (warm_ok && InRange(warm_start->u) && InRange(warm_start->v)) {
    s.u = warm_start->u;
    s.v = warm_start->v;
  } else {
    s.u = Eigen::VectorXd::Ones(n);
    s.v = Eigen::VectorXd::Ones(n);
  }

  Eigen::VectorXd kv(n), ktu(n), next_u(n), next_v(n);
  double prev_change = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= params.max_iter; ++it) {
    kernel.Apply(s.v, kv);
    next_u = (k * (log_a - kv.array().log().matrix())).array().exp().matrix();
    bool ok = InRange(next_u);
    if (ok) {
      kernel.ApplyTranspose(next_u, ktu);
      next_v = (k * (log_b - ktu.array().log().matrix())).array().exp().matrix();
      ok = InRange(next_v);
    }
    if (!ok) {
      Log().debug("Sinkhorn: scaling left linear range at iteration {}; "
                  "continuing in the log domain", it);
      Eigen::VectorXd log_u = s.u.array().log().matrix();
      Eigen::VectorXd log_v = s.v.array().log().matrix();
      s.used_log_domain = true;
      LogDomainIterate(log_a, log_b, kernel, params, log_u, log_v, it, s);
      return s;
    }
    const double change =
        std::max(MaxRelativeChange(next_u, s.u), MaxRelativeChange(next_v, s.v));
    s.u.swap(next_u);
    s.v.swap(next_v);
    s.iterations = it;
    if (it > 3 && change > prev_change) {
      Log().trace("Sinkhorn: scaling change grew at iteration {} ({:g} > {:g})",
                  it, change, prev_change);
    }
    prev_change = change;
    if (change < params.tol) {
      s.converged = true;
      break;
    }
  }
  return s;
}

Eigen::VectorXd Scalings::LogU() const {
  return used_log_domain ? log_u : Eigen::VectorXd(u.array().log().matrix());
}

Eigen::VectorXd Scalings::LogV() const {
  return used_log_domain ? log_v : Eigen::VectorXd(v.array().log().matrix());
}

void Scalings::Rescale(double factor) {
  u *= factor;
  v *= factor;
  if (used_log_domain) {
    const double shift = std::log(factor);
    log_u.array() += shift;
    log_v.array() += shift;
  }
}

void TransportMarginals(const Scalings& s, const KernelOperator& kernel,
                        Eigen::VectorXd& row, Eigen::VectorXd& col) {
  if (s.used_log_domain) {
    Eigen::VectorXd tmp;
    kernel.LogApply(s.log_v, tmp);
    row = (s.log_u + tmp).array().exp().matrix();
    kernel.LogApplyTranspose(s.log_u, tmp);
    col = (s.log_v + tmp).array().exp().matrix();
    return;
  }
  kernel.Apply(s.v, row);
  row = row.cwiseProduct(s.u);
  kernel.ApplyTranspose(s.u, col);
  col = col.cwiseProduct(s.v);
}

double KlDivergence(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw ValidationError("KL arguments differ in size");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) sum += x[i] * std::log(x[i] / y[i]);
    sum += y[i] - x[i];
  }
  return sum;
}

double PlanEntropy(const Eigen::MatrixXd& plan) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < plan.size(); ++i) {
    const double p = plan.data()[i];
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

TransportSummary SummarizeTransport(const Scalings& s, const GibbsKernel& kernel,
                                    const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b,
                                    const CostMatrix& cost,
                                    const SinkhornParams& params,
                                    bool with_objective) {
  TransportSummary out;
  TransportMarginals(s, kernel, out.row_marginal, out.col_marginal);
  if (!with_objective) {
    out.objective = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const int n = kernel.size();
  if (n > kMaxDensePlanBins) {
    throw CapabilityError("transport objective needs the dense plan; " +
                          std::to_string(n) + " bins exceeds " +
                          std::to_string(kMaxDensePlanBins));
  }
  Eigen::MatrixXd plan;
  if (s.used_log_domain) {
    plan = ((kernel.log_matrix().colwise() + s.log_u).rowwise() +
            s.log_v.transpose())
               .array()
               .exp()
               .matrix();
  } else {
    plan = s.u.asDiagonal() * kernel.matrix() * s.v.asDiagonal();
  }
  const Eigen::VectorXd af = a.cwiseMax(params.floor);
  const Eigen::VectorXd bf = b.cwiseMax(params.floor);
  out.objective = plan.cwiseProduct(cost.C).sum() - PlanEntropy(plan) / params.mu +
                  params.gamma * KlDivergence(out.row_marginal, af) +
                  params.gamma * KlDivergence(out.col_marginal, bf);
  return out;
}

double ObjectiveFromScalings(const Scalings& s, const Eigen::VectorXd& row,
                             const Eigen::VectorXd& col,
                             const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             const SinkhornParams& params) {
  const Eigen::VectorXd log_u = s.LogU();
  const Eigen::VectorXd log_v = s.LogV();
  double weighted = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row[i] > 0.0) weighted += row[i] * log_u[i];
    if (col[i] > 0.0) weighted += col[i] * log_v[i];
  }
  const double transport = (weighted - row.sum()) / params.mu;
  return transport +
         params.gamma * KlDivergence(row, a.cwiseMax(params.floor)) +
         params.gamma * KlDivergence(col, b.cwiseMax(params.floor));
}

double SinkhornDivergence(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const CostMatrix& cost, const SinkhornParams& params) {
  const GibbsKernel kernel(cost, params.mu, params.floor);
  const Scalings s = SinkhornScalings(a, b, kernel, params);
  return SummarizeTransport(s, kernel, a, b, cost, params).objective;
}

}  // namespace otbss
