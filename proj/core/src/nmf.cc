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

#include "otbss/nmf.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "otbss/error.h"
#include "otbss/log.h"

namespace otbss {
namespace {

void CheckShapes(const NmfModel& model, const Eigen::MatrixXd& target) {
  if (model.W.cols() != model.H.rows()) {
    throw ValidationError("NMF basis and activation ranks differ");
  }
  if (target.rows() != model.W.rows() || target.cols() != model.H.cols()) {
    throw ValidationError("NMF target shape does not match the model");
  }
}

}  // namespace

NmfModel InitNmf(int bins, int frames, int rank, std::uint64_t seed,
                 double floor) {
  if (bins < 1 || frames < 1 || rank < 1) {
    throw ValidationError("NMF dimensions must be >= 1");
  }
  if (rank > std::min(bins, frames)) {
    Log().warn("NMF rank {} exceeds min(F, T) = {}; model is over-complete",
               rank, std::min(bins, frames));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // 1 - u is in (0, 1]; map affinely onto (floor, 1].
  auto draw = [&] { return floor + (1.0 - floor) * (1.0 - unit(rng)); };
  NmfModel m;
  m.floor = floor;
  m.W.resize(bins, rank);
  m.H.resize(rank, frames);
  for (Eigen::Index i = 0; i < m.W.size(); ++i) m.W.data()[i] = draw();
  for (Eigen::Index i = 0; i < m.H.size(); ++i) m.H.data()[i] = draw();
  return m;
}

Eigen::MatrixXd Variance(const NmfModel& model) {
  return (model.W * model.H).cwiseMax(model.floor);
}

double IsDivergence(const Eigen::MatrixXd& power, const Eigen::MatrixXd& lambda,
                    double floor) {
  if (power.rows() != lambda.rows() || power.cols() != lambda.cols()) {
    throw ValidationError("IS divergence arguments differ in shape");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < power.size(); ++i) {
    const double ratio = std::max(power.data()[i], floor) /
                         std::max(lambda.data()[i], floor);
    sum += ratio - std::log(ratio) - 1.0;
  }
  return sum;
}

NmfModel MultiplicativeUpdate(const NmfModel& model,
                              const Eigen::MatrixXd& target, UpdateForm form) {
  CheckShapes(model, target);
  const double eps = model.floor;
  const Eigen::MatrixXd p = target.cwiseMax(eps);
  NmfModel next = model;

  Eigen::MatrixXd lambda = Variance(next);
  Eigen::MatrixXd inv = lambda.cwiseInverse();
  Eigen::MatrixXd weighted = p.cwiseProduct(inv).cwiseProduct(inv);
  {
    const Eigen::MatrixXd num = weighted * next.H.transpose();
    Eigen::MatrixXd den;
    if (form == UpdateForm::kCorrected) {
      den = inv * next.H.transpose();
    } else {
      den = p.cwiseProduct(inv).rowwise().sum().replicate(1, next.rank());
    }
    next.W = next.W.cwiseProduct(num.cwiseQuotient(den.cwiseMax(eps)).cwiseSqrt())
                 .cwiseMax(eps);
  }

  lambda = Variance(next);
  inv = lambda.cwiseInverse();
  weighted = p.cwiseProduct(inv).cwiseProduct(inv);
  {
    const Eigen::MatrixXd num = next.W.transpose() * weighted;
    Eigen::MatrixXd den;
    if (form == UpdateForm::kCorrected) {
      den = next.W.transpose() * inv;
    } else {
      den = p.cwiseProduct(inv).colwise().sum().replicate(next.rank(), 1);
    }
    next.H = next.H.cwiseProduct(num.cwiseQuotient(den.cwiseMax(eps)).cwiseSqrt())
                 .cwiseMax(eps);
  }
  return next;
}

NmfModel IsUpdate(const NmfModel& model, const Eigen::MatrixXd& power) {
  return MultiplicativeUpdate(model, power, UpdateForm::kCorrected);
}

void SaveNmf(std::ostream& os, const NmfModel& model) {
  os << "nmf " << model.W.rows() << ' ' << model.W.cols() << ' '
     << model.H.cols() << ' ' << std::setprecision(17) << model.floor << '\n';
  auto dump = [&os](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) os << ' ';
        os << std::setprecision(17) << m(r, c);
      }
      os << '\n';
    }
  };
  dump(model.W);
  dump(model.H);
}

NmfModel LoadNmf(std::istream& is) {
  std::string tag;
  Eigen::Index f = 0, k = 0, t = 0;
  NmfModel m;
  if (!(is >> tag >> f >> k >> t >> m.floor) || tag != "nmf" || f < 1 || k < 1 ||
      t < 1) {
    throw FormatError("bad NMF dump header");
  }
  m.W.resize(f, k);
  m.H.resize(k, t);
  for (Eigen::Index r = 0; r < f; ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      if (!(is >> m.W(r, c))) throw FormatError("truncated NMF basis");
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < t; ++c)
      if (!(is >> m.H(r, c))) throw FormatError("truncated NMF activation");
  return m;
}

}  // namespace otbss
