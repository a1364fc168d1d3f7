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

#ifndef OTBSS_NMF_H_
#define OTBSS_NMF_H_

#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

namespace otbss {

constexpr double kNmfFloor = 1e-12;

// Low-rank variance model lambda = W H for one source.
struct NmfModel {
  Eigen::MatrixXd W;  // F x K basis
  Eigen::MatrixXd H;  // K x T activation
  double floor = kNmfFloor;

  int bins() const { return static_cast<int>(W.rows()); }
  int rank() const { return static_cast<int>(W.cols()); }
  int frames() const { return static_cast<int>(H.cols()); }
};

// Entries i.i.d. uniform on (floor, 1]. K > min(F, T) only warns.
NmfModel InitNmf(int bins, int frames, int rank, std::uint64_t seed,
                 double floor = kNmfFloor);

// lambda = W H, floored at model.floor.
Eigen::MatrixXd Variance(const NmfModel& model);

// Itakura-Saito divergence sum_{f,t} p/l - log(p/l) - 1, with both
// arguments floored at `floor`.
double IsDivergence(const Eigen::MatrixXd& power, const Eigen::MatrixXd& lambda,
                    double floor = kNmfFloor);

enum class UpdateForm {
  // w *= sqrt(sum_t p h l^-2 / sum_t h l^-1); fixed point at p == lambda.
  kCorrected,
  // Denominators sum_t p l^-1 without the h / w factor.
  kPaperVerbatim,
};

// One multiplicative sweep fitting W H to `target`: W first, then H against the
// recomputed lambda. All outputs floored at model.floor. With target = |y|^2
// and kCorrected this is the IS-NMF majorization step.
NmfModel MultiplicativeUpdate(const NmfModel& model,
                              const Eigen::MatrixXd& target,
                              UpdateForm form = UpdateForm::kCorrected);

// IS-NMF update of the model towards `power`.
NmfModel IsUpdate(const NmfModel& model, const Eigen::MatrixXd& power);

// Text dump: "nmf <F> <K> <T> <floor>" header, then W and H row-major, one row
// per line. Values use 17 significant digits so Load(Save(m)) == m.
void SaveNmf(std::ostream& os, const NmfModel& model);
NmfModel LoadNmf(std::istream& is);

}  // namespace otbss

#endif  // OTBSS_NMF_H_
