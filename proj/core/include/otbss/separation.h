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

#ifndef OTBSS_SEPARATION_H_
#define OTBSS_SEPARATION_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "otbss/kron.h"
#include "otbss/nmf.h"
#include "otbss/signal_io.h"
#include "otbss/sinkhorn.h"

namespace otbss {

// Per-frequency N x M demixing matrices, y_ft = D_f x_ft.
struct DemixingMatrices {
  std::vector<Eigen::MatrixXcd> D;

  int bins() const { return static_cast<int>(D.size()); }
  int sources() const { return D.empty() ? 0 : static_cast<int>(D[0].rows()); }
  int mics() const { return D.empty() ? 0 : static_cast<int>(D[0].cols()); }
};

enum class Method { kIlrma, kSdilrmaDense, kSdilrmaKron };

// "ilrma", "sdilrma-dense", "sdilrma-kron".
std::string MethodName(Method m);
// ValidationError for unknown names.
Method ParseMethod(const std::string& name);

// Cost used by the dense Sinkhorn backend. kSeparable is the Kronecker-sum
// cost materialized densely, for comparing the two backends on one cost.
enum class DenseCost { kSquared, kSeparable };

// Which transport marginal feeds the source-model update.
enum class MarginalSide { kRow, kColumn };

struct SeparationConfig {
  Method method = Method::kIlrma;
  int num_sources = 0;  // 0: one source per channel
  int basis = 2;        // NMF rank K
  int outer_iters = 50;
  SinkhornParams sinkhorn;
  std::optional<BinFactorization> kron_dims;  // default: FactorizeBins(F, kron_order)
  int kron_order = 2;
  DenseCost dense_cost = DenseCost::kSquared;
  UpdateForm update_form = UpdateForm::kCorrected;
  MarginalSide marginal = MarginalSide::kRow;
  int ref_mic = 0;
  std::uint64_t seed = 0;
  StftConfig stft;

  void Validate() const;
};

struct TraceRecord {
  int iteration = 0;
  // ILRMA: log-likelihood; SDILRMA: summed transport objective over sources
  // and frames, evaluated before that iteration's model update.
  double objective = 0.0;
  double log_likelihood = 0.0;
  std::vector<double> source_power;  // mean |y_n|^2 before normalization
};

struct SeparationResult {
  Spectrogram estimates;  // y_nft, N channels
  Spectrogram images;     // back-projected to ref_mic
  DemixingMatrices demixing;
  std::vector<NmfModel> models;
  // Iteration 0 is the initial state; its SDILRMA objective is NaN.
  std::vector<TraceRecord> trace;
  Method method = Method::kIlrma;
  bool dense_fallback = false;  // Kronecker path requested but unavailable
};

// D_f = [I_N | 0]. ValidationError when N > M.
DemixingMatrices InitDemixing(int mics, int sources, int bins);

// y_ft = D_f x_ft for every bin and frame.
Spectrogram ApplyDemixing(const DemixingMatrices& demix, const Spectrogram& x);

// |y_nft|^2, one F x T matrix per source.
std::vector<Eigen::MatrixXd> SourcePowers(const Spectrogram& y);

// V_nf = (1/T) sum_t x_ft x_ft^H / lambda_nft at bin f.
Eigen::MatrixXcd WeightedCovariance(const Spectrogram& x,
                                    const Eigen::MatrixXd& lambda, int bin);

// One iterative-projection sweep over all bins and sources (square D only):
// d = (D_f V_nf)^{-1} e_n, d /= sqrt(d^H V_nf d), row n of D_f = d^H.
DemixingMatrices IpUpdate(const DemixingMatrices& demix, const Spectrogram& x,
                          const std::vector<Eigen::MatrixXd>& lambdas);

// Log-likelihood of the rank-1 local Gaussian model up to a constant:
// -sum_{n,f,t} (|y|^2 / lambda + log lambda) + T sum_f log det(D_f D_f^H).
double IlrmaLogLikelihood(const Spectrogram& y,
                          const std::vector<Eigen::MatrixXd>& lambdas,
                          const DemixingMatrices& demix);

// Rescales row n of every D_f by 1/rho_n and W_n by 1/rho_n^2, where
// rho_n^2 is the mean power of y_n. Returns rho (1 where skipped).
std::vector<double> Normalize(DemixingMatrices& demix,
                              std::vector<NmfModel>& models,
                              const Spectrogram& x);

// Multiplicative update of W and H against transported masses.
NmfModel SdUpdateSourceModel(const NmfModel& model,
                             const Eigen::MatrixXd& marginals,
                             UpdateForm form = UpdateForm::kCorrected);

struct FrameMarginals {
  Eigen::MatrixXd marginals;  // F x T
  double objective = 0.0;     // summed over frames
  int sinkhorn_iterations = 0;
};

// Solves one unbalanced transport problem per frame with a = |y_t|^2 and
// b = lambda_t, warm-started from and writing back to `cache` (one entry per
// frame; resized when empty). NumericError carries (source_index, frame).
FrameMarginals ComputeFrameMarginals(const Eigen::MatrixXcd& y_source,
                                     const NmfModel& model,
                                     const KernelOperator& kernel,
                                     const SinkhornParams& params,
                                     MarginalSide side,
                                     std::vector<Scalings>* cache,
                                     int source_index = 0);

struct SourceKernel {
  std::unique_ptr<KernelOperator> kernel;
  bool factorized = false;
  bool dense_fallback = false;
  std::optional<BinFactorization> dims;
};

// Kernel for the configured SDILRMA backend at `bins` bins. The Kronecker
// backend falls back to the dense squared-distance cost, with a warning, when
// the bin count cannot be factorized.
SourceKernel BuildSourceKernel(const SeparationConfig& cfg, int bins);

SeparationResult RunIlrma(const Spectrogram& x, const SeparationConfig& cfg);
SeparationResult RunSdilrma(const Spectrogram& x, const SeparationConfig& cfg);
// Dispatches on cfg.method.
SeparationResult Separate(const Spectrogram& x, const SeparationConfig& cfg);

// yhat_nft = [D_f^{-1}]_{ref, n} y_nft.
Spectrogram BackProject(const Spectrogram& y, const DemixingMatrices& demix,
                        int ref_mic);

// STFT, separation, back-projection and ISTFT: one single-channel signal
// per source at the reference microphone.
std::vector<TimeSignal> SeparateSignal(const TimeSignal& mixture,
                                       const SeparationConfig& cfg,
                                       SeparationResult* result = nullptr);

}  // namespace otbss

#endif  // OTBSS_SEPARATION_H_
