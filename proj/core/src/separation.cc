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

#include "otbss/separation.h"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>

#include <Eigen/LU>

#include "otbss/error.h"
#include "otbss/log.h"

namespace otbss {
namespace {

std::uint64_t SourceSeed(std::uint64_t seed, int n) {
  return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(n + 1));
}

// The first `sources` channels of x.
Spectrogram TruncateChannels(const Spectrogram& x, int sources) {
  if (sources == x.channels()) return x;
  Spectrogram out = x;
  out.data.resize(sources);
  return out;
}

struct Prepared {
  Spectrogram x;
  int sources = 0;
};

Prepared Prepare(const Spectrogram& x, const SeparationConfig& cfg) {
  cfg.Validate();
  if (x.channels() < 1) throw ValidationError("mixture has no channels");
  const int sources = cfg.num_sources > 0 ? cfg.num_sources : x.channels();
  if (sources > x.channels()) {
    throw ValidationError("more sources than microphones is not supported");
  }
  if (x.frames() < 2) throw ValidationError("separation needs at least two frames");
  if (cfg.ref_mic >= sources) {
    throw ValidationError("ref_mic must index one of the first N channels");
  }
  if (sources < x.channels()) {
    Log().info("using the first {} of {} channels", sources, x.channels());
  }
  return {TruncateChannels(x, sources), sources};
}

std::vector<Eigen::MatrixXd> Variances(const std::vector<NmfModel>& models) {
  std::vector<Eigen::MatrixXd> l;
  l.reserve(models.size());
  for (const auto& m : models) l.push_back(Variance(m));
  return l;
}

BinFactorization ResolveDims(const SeparationConfig& cfg, int bins) {
  if (cfg.kron_dims) {
    cfg.kron_dims->Validate();
    if (cfg.kron_dims->total() != bins) {
      throw ValidationError("kron_dims product " +
                            std::to_string(cfg.kron_dims->total()) +
                            " does not equal the bin count " + std::to_string(bins));
    }
    return *cfg.kron_dims;
  }
  return FactorizeBins(bins, cfg.kron_order);
}

// Every D_f must stay invertible.
void CheckNonsingular(const DemixingMatrices& demix, int iteration) {
  if (demix.sources() != demix.mics()) return;
  for (int f = 0; f < demix.bins(); ++f) {
    const double det = std::abs(demix.D[f].determinant());
    if (!(det > 0.0) || !std::isfinite(det)) {
      throw NumericError("demixing matrix became singular", iteration, -1, f);
    }
  }
}

SeparationResult Finish(const Spectrogram& x, DemixingMatrices demix,
                        std::vector<NmfModel> models,
                        std::vector<TraceRecord> trace,
                        const SeparationConfig& cfg) {
  SeparationResult r;
  r.estimates = ApplyDemixing(demix, x);
  r.images = BackProject(r.estimates, demix, cfg.ref_mic);
  r.demixing = std::move(demix);
  r.models = std::move(models);
  r.trace = std::move(trace);
  r.method = cfg.method;
  return r;
}

}  // namespace

std::string MethodName(Method m) {
  switch (m) {
    case Method::kIlrma:
      return "ilrma";
    case Method::kSdilrmaDense:
      return "sdilrma-dense";
    case Method::kSdilrmaKron:
      return "sdilrma-kron";
  }
  return "unknown";
}

Method ParseMethod(const std::string& name) {
  if (name == "ilrma") return Method::kIlrma;
  if (name == "sdilrma-dense") return Method::kSdilrmaDense;
  if (name == "sdilrma-kron") return Method::kSdilrmaKron;
  throw ValidationError("unknown method '" + name +
                        "' (expected ilrma, sdilrma-dense or sdilrma-kron)");
}

void SeparationConfig::Validate() const {
  if (num_sources < 0) throw ValidationError("num_sources must be >= 0");
  if (basis < 1) throw ValidationError("basis count must be >= 1");
  if (outer_iters < 0) throw ValidationError("outer_iters must be >= 0");
  if (kron_order < 1 || kron_order > 4) {
    throw ValidationError("kron_order must be between 1 and 4");
  }
  if (ref_mic < 0) throw ValidationError("ref_mic must be >= 0");
  if (kron_dims) kron_dims->Validate();
  sinkhorn.Validate();
  stft.Validate();
}

NmfModel SdUpdateSourceModel(const NmfModel& model,
                             const Eigen::MatrixXd& marginals, UpdateForm form) {
  return MultiplicativeUpdate(model, marginals, form);
}

FrameMarginals ComputeFrameMarginals(const Eigen::MatrixXcd& y_source,
                                     const NmfModel& model,
                                     const KernelOperator& kernel,
                                     const SinkhornParams& params,
                                     MarginalSide side,
                                     std::vector<Scalings>* cache,
                                     int source_index) {
  const int bins = static_cast<int>(y_source.rows());
  const int frames = static_cast<int>(y_source.cols());
  if (kernel.size() != bins || model.bins() != bins || model.frames() != frames) {
    throw ValidationError("frame marginals: inconsistent shapes");
  }
  const Eigen::MatrixXd lambda = Variance(model);
  const Eigen::MatrixXd power = y_source.cwiseAbs2();
  if (cache != nullptr && static_cast<int>(cache->size()) != frames) {
    cache->assign(frames, Scalings{});
  }

  FrameMarginals out;
  out.marginals.resize(bins, frames);
  std::vector<double> objectives(frames, 0.0);
  std::vector<int> iterations(frames, 0);
  std::exception_ptr failure;
  std::mutex failure_mutex;

#pragma omp parallel for schedule(dynamic, 8)
  for (int t = 0; t < frames; ++t) {
    try {
      const Eigen::VectorXd a = power.col(t);
      const Eigen::VectorXd b = lambda.col(t);
      const Scalings* warm = cache != nullptr ? &(*cache)[t] : nullptr;
      Scalings s = SinkhornScalings(a, b, kernel, params, warm);
      Eigen::VectorXd row, col;
      TransportMarginals(s, kernel, row, col);
      objectives[t] = ObjectiveFromScalings(s, row, col, a, b, params);
      out.marginals.col(t) = side == MarginalSide::kRow ? row : col;
      iterations[t] = s.iterations;
      if (cache != nullptr) (*cache)[t] = std::move(s);
    } catch (const NumericError& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::make_exception_ptr(e.WithLocation(source_index, t));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (int t = 0; t < frames; ++t) {
    out.objective += objectives[t];
    out.sinkhorn_iterations += iterations[t];
  }
  return out;
}

SourceKernel BuildSourceKernel(const SeparationConfig& cfg, int bins) {
  SourceKernel sk;
  if (cfg.method == Method::kSdilrmaKron) {
    try {
      const BinFactorization dims = ResolveDims(cfg, bins);
      sk.kernel = std::make_unique<FactorizedKernel>(KronSumCost(dims), cfg.sinkhorn.mu,
                                                     cfg.sinkhorn.floor);
      sk.factorized = true;
      sk.dims = dims;
      return sk;
    } catch (const FactorizationUnavailableError& e) {
      Log().warn("{}; falling back to the dense Sinkhorn backend", e.what());
      sk.dense_fallback = true;
    }
    sk.kernel = std::make_unique<GibbsKernel>(BuildCostSq(bins), cfg.sinkhorn.mu,
                                              cfg.sinkhorn.floor);
    return sk;
  }
  if (cfg.dense_cost == DenseCost::kSeparable) {
    const BinFactorization dims = ResolveDims(cfg, bins);
    sk.dims = dims;
    if (bins > kMaxMaterializedBins) {
      throw CapabilityError("dense separable cost limited to " +
                            std::to_string(kMaxMaterializedBins) + " bins, got " +
                            std::to_string(bins));
    }
    // Floored per factor, as in the factorized backend, so both are one operator.
    sk.kernel = std::make_unique<GibbsKernel>(
        FactorizedKernel(KronSumCost(dims), cfg.sinkhorn.mu, cfg.sinkhorn.floor).Dense());
  } else {
    sk.kernel = std::make_unique<GibbsKernel>(BuildCostSq(bins), cfg.sinkhorn.mu,
                                              cfg.sinkhorn.floor);
  }
  return sk;
}

SeparationResult RunIlrma(const Spectrogram& x_in, const SeparationConfig& cfg) {
  const Prepared prep = Prepare(x_in, cfg);
  const Spectrogram& x = prep.x;
  const int sources = prep.sources;

  DemixingMatrices demix = InitDemixing(sources, sources, x.bins());
  std::vector<NmfModel> models;
  for (int n = 0; n < sources; ++n) {
    models.push_back(InitNmf(x.bins(), x.frames(), cfg.basis, SourceSeed(cfg.seed, n)));
  }

  std::vector<TraceRecord> trace;
  Spectrogram y = ApplyDemixing(demix, x);
  {
    const double ll = IlrmaLogLikelihood(y, Variances(models), demix);
    trace.push_back({0, ll, ll, {}});
  }
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    const std::vector<Eigen::MatrixXd> power = SourcePowers(y);
    for (int n = 0; n < sources; ++n) models[n] = IsUpdate(models[n], power[n]);
    demix = IpUpdate(demix, x, Variances(models));
    CheckNonsingular(demix, it);
    const std::vector<double> rho = Normalize(demix, models, x);
    y = ApplyDemixing(demix, x);
    const double ll = IlrmaLogLikelihood(y, Variances(models), demix);
    TraceRecord rec{it, ll, ll, {}};
    for (double r : rho) rec.source_power.push_back(r * r);
    trace.push_back(std::move(rec));
    Log().debug("ilrma iteration {}: log-likelihood {:.6e}", it, ll);
  }
  return Finish(x, std::move(demix), std::move(models), std::move(trace), cfg);
}

SeparationResult RunSdilrma(const Spectrogram& x_in, const SeparationConfig& cfg) {
  if (cfg.method == Method::kIlrma) {
    throw ValidationError("RunSdilrma called with method ilrma");
  }
  const Prepared prep = Prepare(x_in, cfg);
  const Spectrogram& x = prep.x;
  const int sources = prep.sources;
  const SourceKernel sk = BuildSourceKernel(cfg, x.bins());

  DemixingMatrices demix = InitDemixing(sources, sources, x.bins());
  std::vector<NmfModel> models;
  for (int n = 0; n < sources; ++n) {
    models.push_back(InitNmf(x.bins(), x.frames(), cfg.basis, SourceSeed(cfg.seed, n)));
  }
  std::vector<std::vector<Scalings>> cache(sources);

  std::vector<TraceRecord> trace;
  Spectrogram y = ApplyDemixing(demix, x);
  {
    const double ll = IlrmaLogLikelihood(y, Variances(models), demix);
    trace.push_back({0, std::numeric_limits<double>::quiet_NaN(), ll, {}});
  }
  for (int it = 1; it <= cfg.outer_iters; ++it) {
    double objective = 0.0;
    int inner = 0;
    for (int n = 0; n < sources; ++n) {
      const FrameMarginals fm =
          ComputeFrameMarginals(y.data[n], models[n], *sk.kernel, cfg.sinkhorn,
                                cfg.marginal, &cache[n], n);
      objective += fm.objective;
      inner += fm.sinkhorn_iterations;
      models[n] = SdUpdateSourceModel(models[n], fm.marginals, cfg.update_form);
    }
    demix = IpUpdate(demix, x, Variances(models));
    CheckNonsingular(demix, it);
    const std::vector<double> rho = Normalize(demix, models, x);
    // Masses shrink by rho^2 on both sides; keep the warm start consistent.
    for (int n = 0; n < sources; ++n) {
      for (Scalings& s : cache[n]) s.Rescale(1.0 / rho[n]);
    }
    y = ApplyDemixing(demix, x);
    const double ll = IlrmaLogLikelihood(y, Variances(models), demix);
    TraceRecord rec{it, objective, ll, {}};
    for (double r : rho) rec.source_power.push_back(r * r);
    trace.push_back(std::move(rec));
    Log().debug("{} iteration {}: transport objective {:.6e}, log-likelihood "
                "{:.6e}, mean Sinkhorn iterations {:.1f}",
                MethodName(cfg.method), it, objective, ll,
                static_cast<double>(inner) / (sources * x.frames()));
  }
  if (trace.size() > 6) {
    const double at5 = trace[5].objective;
    const double last = trace.back().objective;
    if (last > at5 + 1e-6 * std::abs(at5)) {
      Log().warn("{}: transport objective rose after iteration 5 ({:.6e} -> {:.6e})",
                 MethodName(cfg.method), at5, last);
    }
  }
  SeparationResult r =
      Finish(x, std::move(demix), std::move(models), std::move(trace), cfg);
  r.dense_fallback = sk.dense_fallback;
  return r;
}

SeparationResult Separate(const Spectrogram& x, const SeparationConfig& cfg) {
  return cfg.method == Method::kIlrma ? RunIlrma(x, cfg) : RunSdilrma(x, cfg);
}

std::vector<TimeSignal> SeparateSignal(const TimeSignal& mixture,
                                       const SeparationConfig& cfg,
                                       SeparationResult* result) {
  const Spectrogram x = Stft(mixture, cfg.stft);
  SeparationResult r = Separate(x, cfg);
  const TimeSignal images = Istft(r.images, cfg.stft);
  std::vector<TimeSignal> out;
  for (int n = 0; n < images.channels(); ++n) {
    out.emplace_back(images.samples.row(n), images.sample_rate);
  }
  if (result != nullptr) *result = std::move(r);
  return out;
}

}  // namespace otbss
