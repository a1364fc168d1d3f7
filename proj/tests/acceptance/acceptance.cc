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


// Acceptance suite. Each criterion prints one PASS/FAIL line; `--only N`
// runs a single criterion.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "CLI11.hpp"
#include "otbss/cli/commands.h"
#include "otbss/cli/config.h"
#include "otbss/kron.h"
#include "otbss/metrics.h"
#include "otbss/nmf.h"
#include "otbss/room_sim.h"
#include "otbss/separation.h"
#include "otbss/signal_io.h"
#include "otbss/sinkhorn.h"

namespace {

using namespace otbss;
using Clock = std::chrono::steady_clock;
using Complex = std::complex<double>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

Eigen::VectorXd RandomPositive(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

double RelErr(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  return (x - ref).norm() / ref.norm();
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / v.size();
}

TimeSignal MonoSignal(const std::vector<double>& x, int rate) {
  return TimeSignal(
      Eigen::Map<const Eigen::MatrixXd>(x.data(), 1, static_cast<Eigen::Index>(x.size())), rate);
}

// 1. Factorized marginals against the dense plan of the materialized cost.
Outcome KronDenseEquivalence() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  SinkhornParams p;
  p.mu = 100.0;
  p.gamma = 10.0;
  for (int F : {12, 16, 36, 64}) {
    const KroneckerCost cost = KronSumCost(FactorizeBins(F, 2));
    const FactorizedKernel kron(cost, p.mu);
    const GibbsKernel dense(MaterializeKronSum(cost), p.mu);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd u = RandomPositive(F, rng), v = RandomPositive(F, rng);
      const Eigen::MatrixXd plan = u.asDiagonal() * dense.matrix() * v.asDiagonal();
      worst = std::max(worst, RelErr(KronRowMarginal(u, kron, v), plan.rowwise().sum()));
      worst = std::max(worst,
                       RelErr(KronColMarginal(u, kron, v), plan.colwise().sum().transpose()));

      const Eigen::VectorXd a = RandomPositive(F, rng), b = RandomPositive(F, rng);
      const Scalings sk = SinkhornScalings(a, b, kron, p);
      const Scalings sd = SinkhornScalings(a, b, dense, p);
      Eigen::VectorXd rk, ck, rd, cd;
      TransportMarginals(sk, kron, rk, ck);
      TransportMarginals(sd, dense, rd, cd);
      worst = std::max({worst, RelErr(rk, rd), RelErr(ck, cd)});
    }
  }
  return {worst <= 1e-12, fmt::format("max relative error {:.2e} (limit 1e-12)", worst)};
}

// 2. Balanced limit at gamma = 1e6.
Outcome BalancedLimit() {
  std::mt19937_64 rng(2);
  const int F = 8;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd a = RandomPositive(F, rng), b = RandomPositive(F, rng);
    b *= a.sum() / b.sum();
    SinkhornParams p;
    p.gamma = 1e6;
    p.max_iter = 20000;
    p.tol = 1e-12;
    const GibbsKernel g(BuildCostSq(F), p.mu);
    const Scalings s = SinkhornScalings(a, b, g, p);
    Eigen::VectorXd row, col;
    TransportMarginals(s, g, row, col);
    worst = std::max(worst, (row - a).lpNorm<1>() / a.lpNorm<1>());
    worst = std::max(worst, (col - b).lpNorm<1>() / b.lpNorm<1>());
  }
  return {worst < 1e-3, fmt::format("max relative marginal error {:.2e} (limit 1e-3)", worst)};
}

// 3. IS-NMF monotonicity.
Outcome NmfMonotone() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  double worst_rise = -std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int inst = 0; inst < 100; ++inst) {
    Eigen::MatrixXd power(8, 8);
    for (int i = 0; i < power.size(); ++i) power.data()[i] = u(rng);
    NmfModel m = InitNmf(8, 8, 2, 1000 + inst);
    double prev = IsDivergence(power, Variance(m));
    for (int it = 0; it < 20; ++it) {
      m = IsUpdate(m, power);
      const double cur = IsDivergence(power, Variance(m));
      worst_rise = std::max(worst_rise, cur - prev);
      if (cur > prev + 1e-10) ++violations;
      prev = cur;
    }
  }
  return {violations == 0, fmt::format("{} violations; largest step change {:.2e} (slack 1e-10)",
                                       violations, worst_rise)};
}

cli::SimulateConfig Scene(double t60, std::uint64_t seed, double duration = 3.0) {
  cli::SimulateConfig s;
  s.t60 = t60;
  s.seed = seed;
  s.duration = duration;
  return s;
}

// 4. ILRMA log-likelihood trace never decreases.
Outcome IlrmaMonotone() {
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const cli::Simulation sim = cli::Simulate(Scene(0.0, seed));
    SeparationConfig cfg;
    cfg.outer_iters = 30;
    cfg.seed = seed;
    const Spectrogram x = Stft(sim.mixture.mixture, cfg.stft);
    const SeparationResult r = RunIlrma(x, cfg);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      const double prev = r.trace[i - 1].objective, cur = r.trace[i].objective;
      const double drop = (prev - cur) / std::abs(prev);
      worst = std::max(worst, drop);
      if (drop > 1e-6) ++violations;
    }
  }
  return {violations == 0,
          fmt::format("{} decreasing steps over 10 mixtures; largest relative drop {:.2e} "
                      "(slack 1e-6)",
                      violations, worst)};
}

// Off-pattern over on-pattern magnitude for the better 2x2 permutation.
double PermutationLeak(const Eigen::MatrixXcd& p) {
  const double diag = std::max(std::abs(p(0, 1)), std::abs(p(1, 0))) /
                      std::min(std::abs(p(0, 0)), std::abs(p(1, 1)));
  const double anti = std::max(std::abs(p(0, 0)), std::abs(p(1, 1))) /
                      std::min(std::abs(p(0, 1)), std::abs(p(1, 0)));
  return std::min(diag, anti);
}

// 5. Oracle-variance demixing recovery. Mixing is built per bin in the STFT
// domain from the anechoic transfer functions, so X = A_f S holds exactly.
Outcome OracleRecovery() {
  int recovered = 0;
  std::vector<std::string> per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const cli::Simulation sim = cli::Simulate(Scene(0.0, seed));
    const StftConfig stft;
    std::vector<Spectrogram> s;
    for (const auto& src : sim.sources) s.push_back(Stft(src, stft));
    const int F = s[0].bins(), T = s[0].frames();
    Spectrogram x = Spectrogram::LikeShape(s[0], 2);
    std::vector<Eigen::MatrixXcd> A(F, Eigen::MatrixXcd::Zero(2, 2));
    for (int f = 0; f < F; ++f) {
      for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m) {
          const auto& h = sim.rir.at(n, m);
          Complex acc = 0.0;
          for (std::size_t j = 0; j < h.size(); ++j) {
            acc += h[j] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(j) /
                                              stft.window_len);
          }
          A[f](m, n) = acc;
        }
      for (int t = 0; t < T; ++t) {
        const Eigen::Vector2cd st(s[0].data[0](f, t), s[1].data[0](f, t));
        const Eigen::Vector2cd xt = A[f] * st;
        x.data[0](f, t) = xt[0];
        x.data[1](f, t) = xt[1];
      }
    }
    std::vector<Eigen::MatrixXd> lambda;
    for (const auto& sn : s) lambda.push_back(sn.data[0].cwiseAbs2().cwiseMax(kNmfFloor));
    DemixingMatrices d = InitDemixing(2, 2, F);
    for (int sweep = 0; sweep < 30; ++sweep) d = IpUpdate(d, x, lambda);
    double worst = 0.0;
    for (int f = 0; f < F; ++f) worst = std::max(worst, PermutationLeak(d.D[f] * A[f]));
    if (worst < 1e-3) ++recovered;
    per_seed.push_back(fmt::format("{:.1e}", worst));
  }
  std::string list;
  for (const auto& v : per_seed) list += (list.empty() ? "" : " ") + v;
  return {recovered >= 9,
          fmt::format("{}/10 seeds below 1e-3 (worst-bin leak per seed: {})", recovered, list)};
}

cli::BenchmarkPlan DeskPlan(std::vector<double> grid, int trials,
                            std::vector<Method> methods) {
  cli::BenchmarkPlan plan;
  plan.t60_grid = std::move(grid);
  plan.trials = trials;
  plan.methods = std::move(methods);
  plan.seed = 2024;
  plan.scene.duration = 3.0;
  return plan;
}

// Mean SDR improvement per (t60, method) over all sources and trials.
double CellMean(const std::vector<cli::BenchmarkRow>& rows, double t60, Method m,
                int* failures = nullptr) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.method != m || std::abs(r.t60 - t60) > 1e-12) continue;
    if (r.status != "ok") {
      if (failures) ++*failures;
      continue;
    }
    v.push_back(r.sdr_imp_db);
  }
  return Mean(v);
}

// 6. End-to-end separation quality.
Outcome SeparationQuality() {
  const auto rows = cli::RunBenchmark(
      DeskPlan({0.0, 0.3}, 20, {Method::kIlrma, Method::kSdilrmaKron}), 1);
  int failures = 0;
  const double ia = CellMean(rows, 0.0, Method::kIlrma, &failures);
  const double sa = CellMean(rows, 0.0, Method::kSdilrmaKron, &failures);
  const double ir = CellMean(rows, 0.3, Method::kIlrma, &failures);
  const double sr = CellMean(rows, 0.3, Method::kSdilrmaKron, &failures);
  const bool pass = failures == 0 && ia > 10.0 && sa > 10.0 && ir > 3.0 && sr > 3.0;
  return {pass, fmt::format("mean SDR improvement anechoic ilrma {:.2f} / sdilrma {:.2f} dB "
                            "(> 10); t60=0.3 ilrma {:.2f} / sdilrma {:.2f} dB (> 3); "
                            "{} failed cells",
                            ia, sa, ir, sr, failures)};
}

// 7. Directional comparison over the desk-scale grid.
Outcome DirectionalComparison() {
  const std::vector<double> grid{0.0, 0.1, 0.2, 0.3};
  const auto rows =
      cli::RunBenchmark(DeskPlan(grid, 5, {Method::kIlrma, Method::kSdilrmaKron}), 1);
  int failures = 0;
  std::vector<double> il, sd;
  std::string cells;
  for (double t60 : grid) {
    const double i = CellMean(rows, t60, Method::kIlrma, &failures);
    const double s = CellMean(rows, t60, Method::kSdilrmaKron, &failures);
    il.push_back(i);
    sd.push_back(s);
    cells += fmt::format(" t60={:.1f}: {:.2f} vs {:.2f};", t60, s, i);
  }
  const double mi = Mean(il), ms = Mean(sd);
  const bool pass = failures == 0 && ms >= mi - 0.5 && sd[0] > il[0];
  return {pass, fmt::format("sdilrma-kron vs ilrma mean SDR improvement {:.2f} vs {:.2f} dB "
                            "(need >= ilrma - 0.5); anechoic {:.2f} vs {:.2f} (need >);{}",
                            ms, mi, sd[0], il[0], cells)};
}

// 8. Dense and Kronecker backends on the same separable cost.
Outcome BackendInterchangeable() {
  const cli::Simulation sim = cli::Simulate(Scene(0.0, 5));
  SeparationConfig cfg;
  cfg.stft = StftConfig{256, 64, WindowType::kHann};
  cfg.dense_cost = DenseCost::kSeparable;
  cfg.seed = 5;
  const Spectrogram x = Stft(sim.mixture.mixture, cfg.stft);
  cfg.method = Method::kSdilrmaDense;
  const SeparationResult d = Separate(x, cfg);
  cfg.method = Method::kSdilrmaKron;
  const SeparationResult k = Separate(x, cfg);
  double num = 0.0, den = 0.0;
  for (int n = 0; n < d.estimates.channels(); ++n) {
    num += (d.estimates.data[n] - k.estimates.data[n]).squaredNorm();
    den += d.estimates.data[n].squaredNorm();
  }
  const double rel = std::sqrt(num / den);
  return {rel <= 1e-6 && !k.dense_fallback,
          fmt::format("relative estimate difference {:.2e} after {} iterations at {} bins "
                      "(limit 1e-6)",
                      rel, cfg.outer_iters, x.bins())};
}

// 9. Kernel-apply speed at F = 4096, dims (64, 64).
Outcome KronSpeed() {
  const BinFactorization dims{{64, 64}};
  const KroneckerCost cost = KronSumCost(dims);
  FactorizedKernel kron(cost, 100.0);
  const Eigen::MatrixXd dense = kron.Dense();
  std::mt19937_64 rng(9);
  const Eigen::VectorXd v = RandomPositive(4096, rng);
  Eigen::VectorXd out_k, out_d;

  auto best_of = [](int reps, const std::function<void()>& fn) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < reps; ++r) {
      const auto t0 = Clock::now();
      fn();
      best = std::min(best, Seconds(t0));
    }
    return best;
  };
  const double t_dense = best_of(20, [&] { out_d.noalias() = dense * v; });
  kron.ResetCounter();
  const double t_kron = best_of(20, [&] { kron.Apply(v, out_k); });
  const std::int64_t per_apply = kron.multiply_adds() / 20;
  const double agree = RelErr(out_k, out_d);
  const double speedup = t_dense / t_kron;
  const std::int64_t expected = 4096LL * (64 + 64);
  const bool pass = speedup >= 5.0 && per_apply == expected && kron.MultiplyAddsPerApply() == expected &&
                    agree < 1e-12;
  return {pass, fmt::format("dense {:.3f} ms, factorized {:.4f} ms, speedup {:.1f}x (need >= 5); "
                            "{} multiply-adds per apply (F * sum f_q = {}); agreement {:.1e}",
                            1e3 * t_dense, 1e3 * t_kron, speedup, per_apply, expected, agree)};
}

// 10. Infrastructure checks.
Outcome Infrastructure() {
  std::vector<std::string> notes;
  bool pass = true;

  // STFT round trip.
  {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd s(2, 48000 + 123);
    for (int i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
    const TimeSignal x(s, 16000);
    const StftConfig cfg;
    const double err = (Istft(Stft(x, cfg), cfg).samples - s).cwiseAbs().maxCoeff();
    const bool ok = err < 1e-10;
    pass &= ok;
    notes.push_back(fmt::format("round trip {:.1e} {}", err, ok ? "ok" : "FAIL"));
  }

  // RIR decay across the t60 grid from 0.2 to 0.6 s.
  {
    double worst = 0.0;
    std::string per;
    for (double t60 : cli::DefaultT60Grid()) {
      if (t60 < 0.2 - 1e-9) continue;
      const auto angles = SampleSisecAngles(static_cast<std::uint64_t>(t60 * 1000));
      const RoomScene scene = MakeSceneSisec(t60, angles[0], angles[1], 0);
      const Rir rir = ImageSourceRir(scene);
      double cell = 0.0;
      double measured_sum = 0.0;
      for (const auto& h : rir.taps) {
        const double measured = SchroederT60(h, scene.sample_rate);
        measured_sum += measured;
        cell = std::max(cell, std::abs(measured - t60) / t60);
      }
      worst = std::max(worst, cell);
      per += fmt::format(" {:.2f}->{:.3f}", t60, measured_sum / rir.taps.size());
    }
    const bool ok = worst <= 0.2;
    pass &= ok;
    notes.push_back(fmt::format("t60 worst deviation {:.0f}% (limit 20%; target->measured:{}) {}",
                                100.0 * worst, per, ok ? "ok" : "FAIL"));
  }

  // Constructed 20 dB SNR.
  {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    const auto speech = SynthSpeechLike(48000, 16000, 11);
    Eigen::MatrixXd noise(1, 48000);
    for (int i = 0; i < 48000; ++i) noise(0, i) = g(rng);
    const TimeSignal ref = MonoSignal(speech, 16000);
    noise *= std::sqrt(ref.samples.squaredNorm() / (100.0 * noise.squaredNorm()));
    const double sdr = SdrSir({TimeSignal(ref.samples + noise, 16000)}, {ref}).sdr[0];
    const bool ok = std::abs(sdr - 20.0) <= 0.5;
    pass &= ok;
    notes.push_back(fmt::format("20 dB SNR measured {:.2f} dB {}", sdr, ok ? "ok" : "FAIL"));
  }

  // Benchmark CSV determinism, ignoring the wall-clock column.
  {
    cli::BenchmarkPlan plan = DeskPlan({0.0, 0.2}, 2, {Method::kIlrma, Method::kSdilrmaKron});
    plan.scene.duration = 1.0;
    plan.separation.outer_iters = 5;
    plan.separation.stft = StftConfig{256, 64, WindowType::kHann};
    auto strip = [](const std::string& csv) {
      std::stringstream in(csv);
      std::string out;
      for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (cells.size() == 8 && line[0] != '#' && line[0] != 't') cells[6] = "-";
        for (const auto& c : cells) out += c + ",";
        out += "\n";
      }
      return out;
    };
    std::stringstream a, b;
    cli::RunBenchmark(plan, 1, &a);
    cli::RunBenchmark(plan, 2, &b);
    const bool ok = !a.str().empty() && strip(a.str()) == strip(b.str());
    pass &= ok;
    notes.push_back(fmt::format("benchmark CSV {}", ok ? "deterministic ok" : "differs FAIL"));
  }

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otbss acceptance suite"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "Kronecker-dense oracle equivalence", 10.0, KronDenseEquivalence},
      {2, "balanced-OT limit", 1.0, BalancedLimit},
      {3, "IS-NMF monotonicity", 5.0, NmfMonotone},
      {4, "ILRMA objective monotonicity", 120.0, IlrmaMonotone},
      {5, "oracle demixing recovery", 60.0, OracleRecovery},
      {6, "end-to-end separation quality", 900.0, SeparationQuality},
      {7, "directional comparison sdilrma-kron vs ilrma", 1800.0, DirectionalComparison},
      {8, "backend interchangeability", 300.0, BackendInterchangeable},
      {9, "Kronecker kernel speed", 60.0, KronSpeed},
      {10, "infrastructure", 120.0, Infrastructure},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = Seconds(t0);
    const bool in_time = elapsed < c.budget_s;
    const bool pass = o.pass && in_time;
    all &= pass;
    std::printf("[%s] AC%d %s: %s; runtime %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL",
                c.id, c.name, o.detail.c_str(), elapsed, c.budget_s,
                in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
