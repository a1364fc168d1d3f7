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

#include "otbss/cli/commands.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"
#include "otbss/log.h"

namespace otbss::cli {
namespace fs = std::filesystem;
namespace {

using OrderedJson = nlohmann::ordered_json;

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t MaterialSeed(std::uint64_t seed, int source) {
  return Mix64(Mix64(seed) + static_cast<std::uint64_t>(source) + 1);
}

TimeSignal Mono(const Eigen::RowVectorXd& row, int rate) {
  return TimeSignal(Eigen::MatrixXd(row), rate);
}

std::vector<TimeSignal> LoadSources(const SimulateConfig& cfg, int count) {
  const auto wanted = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));
  std::vector<TimeSignal> out;
  if (cfg.source_files.empty()) {
    for (int n = 0; n < count; ++n) {
      const std::vector<double> s = SynthSpeechLike(wanted, cfg.sample_rate, MaterialSeed(cfg.seed, n));
      out.push_back(Mono(Eigen::Map<const Eigen::RowVectorXd>(s.data(), s.size()), cfg.sample_rate));
    }
    return out;
  }
  if (static_cast<int>(cfg.source_files.size()) != count) {
    throw ValidationError(fmt::format("{} source files for {} sources",
                                      cfg.source_files.size(), count));
  }
  std::size_t len = wanted;
  for (const auto& path : cfg.source_files) {
    TimeSignal s = ReadWav(path);
    if (s.channels() != 1) throw ValidationError(path.string() + " is not mono");
    if (s.sample_rate != cfg.sample_rate) {
      throw ValidationError(fmt::format("{} has rate {} Hz, expected {}", path.string(),
                                        s.sample_rate, cfg.sample_rate));
    }
    len = std::min(len, s.length());
    out.push_back(std::move(s));
  }
  for (auto& s : out) s.samples.conservativeResize(1, static_cast<Eigen::Index>(len));
  return out;
}

void WriteCsvLine(std::ostream& os, const BenchmarkRow& r) {
  os << fmt::format("{:g},{},{},{},{:.6f},{:.6f},{:.1f},{}\n", r.t60, r.trial,
                    MethodName(r.method), r.source, r.sdr_imp_db, r.sir_imp_db,
                    r.wall_ms, r.status);
}

void WriteSummary(std::ostream& os, const BenchmarkPlan& plan,
                  const std::vector<BenchmarkRow>& rows) {
  os << "# summary: mean improvement per (t60, method) over rows with status ok\n";
  os << "# t60,method,mean_sdr_imp_db,mean_sir_imp_db,ok_rows,failed_rows\n";
  for (double t60 : plan.t60_grid) {
    for (Method m : plan.methods) {
      double sdr = 0.0, sir = 0.0;
      int ok = 0, failed = 0;
      for (const auto& r : rows) {
        if (r.t60 != t60 || r.method != m) continue;
        if (r.status == "ok") {
          sdr += r.sdr_imp_db;
          sir += r.sir_imp_db;
          ++ok;
        } else {
          ++failed;
        }
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      os << fmt::format("# {:g},{},{:.6f},{:.6f},{},{}\n", t60, MethodName(m),
                        ok ? sdr / ok : nan, ok ? sir / ok : nan, ok, failed);
    }
  }
}

}  // namespace

int ExitCodeFor(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const UnsupportedFormatError*>(&e) ||
      dynamic_cast<const CapabilityError*>(&e) ||
      dynamic_cast<const DegenerateGeometryError*>(&e) ||
      dynamic_cast<const FactorizationUnavailableError*>(&e)) {
    return kExitUsage;
  }
  return kExitFailure;
}

Simulation Simulate(const SimulateConfig& cfg) {
  Simulation sim;
  if (!cfg.source_positions.empty()) {
    sim.scene.dimensions = cfg.geometry.dimensions;
    sim.scene.source_positions = cfg.source_positions;
    sim.scene.mic_positions = cfg.mic_positions;
    sim.scene.t60 = cfg.t60;
    sim.scene.seed = cfg.seed;
  } else {
    if (cfg.angles.empty()) {
      const auto a = SampleSisecAngles(cfg.seed);
      sim.angles.assign(a.begin(), a.end());
    } else {
      sim.angles = cfg.angles;
    }
    sim.scene = MakeArrayScene(cfg.geometry, cfg.t60, sim.angles, cfg.seed);
  }
  sim.scene.sample_rate = cfg.sample_rate;
  sim.scene.speed_of_sound = cfg.speed_of_sound;
  sim.scene.max_rir_len = cfg.max_rir_len;
  sim.scene.Validate();
  sim.absorption = SabineAbsorption(sim.scene.dimensions, sim.scene.t60);
  sim.rir = ImageSourceRir(sim.scene);
  sim.sources = LoadSources(cfg, sim.scene.num_sources());
  sim.mixture = ConvolveMix(sim.sources, sim.rir);
  return sim;
}

std::vector<TimeSignal> ReferenceImages(const Simulation& sim, int mic) {
  if (mic < 0 || mic >= sim.scene.num_mics()) {
    throw ValidationError(fmt::format("reference mic {} out of range", mic));
  }
  std::vector<TimeSignal> out;
  for (const auto& img : sim.mixture.images) {
    out.push_back(Mono(img.samples.row(mic), img.sample_rate));
  }
  return out;
}

void CmdSimulate(const SimulateConfig& cfg, const fs::path& out_dir) {
  const Simulation sim = Simulate(cfg);
  fs::create_directories(out_dir);
  WriteWav(out_dir / "mixture.wav", sim.mixture.mixture, WavEncoding::kFloat64);
  const std::vector<TimeSignal> refs = ReferenceImages(sim, 0);
  for (int n = 0; n < sim.scene.num_sources(); ++n) {
    WriteWav(out_dir / fmt::format("src_{}.wav", n), sim.sources[n], WavEncoding::kFloat64);
    WriteWav(out_dir / fmt::format("img_{}.wav", n), refs[n], WavEncoding::kFloat64);
    WriteWav(out_dir / fmt::format("rir_{}.wav", n), sim.rir.AsSignal(n), WavEncoding::kFloat64);
  }

  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["sample_rate"] = sim.scene.sample_rate;
  j["duration"] = cfg.duration;
  j["t60"] = sim.scene.t60;
  j["room"] = sim.scene.dimensions;
  j["num_mics"] = cfg.geometry.num_mics;
  j["mic_spacing"] = cfg.geometry.mic_spacing;
  j["source_distance"] = cfg.geometry.source_distance;
  j["height"] = cfg.geometry.height;
  if (cfg.geometry.center) j["array_center"] = *cfg.geometry.center;
  if (!sim.angles.empty()) j["angles"] = sim.angles;
  j["mic_positions"] = sim.scene.mic_positions;
  j["source_positions"] = sim.scene.source_positions;
  j["max_rir_len"] = sim.scene.ResolvedRirLength();
  j["speed_of_sound"] = sim.scene.speed_of_sound;
  std::vector<std::string> files;
  for (const auto& f : cfg.source_files) files.push_back(f.string());
  j["source_files"] = files;
  std::ofstream out(out_dir / "scene.json");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + (out_dir / "scene.json").string());
  Log().info("simulated {} sources x {} mics, t60 {} s, absorption {}",
             sim.scene.num_sources(), sim.scene.num_mics(), sim.scene.t60,
             sim.absorption ? fmt::format("{:.4f}", *sim.absorption) : "none");
}

SeparationResult CmdSeparate(const fs::path& input, const SeparationConfig& cfg,
                             const fs::path& out_dir) {
  const TimeSignal mixture = ReadWav(input);
  if (mixture.channels() < 2 && cfg.num_sources == 0) {
    throw ValidationError("separation needs a multichannel input");
  }
  SeparationResult result;
  const std::vector<TimeSignal> est = SeparateSignal(mixture, cfg, &result);
  fs::create_directories(out_dir);
  for (std::size_t n = 0; n < est.size(); ++n) {
    WriteWav(out_dir / fmt::format("est_{}.wav", n), est[n]);
  }
  std::ofstream trace(out_dir / "trace.csv");
  trace << "iteration,objective,log_likelihood";
  for (std::size_t n = 0; n < est.size(); ++n) trace << ",power_" << n;
  trace << "\n";
  for (const auto& r : result.trace) {
    trace << fmt::format("{},{:.17g},{:.17g}", r.iteration, r.objective, r.log_likelihood);
    for (std::size_t n = 0; n < est.size(); ++n) {
      trace << "," << (n < r.source_power.size() ? fmt::format("{:.17g}", r.source_power[n])
                                                 : std::string("nan"));
    }
    trace << "\n";
  }
  std::ofstream echo(out_dir / "config.json");
  echo << SeparationConfigToJson(cfg);
  if (!trace || !echo) throw IoError("cannot write results to " + out_dir.string());
  if (result.dense_fallback) {
    Log().warn("bin count {} has no Kronecker factorization; the dense backend was used",
               result.estimates.bins());
  }
  return result;
}

EvalResult CmdEvaluate(const fs::path& est_dir, const fs::path& ref_dir,
                       const fs::path& out_csv) {
  auto collect = [](const fs::path& dir, const char* prefix) {
    std::vector<TimeSignal> out;
    for (int n = 0;; ++n) {
      const fs::path p = dir / fmt::format("{}_{}.wav", prefix, n);
      if (!fs::exists(p)) break;
      TimeSignal s = ReadWav(p);
      if (s.channels() != 1) throw ValidationError(p.string() + " is not mono");
      out.push_back(std::move(s));
    }
    return out;
  };
  std::vector<TimeSignal> est = collect(est_dir, "est");
  std::vector<TimeSignal> ref = collect(ref_dir, "img");
  if (ref.empty()) throw ValidationError("no img_<n>.wav references in " + ref_dir.string());
  if (est.size() != ref.size()) {
    throw ValidationError(fmt::format("{} estimates but {} references", est.size(), ref.size()));
  }
  std::size_t len = ref[0].length();
  for (const auto& s : est) len = std::min(len, s.length());
  for (const auto& s : ref) len = std::min(len, s.length());
  bool trimmed = false;
  for (auto* group : {&est, &ref}) {
    for (auto& s : *group) {
      if (s.length() != len) {
        s.samples.conservativeResize(1, static_cast<Eigen::Index>(len));
        trimmed = true;
      }
    }
  }
  if (trimmed) Log().warn("signals trimmed to the common length of {} samples", len);

  const EvalResult r = SdrSir(est, ref);
  std::ofstream out(out_csv);
  out << "source,sdr_db,sir_db,perm\n";
  for (int n = 0; n < r.size(); ++n) {
    out << fmt::format("{},{:.4f},{:.4f},{}\n", n, r.sdr[n], r.sir[n], r.permutation[n]);
  }
  if (!out) throw IoError("cannot write " + out_csv.string());
  return r;
}

std::uint64_t TrialSeed(std::uint64_t plan_seed, int trial) {
  return Mix64(plan_seed ^ Mix64(static_cast<std::uint64_t>(trial)));
}

SimulateConfig CellScene(const BenchmarkPlan& plan, double t60, int trial) {
  SimulateConfig s = plan.scene;
  s.t60 = t60;
  s.seed = TrialSeed(plan.seed, trial);
  s.angles.clear();
  return s;
}

std::vector<BenchmarkRow> RunCell(const BenchmarkPlan& plan, double t60, int trial,
                                  Method method) {
  std::vector<BenchmarkRow> rows;
  int sources = plan.separation.num_sources > 0 ? plan.separation.num_sources : 2;
  try {
    const Simulation sim = Simulate(CellScene(plan, t60, trial));
    sources = sim.scene.num_sources();
    SeparationConfig cfg = plan.separation;
    cfg.method = method;
    const std::vector<TimeSignal> refs = ReferenceImages(sim, cfg.ref_mic);
    const EvalResult base = MixtureBaseline(
        Mono(sim.mixture.mixture.samples.row(cfg.ref_mic), sim.scene.sample_rate), refs);
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<TimeSignal> est = SeparateSignal(sim.mixture.mixture, cfg);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const EvalDelta d = Improvement(SdrSir(est, refs), base);
    for (int n = 0; n < sources; ++n) {
      rows.push_back({t60, trial, method, n, d.sdr[n], d.sir[n], ms, "ok"});
    }
  } catch (const std::exception& e) {
    const std::string status =
        ExitCodeFor(e) == kExitNumeric ? "numeric_failure" : "error";
    Log().warn("benchmark cell t60={} trial={} method={} failed: {}", t60, trial,
               MethodName(method), e.what());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rows.clear();
    for (int n = 0; n < sources; ++n) {
      rows.push_back({t60, trial, method, n, nan, nan, nan, status});
    }
  }
  return rows;
}

std::vector<BenchmarkRow> RunBenchmark(const BenchmarkPlan& plan, int jobs,
                                       std::ostream* csv) {
  plan.Validate();
  struct Task {
    double t60;
    int trial;
    Method method;
  };
  std::vector<Task> tasks;
  for (double t60 : plan.t60_grid) {
    for (int trial = 0; trial < plan.trials; ++trial) {
      for (Method m : plan.methods) tasks.push_back({t60, trial, m});
    }
  }
  std::vector<std::optional<std::vector<BenchmarkRow>>> done(tasks.size());
  std::size_t next_to_write = 0;
  std::mutex mutex;
  std::atomic<std::size_t> next_task{0};
  if (csv != nullptr) {
    *csv << "t60,trial,method,source,sdr_imp_db,sir_imp_db,wall_ms,status\n";
  }

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next_task.fetch_add(1);
      if (i >= tasks.size()) return;
      std::vector<BenchmarkRow> rows = RunCell(plan, tasks[i].t60, tasks[i].trial, tasks[i].method);
      std::lock_guard<std::mutex> lock(mutex);
      done[i] = std::move(rows);
      while (next_to_write < tasks.size() && done[next_to_write]) {
        if (csv != nullptr) {
          for (const auto& r : *done[next_to_write]) WriteCsvLine(*csv, r);
          csv->flush();
        }
        ++next_to_write;
      }
      Log().info("benchmark: {}/{} cells done", next_to_write, tasks.size());
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<BenchmarkRow> rows;
  for (auto& d : done) rows.insert(rows.end(), d->begin(), d->end());
  if (csv != nullptr) WriteSummary(*csv, plan, rows);
  return rows;
}

void CmdBenchmark(const BenchmarkPlan& plan, int jobs, const fs::path& out_csv) {
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  std::ofstream out(out_csv);
  if (!out) throw IoError("cannot write " + out_csv.string());
  RunBenchmark(plan, jobs, &out);
  if (!out) throw IoError("cannot write " + out_csv.string());
}

}  // namespace otbss::cli
