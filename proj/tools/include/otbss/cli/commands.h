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

#ifndef OTBSS_CLI_COMMANDS_H_
#define OTBSS_CLI_COMMANDS_H_

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "otbss/cli/config.h"
#include "otbss/metrics.h"
#include "otbss/room_sim.h"
#include "otbss/separation.h"

namespace otbss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// 2 for configuration, validation and input-format errors, 3 for numeric
// failures, 1 otherwise.
int ExitCodeFor(const std::exception& e);

struct Simulation {
  RoomScene scene;
  std::vector<double> angles;  // empty when explicit positions were given
  std::optional<double> absorption;
  Rir rir;
  std::vector<TimeSignal> sources;
  Mixture mixture;
};

Simulation Simulate(const SimulateConfig& cfg);

// Source images at one microphone, one mono signal per source.
std::vector<TimeSignal> ReferenceImages(const Simulation& sim, int mic);

// Writes mixture.wav, src_<n>.wav, img_<n>.wav (reference mic 0), rir_<n>.wav
// and scene.json into out_dir.
void CmdSimulate(const SimulateConfig& cfg, const std::filesystem::path& out_dir);

// Writes est_<n>.wav, trace.csv and config.json into out_dir.
SeparationResult CmdSeparate(const std::filesystem::path& input,
                             const SeparationConfig& cfg,
                             const std::filesystem::path& out_dir);

// Pairs est_<n>.wav in est_dir with img_<n>.wav in ref_dir and writes
// `source,sdr_db,sir_db,perm`. ValidationError when the counts differ.
EvalResult CmdEvaluate(const std::filesystem::path& est_dir,
                       const std::filesystem::path& ref_dir,
                       const std::filesystem::path& out_csv);

struct BenchmarkRow {
  double t60 = 0.0;
  int trial = 0;
  Method method = Method::kIlrma;
  int source = 0;
  double sdr_imp_db = 0.0;
  double sir_imp_db = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

// Seed for the angles and source material of one trial.
std::uint64_t TrialSeed(std::uint64_t plan_seed, int trial);

// Scene of one benchmark cell: plan.scene at the given t60 with the trial's
// seed and angles.
SimulateConfig CellScene(const BenchmarkPlan& plan, double t60, int trial);

// simulate -> separate -> evaluate for one cell. Failures become rows whose
// status names the error and whose values are NaN.
std::vector<BenchmarkRow> RunCell(const BenchmarkPlan& plan, double t60, int trial,
                                  Method method);

// Runs every (t60, trial, method) cell on up to `jobs` threads. Rows are
// emitted to `csv` (if given) in grid order as soon as they are complete,
// followed by a summary block of '#'-prefixed lines.
std::vector<BenchmarkRow> RunBenchmark(const BenchmarkPlan& plan, int jobs,
                                       std::ostream* csv = nullptr);

void CmdBenchmark(const BenchmarkPlan& plan, int jobs,
                  const std::filesystem::path& out_csv);

}  // namespace otbss::cli

#endif  // OTBSS_CLI_COMMANDS_H_
