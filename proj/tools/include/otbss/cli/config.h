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

#ifndef OTBSS_CLI_CONFIG_H_
#define OTBSS_CLI_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "otbss/error.h"
#include "otbss/room_sim.h"
#include "otbss/separation.h"

namespace otbss::cli {

inline constexpr int kSchemaVersion = 1;

// Malformed or invalid configuration file; the message carries file:line.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Scene and source material for `simulate` and for each benchmark cell.
struct SimulateConfig {
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  double duration = 3.0;  // seconds of source material
  double t60 = 0.0;
  ArrayGeometry geometry;
  // Source angles in degrees; empty: two angles drawn by SampleSisecAngles(seed).
  std::vector<double> angles;
  // Explicit positions override the array geometry when both are non-empty.
  std::vector<Point3> mic_positions;
  std::vector<Point3> source_positions;
  int max_rir_len = 0;
  double speed_of_sound = 343.0;
  // Mono WAVs used instead of synthetic material, one per source.
  std::vector<std::filesystem::path> source_files;
};

struct BenchmarkPlan {
  std::vector<double> t60_grid;  // default 0, 0.05, ..., 0.6
  int trials = 5;
  std::vector<Method> methods{Method::kIlrma, Method::kSdilrmaKron};
  std::uint64_t seed = 0;  // angles and source material
  SimulateConfig scene;    // t60, seed and angles are set per cell
  SeparationConfig separation;
  void Validate() const;
};

inline constexpr int kPaperScaleTrials = 100;

// Default t60 grid: 0 to 0.6 s in 0.05 s steps.
std::vector<double> DefaultT60Grid();

// Parsers. Every file must carry "schema_version": 1; unknown keys, wrong
// types and invalid values raise ConfigError naming the file and line.
SimulateConfig LoadSimulateConfig(const std::filesystem::path& path);
SeparationConfig LoadSeparationConfig(const std::filesystem::path& path);
BenchmarkPlan LoadBenchmarkPlan(const std::filesystem::path& path);

SimulateConfig ParseSimulateConfig(const std::string& text,
                                   const std::string& origin = "<string>");
SeparationConfig ParseSeparationConfig(const std::string& text,
                                       const std::string& origin = "<string>");
BenchmarkPlan ParseBenchmarkPlan(const std::string& text,
                                 const std::string& origin = "<string>");

// Resolved-config echoes, valid inputs for the matching parser.
std::string SeparationConfigToJson(const SeparationConfig& cfg);
std::string BenchmarkPlanToJson(const BenchmarkPlan& plan);

}  // namespace otbss::cli

#endif  // OTBSS_CLI_CONFIG_H_
