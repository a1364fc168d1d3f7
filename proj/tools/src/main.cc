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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "otbss/cli/commands.h"
#include "otbss/cli/config.h"
#include "otbss/log.h"

namespace {

using namespace otbss;
using namespace otbss::cli;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otbss: determined blind source separation with ILRMA and SDILRMA"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "otbss 0.1.0");

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string method_name;
  std::string input_path;
  std::string est_dir, ref_dir;
  int jobs = 1;
  bool paper_scale = false;

  auto* simulate = app.add_subcommand("simulate", "Simulate a convolutive mixture");
  simulate->add_option("--config", config_path, "Scene config (JSON)")->required();
  simulate->add_option("--out", out_path, "Output directory")->required();
  simulate->add_option("--seed", seed, "Override the scene seed");

  auto* separate = app.add_subcommand("separate", "Separate a multichannel WAV");
  separate->add_option("input", input_path, "Mixture WAV")->required();
  separate->add_option("--method", method_name,
                       "ilrma, sdilrma-dense or sdilrma-kron (overrides the config)");
  separate->add_option("--config", config_path, "Separation config (JSON)");
  separate->add_option("--out", out_path, "Output directory")->required();
  separate->add_option("--seed", seed, "Override the NMF initialization seed");

  auto* evaluate = app.add_subcommand("evaluate", "SDR/SIR of estimates against references");
  evaluate->add_option("est_dir", est_dir, "Directory with est_<n>.wav")->required();
  evaluate->add_option("ref_dir", ref_dir, "Directory with img_<n>.wav")->required();
  evaluate->add_option("--out", out_path, "Output CSV")->required();

  auto* benchmark = app.add_subcommand("benchmark", "Run the t60 x trial x method grid");
  benchmark->add_option("--config", config_path, "Benchmark plan (JSON); defaults if omitted");
  benchmark->add_option("--out", out_path, "Output CSV")->required();
  benchmark->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  benchmark->add_flag("--paper-scale", paper_scale,
                      "Use 100 trials per cell instead of the plan's count");
  benchmark->add_option("--seed", seed, "Override the plan seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      SimulateConfig cfg = LoadSimulateConfig(config_path);
      if (seed) cfg.seed = *seed;
      CmdSimulate(cfg, out_path);
    } else if (separate->parsed()) {
      SeparationConfig cfg = config_path.empty() ? SeparationConfig{}
                                                 : LoadSeparationConfig(config_path);
      if (!method_name.empty()) cfg.method = ParseMethod(method_name);
      if (seed) cfg.seed = *seed;
      CmdSeparate(input_path, cfg, out_path);
    } else if (evaluate->parsed()) {
      const EvalResult r = CmdEvaluate(est_dir, ref_dir, out_path);
      for (int n = 0; n < r.size(); ++n) {
        std::cout << "source " << n << ": SDR " << r.sdr[n] << " dB, SIR " << r.sir[n]
                  << " dB (estimate " << r.permutation[n] << ")\n";
      }
    } else if (benchmark->parsed()) {
      BenchmarkPlan plan;
      plan.t60_grid = DefaultT60Grid();
      if (!config_path.empty()) plan = LoadBenchmarkPlan(config_path);
      if (paper_scale) plan.trials = kPaperScaleTrials;
      if (seed) plan.seed = *seed;
      CmdBenchmark(plan, jobs, out_path);
    }
  } catch (const std::exception& e) {
    const int code = ExitCodeFor(e);
    Log().error("{}", e.what());
    return code;
  }
  return kExitOk;
}
