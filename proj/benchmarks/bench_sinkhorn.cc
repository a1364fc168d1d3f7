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


#include <memory>
#include <random>

#include <Eigen/Core>
#include <benchmark/benchmark.h>

#include "otbss/kron.h"
#include "otbss/sinkhorn.h"

namespace {

Eigen::VectorXd RandomMass(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// Arg 0: dense squared cost, arg 1: factorized Kronecker-sum cost.
void BM_SinkhornFrame(benchmark::State& state) {
  const int bins = static_cast<int>(state.range(0));
  const bool factorized = state.range(1) != 0;
  const otbss::SinkhornParams params;
  std::unique_ptr<otbss::KernelOperator> kernel;
  if (factorized) {
    kernel = std::make_unique<otbss::FactorizedKernel>(
        otbss::KronSumCost(otbss::FactorizeBins(bins, 2)), params.mu);
  } else {
    kernel = std::make_unique<otbss::GibbsKernel>(otbss::BuildCostSq(bins), params.mu);
  }
  const Eigen::VectorXd a = RandomMass(bins, 1), b = RandomMass(bins, 2);
  for (auto _ : state) {
    otbss::Scalings s = otbss::SinkhornScalings(a, b, *kernel, params);
    benchmark::DoNotOptimize(s.u.data());
  }
}
BENCHMARK(BM_SinkhornFrame)
    ->Args({129, 0})
    ->Args({129, 1})
    ->Args({513, 0})
    ->Args({513, 1});

}  // namespace
