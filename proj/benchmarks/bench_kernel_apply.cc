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


#include <random>

#include <Eigen/Core>
#include <benchmark/benchmark.h>

#include "otbss/kron.h"

namespace {

Eigen::VectorXd RandomVector(int n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

void BM_FactorizedApply(benchmark::State& state) {
  const int f = static_cast<int>(state.range(0));
  const otbss::FactorizedKernel kernel(otbss::KronSumCost({{f, f}}), 100.0);
  const Eigen::VectorXd v = RandomVector(f * f);
  Eigen::VectorXd out;
  for (auto _ : state) {
    kernel.Apply(v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["bins"] = f * f;
}
BENCHMARK(BM_FactorizedApply)->Arg(16)->Arg(32)->Arg(64);

void BM_DenseApply(benchmark::State& state) {
  const int f = static_cast<int>(state.range(0));
  const Eigen::MatrixXd dense =
      otbss::FactorizedKernel(otbss::KronSumCost({{f, f}}), 100.0).Dense();
  const Eigen::VectorXd v = RandomVector(f * f);
  Eigen::VectorXd out;
  for (auto _ : state) {
    out.noalias() = dense * v;
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["bins"] = f * f;
}
BENCHMARK(BM_DenseApply)->Arg(16)->Arg(32)->Arg(64);

}  // namespace
