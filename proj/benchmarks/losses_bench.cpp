/*
 * Copyright 2026 The asymseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "asymseg/losses.hpp"

namespace {

using namespace asymseg;

struct Inputs {
  std::vector<double> p;
  std::vector<std::uint8_t> g;
};

Inputs make_inputs(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::bernoulli_distribution lesion(0.01);
  Inputs in{std::vector<double>(n), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    in.p[i] = u(rng);
    in.g[i] = lesion(rng) ? 1 : 0;
  }
  in.g[0] = 1;
  return in;
}

void BM_Loss(benchmark::State& state, LossSpec spec) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = loss_with_grad(spec, in.p, in.g);
    benchmark::DoNotOptimize(r.value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK_CAPTURE(BM_Loss, f_beta, LossSpec::f_beta(1.5))->Arg(4096)->Arg(1 << 18);
BENCHMARK_CAPTURE(BM_Loss, gdl, LossSpec::gdl())->Arg(4096)->Arg(1 << 18);
BENCHMARK_CAPTURE(BM_Loss, focal, LossSpec::focal())->Arg(4096)->Arg(1 << 18);

}  // namespace
