// Serial vs OpenMP conv kernels on shapes matching the training workload.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "dualteacher/kernels.hpp"
#include "dualteacher/rng.hpp"

namespace {

struct ConvCase {
  int n, cin, cout, h, w;
  std::vector<float> in, wgt, bias, out, gout, gin, gwgt;
};

ConvCase make_case(int n, int cin, int cout, int hw) {
  ConvCase c{n, cin, cout, hw, hw, {}, {}, {}, {}, {}, {}, {}};
  dt::Rng rng(7);
  auto fill = [&](std::vector<float>& v, std::size_t size) {
    v.resize(size);
    for (auto& x : v) x = static_cast<float>(rng.uniform() * 2.0 - 1.0);
  };
  std::size_t plane = static_cast<std::size_t>(hw) * hw;
  fill(c.in, static_cast<std::size_t>(n) * cin * plane);
  fill(c.wgt, static_cast<std::size_t>(cout) * cin * 9);
  fill(c.bias, cout);
  c.out.resize(static_cast<std::size_t>(n) * cout * plane);
  fill(c.gout, c.out.size());
  c.gin.resize(c.in.size());
  c.gwgt.resize(c.wgt.size());
  return c;
}

void forward_serial(benchmark::State& state) {
  auto c = make_case(8, 16, 16, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    dt::kernels::conv3x3_forward_serial(c.in.data(), c.wgt.data(), c.bias.data(), c.out.data(), c.n, c.cin,
                               c.cout, c.h, c.w);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.out.size()) * c.cin * 9);
}

void forward_parallel(benchmark::State& state) {
  auto c = make_case(8, 16, 16, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    dt::kernels::conv3x3_forward_parallel(c.in.data(), c.wgt.data(), c.bias.data(), c.out.data(), c.n,
                                 c.cin, c.cout, c.h, c.w);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.out.size()) * c.cin * 9);
}

void backward_input_serial(benchmark::State& state) {
  auto c = make_case(8, 16, 16, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    std::fill(c.gin.begin(), c.gin.end(), 0.0f);
    dt::kernels::conv3x3_backward_input_serial(c.gout.data(), c.wgt.data(), c.gin.data(), c.n, c.cin,
                                      c.cout, c.h, c.w);
    benchmark::DoNotOptimize(c.gin.data());
  }
}

void backward_input_parallel(benchmark::State& state) {
  auto c = make_case(8, 16, 16, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    std::fill(c.gin.begin(), c.gin.end(), 0.0f);
    dt::kernels::conv3x3_backward_input_parallel(c.gout.data(), c.wgt.data(), c.gin.data(), c.n, c.cin,
                                        c.cout, c.h, c.w);
    benchmark::DoNotOptimize(c.gin.data());
  }
}

}  // namespace

BENCHMARK(forward_serial)->Arg(32)->Arg(64);
BENCHMARK(forward_parallel)->Arg(32)->Arg(64);
BENCHMARK(backward_input_serial)->Arg(32)->Arg(64);
BENCHMARK(backward_input_parallel)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
