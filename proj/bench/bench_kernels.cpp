// Parallel vs serial affine kernels at policy-sized shapes.
// Args: batch, in, out.

#include <benchmark/benchmark.h>

#include <vector>

#include "pgfn/kernels.hpp"
#include "pgfn/rng.hpp"

namespace {

struct Buffers {
  std::vector<double> x, w, b, y, dy, dw, db, dx;
  int batch, in, out;

  Buffers(int batch_, int in_, int out_) : batch(batch_), in(in_), out(out_) {
    pgfn::Rng rng(1);
    auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (double& e : v) e = rng.uniform() - 0.5;
    };
    const auto nb = static_cast<std::size_t>(batch);
    fill(x, nb * in);
    fill(w, static_cast<std::size_t>(out) * in);
    fill(b, static_cast<std::size_t>(out));
    fill(dy, nb * out);
    y.assign(nb * out, 0.0);
    dw.assign(w.size(), 0.0);
    db.assign(b.size(), 0.0);
    dx.assign(x.size(), 0.0);
  }
};

Buffers make(const benchmark::State& s) {
  return Buffers(static_cast<int>(s.range(0)), static_cast<int>(s.range(1)),
                 static_cast<int>(s.range(2)));
}

void set_counters(benchmark::State& s, const Buffers& k) {
  s.SetItemsProcessed(s.iterations() * static_cast<long>(k.batch) * k.in * k.out);
}

template <bool Parallel>
void BM_Forward(benchmark::State& s) {
  Buffers k = make(s);
  for (auto _ : s) {
    if constexpr (Parallel)
      pgfn::kernels::affine_forward(k.x, k.batch, k.in, k.w, k.b, k.out, k.y);
    else
      pgfn::kernels::serial::affine_forward(k.x, k.batch, k.in, k.w, k.b, k.out, k.y);
    benchmark::DoNotOptimize(k.y.data());
  }
  set_counters(s, k);
}

template <bool Parallel>
void BM_BackwardParams(benchmark::State& s) {
  Buffers k = make(s);
  for (auto _ : s) {
    if constexpr (Parallel)
      pgfn::kernels::affine_backward_params(k.dy, k.x, k.batch, k.in, k.out, k.dw, k.db);
    else
      pgfn::kernels::serial::affine_backward_params(k.dy, k.x, k.batch, k.in, k.out, k.dw, k.db);
    benchmark::DoNotOptimize(k.dw.data());
  }
  set_counters(s, k);
}

template <bool Parallel>
void BM_BackwardInput(benchmark::State& s) {
  Buffers k = make(s);
  for (auto _ : s) {
    if constexpr (Parallel)
      pgfn::kernels::affine_backward_input(k.dy, k.w, k.batch, k.in, k.out, k.dx);
    else
      pgfn::kernels::serial::affine_backward_input(k.dy, k.w, k.batch, k.in, k.out, k.dx);
    benchmark::DoNotOptimize(k.dx.data());
  }
  set_counters(s, k);
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({16, 34, 64})->Args({64, 128, 128})->Args({256, 128, 128})->Args({1024, 256, 256});
}

}  // namespace

BENCHMARK(BM_Forward<true>)->Name("forward/omp")->Apply(shapes);
BENCHMARK(BM_Forward<false>)->Name("forward/serial")->Apply(shapes);
BENCHMARK(BM_BackwardParams<true>)->Name("backward_params/omp")->Apply(shapes);
BENCHMARK(BM_BackwardParams<false>)->Name("backward_params/serial")->Apply(shapes);
BENCHMARK(BM_BackwardInput<true>)->Name("backward_input/omp")->Apply(shapes);
BENCHMARK(BM_BackwardInput<false>)->Name("backward_input/serial")->Apply(shapes);

BENCHMARK_MAIN();
