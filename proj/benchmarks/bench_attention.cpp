#include <benchmark/benchmark.h>

#include "camctx/attention.hpp"
#include "camctx/rng.hpp"

using namespace camctx;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// args: proposals, memory rows
void BM_AttentionForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const auto p = AttentionParams::init(32, 41, 32, rng);
  const Matrix a = random_matrix(n, 32, rng);
  const Matrix b = random_matrix(m, 41, rng);
  for (auto _ : state) benchmark::DoNotOptimize(attention_forward(a, b, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * m));
}
BENCHMARK(BM_AttentionForward)->Args({4, 64})->Args({4, 1024})->Args({4, 8500});

void BM_AttentionBackward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto p = AttentionParams::init(32, 41, 32, rng);
  const Matrix a = random_matrix(4, 32, rng);
  const Matrix b = random_matrix(m, 41, rng);
  const Matrix up = random_matrix(4, 32, rng);
  AttentionCache cache;
  attention_forward(a, b, p, &cache);
  for (auto _ : state) {
    auto grad = AttentionParams::zeros(32, 41, 32);
    benchmark::DoNotOptimize(attention_backward(cache, up, p, grad));
  }
}
BENCHMARK(BM_AttentionBackward)->Arg(64)->Arg(1024);

}  // namespace
