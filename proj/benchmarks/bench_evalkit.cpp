#include <benchmark/benchmark.h>

#include "camctx/evalkit.hpp"
#include "camctx/rng.hpp"

using namespace camctx;

namespace {

BoxPx random_box(Rng& rng) {
  return BoxPx{rng.uniform(50, 590), rng.uniform(50, 430), rng.uniform(20, 100), rng.uniform(20, 100), 640, 480};
}

void BM_Evaluate(benchmark::State& state) {
  const auto frames = static_cast<std::uint64_t>(state.range(0));
  Rng rng(3);
  std::vector<Detection> dets;
  std::vector<GroundTruthBox> gts;
  for (std::uint64_t f = 0; f < frames; ++f) {
    const int cls = static_cast<int>(rng.below(6));
    const BoxPx box = random_box(rng);
    gts.push_back({f, cls, box, false});
    for (std::uint32_t k = 0; k < 3; ++k)
      dets.push_back({f, k == 0 ? cls : static_cast<int>(rng.below(6)), rng.uniform(), k == 0 ? box : random_box(rng), k});
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(dets, gts, 6));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dets.size()));
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(20000);

}  // namespace
