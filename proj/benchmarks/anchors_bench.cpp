#include <benchmark/benchmark.h>

#include "luskit/anchors.hpp"

using namespace luskit;

namespace {

void BM_GenerateAnchors(benchmark::State& state) {
  AnchorConfig c = anchor_preset("paper-frcnn");
  c.feature_map = {state.range(0), state.range(0), 1};
  for (auto _ : state) benchmark::DoNotOptimize(generate_anchors(c, 600.0, 600.0));
  state.SetItemsProcessed(state.iterations() * potential_anchor_count(c));
}
BENCHMARK(BM_GenerateAnchors)->Arg(8)->Arg(32)->Arg(64);

void BM_AssignLabels(benchmark::State& state) {
  AnchorConfig c = anchor_preset("paper-frcnn");
  c.feature_map = {38, 25, 1};
  const auto grid = generate_anchors(c, 600.0, 400.0);
  const std::vector<GroundTruthBox> gts{{{191, 53, 365, 80}, FeatureClass::IrregularPleura},
                                        {{40, 200, 240, 260}, FeatureClass::ALines},
                                        {{300, 120, 420, 380}, FeatureClass::Consolidation}};
  for (auto _ : state) benchmark::DoNotOptimize(label_anchors(grid, gts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.anchors.size()));
}
BENCHMARK(BM_AssignLabels);

}  // namespace
