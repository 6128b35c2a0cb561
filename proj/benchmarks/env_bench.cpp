// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "motiac/baselines.hpp"
#include "motiac/rtb_env.hpp"

namespace {

void BM_EnvStep(benchmark::State& state) {
  motiac::rtb::EnvConfig cfg;
  const auto catalog = motiac::rtb::GenerateCatalog(cfg.n_ads, cfg.catalog, cfg.catalog_seed);
  motiac::rtb::Environment env(catalog, cfg, 1);
  std::vector<double> bids;
  for (const auto& ad : catalog) bids.push_back(ad.value_per_click());
  int day = 0;
  for (auto _ : state) {
    if (env.day_over()) env.Reset(++day, 1);
    benchmark::DoNotOptimize(env.Step(bids));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(catalog.size()));
}
BENCHMARK(BM_EnvStep);

void BM_PidEpisode(benchmark::State& state) {
  motiac::rtb::EnvConfig cfg;
  const auto catalog = motiac::rtb::GenerateCatalog(cfg.n_ads, cfg.catalog, cfg.catalog_seed);
  motiac::rtb::Environment env(catalog, cfg, 1);
  int day = 0;
  for (auto _ : state) {
    env.Reset(day++, 1);
    benchmark::DoNotOptimize(motiac::baselines::PidEpisode(env, {}));
  }
}
BENCHMARK(BM_PidEpisode)->Unit(benchmark::kMillisecond);

void BM_AuctionThreeBidders(benchmark::State& state) {
  const std::vector<motiac::rtb::Bid> bids{{1, 3.0, 0.02}, {2, 2.0, 0.03}, {-1, 2.5, 0.02}};
  for (auto _ : state) benchmark::DoNotOptimize(motiac::rtb::RunAuction(bids, 100, 0.01));
}
BENCHMARK(BM_AuctionThreeBidders);

}  // namespace
