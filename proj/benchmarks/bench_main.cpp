#include <benchmark/benchmark.h>

#include <vector>

#include "gbst/booster.hpp"
#include "gbst/rng.hpp"
#include "gbst/settree.hpp"
#include "gbst/synth.hpp"

namespace {

std::vector<double> random_values(std::size_t n) {
  gbst::Rng rng(n);
  std::vector<double> values(n);
  for (double& v : values) v = rng.real01() * 1500.0;
  return values;
}

void BM_EvalStatistic(benchmark::State& state) {
  const std::vector<double> values =
      random_values(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gbst::eval_statistic(gbst::SetOp::kInvHarmonicMean, values));
  }
}
BENCHMARK(BM_EvalStatistic)->Arg(8)->Arg(40)->Arg(256);

const std::vector<gbst::FlowStream>& corpus() {
  static const std::vector<gbst::FlowStream> flows = [] {
    gbst::SynthRule rule;
    return gbst::generate(rule, 200, 42);
  }();
  return flows;
}

const gbst::GbstModel& trained_model() {
  static const gbst::GbstModel model = [] {
    gbst::BoostConfig config;
    config.n_trees = 10;
    return gbst::fit(corpus(), {}, config).model;
  }();
  return model;
}

void BM_PredictScore(benchmark::State& state) {
  const gbst::GbstModel& model = trained_model();
  const auto& flows = corpus();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gbst::predict_score(model, flows[i]));
    i = (i + 1) % flows.size();
  }
}
BENCHMARK(BM_PredictScore);

void BM_FitTree(benchmark::State& state) {
  const auto& flows = corpus();
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<gbst::TrainSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = flows[i].label == gbst::Label::kAttack ? 1.0 : 0.0;
    samples.push_back(gbst::TrainSample{&flows[i], 0.5 - y, 0.25});
  }
  gbst::TreeConfig config;
  config.max_depth = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gbst::fit_tree(samples, config));
  }
}
BENCHMARK(BM_FitTree)->Args({100, 3})->Args({100, 6})->Args({400, 6});

void BM_Generate(benchmark::State& state) {
  gbst::SynthRule rule;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gbst::generate(rule, static_cast<std::size_t>(state.range(0)), 7));
  }
}
BENCHMARK(BM_Generate)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
