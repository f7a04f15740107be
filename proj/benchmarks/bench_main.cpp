#include <benchmark/benchmark.h>

#include "snapfit/dataset.hpp"
#include "snapfit/rng.hpp"
#include "snapfit/tree.hpp"

namespace {

using namespace snapfit;

ForceTorqueProfile assembly_profile(double dx, double dth, std::uint64_t seed) {
  return simulate_assembly({dx, dth}, PlantConfig{}, seed).first;
}

void BM_SimulateAssembly(benchmark::State& state) {
  const PlantConfig plant;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_assembly({1.2, -0.8}, plant, seed++));
  }
}
BENCHMARK(BM_SimulateAssembly);

void BM_FitFpca(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd curves(n, 201);
  for (int i = 0; i < n; ++i) {
    const ForceTorqueProfile p = truncate(assembly_profile(-2.0 + 0.03 * i, 0.5, i), 2.0);
    curves.row(i) = Eigen::Map<const Eigen::VectorXd>(p.channels[2].data(), 201).transpose();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_fpca(curves, 2, 0.01));
  }
}
BENCHMARK(BM_FitFpca)->Arg(32)->Arg(131);

void BM_TrainSvm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd points(n, 2);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng::uniform01(7, 0, i) - 0.5;
    const double v = rng::uniform01(7, 1, i) - 0.5;
    labels[i] = i % 2 == 0 ? 1 : -1;
    points(i, 0) = labels[i] * 0.8 + u;
    points(i, 1) = v;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_svm(points, labels, 10.0, {KernelKind::rbf, 0.0}));
  }
}
BENCHMARK(BM_TrainSvm)->Arg(32)->Arg(131);

void BM_BuildTreeTwoLabels(benchmark::State& state) {
  std::vector<FeatureVector> features;
  std::vector<StateLabel> labels;
  for (int i = 0; i < 40; ++i) {
    FeatureVector f;
    for (int c = 0; c < kChannelCount; ++c) {
      f.channel_scores[c] = Eigen::Vector2d(rng::uniform01(11, c, i) - 0.5,
                                            rng::uniform01(11, c + 8, i) - 0.5);
    }
    const StateLabel label = i % 2 == 0 ? StateLabel::S1_success : StateLabel::S2;
    f.channel_scores[2](0) += label == StateLabel::S1_success ? -3.0 : 3.0;
    features.push_back(std::move(f));
    labels.push_back(label);
  }
  TreeBuildConfig config;
  config.warn = [](const std::string&) {};
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_tree(features, labels, config));
  }
}
BENCHMARK(BM_BuildTreeTwoLabels);

}  // namespace

BENCHMARK_MAIN();
