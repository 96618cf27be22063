#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "siren/attribution.hpp"
#include "siren/baselines.hpp"
#include "siren/bench.hpp"
#include "siren/diffusion.hpp"
#include "siren/fcm.hpp"
#include "siren/mlp.hpp"
#include "siren/score.hpp"

using namespace siren;

namespace {

FittedFcm linear_chain(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId j = 1; j < n; ++j) edges.push_back({j - 1, j});
  std::vector<NodeMechanism> mechs(n);
  for (NodeId j = 0; j < n; ++j) {
    mechs[j].kind = MechanismKind::kLinear;
    mechs[j].noise = GaussianNoise{0.0, 1.0};
    if (j == 0) {
      mechs[j].mean = ConstantFn{0.0};
    } else {
      mechs[j].mean = LinearFn{0.0, Eigen::VectorXd::Constant(1, 0.9)};
    }
  }
  return FittedFcm(Dag(n, edges), mechs);
}

ScoreSet exact_scores(const FittedFcm& fcm) {
  ScoreSet set;
  for (std::size_t j = 0; j < fcm.n_nodes(); ++j) {
    set.noise.push_back(std::make_shared<GaussianScore>(0.0, 1.0));
  }
  auto leaf = linear_gaussian_leaf(fcm);
  set.leaf_marginal = std::make_shared<GaussianScore>(leaf->mean, std::sqrt(leaf->variance));
  return set;
}

}  // namespace

static void BM_MlpForwardBatch(benchmark::State& state) {
  const std::size_t dims[] = {2, 100, 100, 100, 1};
  Mlp net = Mlp::initialize(dims, Activation::kSwish, OutputTransform::kIdentity, 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_raw(x, nullptr));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(64)->Arg(1024);

static void BM_MlpTrainStep(benchmark::State& state) {
  const std::size_t dims[] = {2, 100, 100, 100, 1};
  Mlp net = Mlp::initialize(dims, Activation::kSwish, OutputTransform::kIdentity, 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 64);
  Mlp::Tape tape;
  for (auto _ : state) {
    Eigen::MatrixXd out = net.forward_raw(x, &tape);
    auto grads = net.zero_gradients();
    net.backward_raw(tape, out, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_MlpTrainStep);

static void BM_SampleTrajectory(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  std::vector<std::shared_ptr<const LocalScore>> models(d, std::make_shared<GaussianScore>(0.0, 1.0));
  std::vector<double> z0(d, 3.0);
  const auto times = descending_time_grid(100);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_trajectory(models, z0, times, 0.999 / 100, ++seed));
  }
}
BENCHMARK(BM_SampleTrajectory)->Arg(5)->Arg(50);

static void BM_ComposeLeafScore(benchmark::State& state) {
  FittedFcm fcm = linear_chain(static_cast<std::size_t>(state.range(0)));
  ScoreSet set = exact_scores(fcm);
  std::vector<double> z(fcm.n_nodes(), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(compose_leaf_score(fcm, set, z, 0.5));
}
BENCHMARK(BM_ComposeLeafScore)->Arg(5)->Arg(15)->Arg(50);

static void BM_SirenAttribute(benchmark::State& state) {
  FittedFcm fcm = linear_chain(static_cast<std::size_t>(state.range(0)));
  ScoreSet set = exact_scores(fcm);
  std::vector<double> z(fcm.n_nodes(), 0.0);
  z[0] = 5.0;
  Eigen::VectorXd x = fcm.forward(z);
  std::vector<double> xs(x.data(), x.data() + x.size());
  SirenConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(siren_attribute(fcm, set, xs, fcm.dag().leaf(), cfg));
  }
}
BENCHMARK(BM_SirenAttribute)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_CausalRca(benchmark::State& state) {
  FittedFcm fcm = linear_chain(6);
  std::vector<double> z(6, 0.0);
  z[2] = 5.0;
  Eigen::VectorXd x = fcm.forward(z);
  std::vector<double> xs(x.data(), x.data() + x.size());
  CausalRcaConfig cfg{50, 500, 50, false, 1};
  for (auto _ : state) benchmark::DoNotOptimize(causalrca_shapley(fcm, xs, 5, cfg));
}
BENCHMARK(BM_CausalRca)->Unit(benchmark::kMillisecond);

static void BM_Ndcg(benchmark::State& state) {
  std::vector<NodeId> ranking(50);
  for (NodeId i = 0; i < 50; ++i) ranking[i] = 49 - i;
  std::vector<NodeId> truth{3, 17, 40};
  for (auto _ : state) benchmark::DoNotOptimize(ndcg_at_k(ranking, truth, 5));
}
BENCHMARK(BM_Ndcg);
BENCHMARK_MAIN();
