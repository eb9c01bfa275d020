// Serial reference vs OpenMP kernels on random inputs.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "kspace/kernels.hpp"

namespace {

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(gen);
  return m;
}

struct Chains {
  std::vector<Eigen::MatrixXd> transitions;
  std::vector<Eigen::VectorXd> occupancy;
};

Chains random_chains(int n, int states) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Chains c;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd a(states, states);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = u(gen);
    a = a.array().colwise() / a.rowwise().sum().array();
    Eigen::VectorXd occ(states);
    for (int s = 0; s < states; ++s) occ[s] = u(gen);
    c.transitions.push_back(a);
    c.occupancy.push_back(occ / occ.sum());
  }
  return c;
}

template <auto Fn>
void BM_pairwise(benchmark::State& state) {
  const auto pts = random_points(state.range(0), 16);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(pts));
}

template <auto Fn>
void BM_assign(benchmark::State& state) {
  const auto pts = random_points(state.range(0), 16);
  const auto cents = random_points(8, 16);
  std::vector<int> labels;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(pts, cents, labels));
}

template <auto Fn>
void BM_chains(benchmark::State& state) {
  const auto c = random_chains(static_cast<int>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c.transitions, c.occupancy));
}

}  // namespace

using namespace kspace::kernels;

BENCHMARK(BM_pairwise<serial::pairwise_distances>)->Name("pairwise/serial")->Range(64, 1024);
BENCHMARK(BM_pairwise<omp::pairwise_distances>)->Name("pairwise/omp")->Range(64, 1024);
BENCHMARK(BM_assign<serial::assign_nearest>)->Name("assign/serial")->Range(1 << 10, 1 << 16);
BENCHMARK(BM_assign<omp::assign_nearest>)->Name("assign/omp")->Range(1 << 10, 1 << 16);
BENCHMARK(BM_chains<serial::chain_distance_sq>)->Name("chains/serial")->Range(32, 512);
BENCHMARK(BM_chains<omp::chain_distance_sq>)->Name("chains/omp")->Range(32, 512);

BENCHMARK_MAIN();
