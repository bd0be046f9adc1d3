#include "rwflow/experiments.hpp"
#include "rwflow/sampler.hpp"
#include "rwflow/targets.hpp"
#include "rwflow/velocity.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

struct Projected
{
  std::vector<double> p;
  std::vector<double> s;
};

Projected gaussian_projections(std::size_t n)
{
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Projected out{ std::vector<double>(n), std::vector<double>(n) };
  for (std::size_t i = 0; i < n; ++i) {
    out.p[i] = normal(rng);
    out.s[i] = -out.p[i];
  }
  return out;
}

void run_backend(benchmark::State& state, rwflow::VelocityBackend backend)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const Projected pr = gaussian_projections(n);
  const rwflow::FlowKind flow = rwflow::flow_of(backend);
  const auto family = backend == rwflow::VelocityBackend::KdrwLaplace ? rwflow::KernelFamily::Laplace
                                                                       : rwflow::KernelFamily::Gaussian;
  const rwflow::Kernel1D kernel(family, rwflow::fixed_bandwidth_rule(flow, n));
  const rwflow::ProjectedState ps{ pr.p, pr.s, 0.01 / static_cast<double>(n) };
  const rwflow::FftParams params;
  for (auto _ : state)
    benchmark::DoNotOptimize(rwflow::compute_velocity(backend, ps, kernel, params));
  state.SetComplexityN(state.range(0));
}

void BM_KdrwDirect(benchmark::State& s) { run_backend(s, rwflow::VelocityBackend::Kdrw); }
void BM_KdrwFft(benchmark::State& s) { run_backend(s, rwflow::VelocityBackend::KdrwFft); }
void BM_RrwFft(benchmark::State& s) { run_backend(s, rwflow::VelocityBackend::RrwFft); }
void BM_KdrwLaplace(benchmark::State& s) { run_backend(s, rwflow::VelocityBackend::KdrwLaplace); }

BENCHMARK(BM_KdrwDirect)->RangeMultiplier(2)->Range(256, 4096)->Complexity();
BENCHMARK(BM_KdrwFft)->RangeMultiplier(4)->Range(256, 1 << 16)->Complexity();
BENCHMARK(BM_RrwFft)->RangeMultiplier(4)->Range(256, 1 << 16)->Complexity();
BENCHMARK(BM_KdrwLaplace)->RangeMultiplier(4)->Range(256, 1 << 16)->Complexity();

void BM_RwStep(benchmark::State& state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const rwflow::Target target = rwflow::make_target("banana", d);
  rwflow::SamplerConfig cfg;
  cfg.step_size = 0.001;
  cfg.warmup_steps = 0;
  rwflow::ParticleEnsemble ens = rwflow::iid_target_sample(target, n, 3);
  rwflow::DirectionStream stream(5);
  std::size_t m = 0;
  for (auto _ : state)
    rwflow::rw_step(ens, target, cfg, stream, m++);
}

BENCHMARK(BM_RwStep)->ArgsProduct({ { 256, 1024, 4096, 16384 }, { 2, 32 } });

} // namespace

BENCHMARK_MAIN();
