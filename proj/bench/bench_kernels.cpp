// Serial reference against the OpenMP path for the probe-parallel kernels.
// Run with OMP_NUM_THREADS set to compare thread counts; both paths return
// bit-identical results, so only time differs.

#include "madmm/diagnostics.hpp"
#include "madmm/instances.hpp"
#include "madmm/io.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace madmm;

InstanceData instance(Index n) {
  InstanceSpec s;
  s.family = Family::quadratic_coupled;
  s.u_dim = n;
  s.v_dim = n;
  s.x_dim = n / 2;
  s.seed = 1;
  s.p_kind = TermKind::l1;
  s.q_kind = TermKind::box;
  return generate(s);
}

Execution exec_of(const benchmark::State& st) {
  return st.range(1) == 0 ? Execution::serial : Execution::parallel;
}

void BM_Certificate(benchmark::State& st) {
  const InstanceData d = instance(st.range(0));
  const CoupledProblem prob = build_problem(d);
  const Solver solver(prob, resolve_config(prob, RunConfig{}));
  const IterateState s0 = solver.zero_state();
  const IterateState s1 = solver.step(s0);
  const IterateState s2 = solver.step(s1);
  Rng rng(7);
  const auto probes = sample_domain_probes(prob, rng, 512);
  for (auto _ : st) {
    auto r = proposition1_certificate(solver, &s0, s1, s2, probes, exec_of(st));
    benchmark::DoNotOptimize(r);
  }
  st.SetItemsProcessed(st.iterations() * 512);
}

void BM_EpsilonProbe(benchmark::State& st) {
  const InstanceData d = instance(st.range(0));
  const CoupledProblem prob = build_problem(d);
  Probe cand{Vector::Zero(prob.u_dim()), Vector::Zero(prob.v_dim()), Vector::Zero(prob.x_dim())};
  for (auto _ : st) {
    auto r = epsilon_approx_probe(prob, cand, 2048, 3, exec_of(st));
    benchmark::DoNotOptimize(r);
  }
  st.SetItemsProcessed(st.iterations() * 2048);
}

void BM_MapIndices(benchmark::State& st) {
  const Index n = st.range(0);
  const Matrix m = Matrix::Random(32, 32);
  for (auto _ : st) {
    auto v = map_indices(exec_of(st), n, [&](Index i) {
      const Vector x = Vector::Constant(32, static_cast<double>(i));
      return x.dot(m * x);
    });
    benchmark::DoNotOptimize(v);
  }
}

void BM_Spectrum(benchmark::State& st) {
  const InstanceData d = instance(st.range(0));
  const CoupledProblem prob = build_problem(d);
  const SelfAdjointOperator q = prob.phi.q();
  for (auto _ : st) {
    auto s = spectrum(q);
    benchmark::DoNotOptimize(s);
  }
}

}  // namespace

BENCHMARK(BM_Certificate)->ArgsProduct({{10, 50}, {0, 1}})->ArgNames({"dim", "parallel"});
BENCHMARK(BM_EpsilonProbe)->ArgsProduct({{10, 50}, {0, 1}})->ArgNames({"dim", "parallel"});
BENCHMARK(BM_MapIndices)->ArgsProduct({{1 << 12}, {0, 1}})->ArgNames({"n", "parallel"});
BENCHMARK(BM_Spectrum)->Arg(50)->Arg(200)->ArgName("dim");

BENCHMARK_MAIN();
