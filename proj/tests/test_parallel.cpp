#include "madmm/diagnostics.hpp"
#include "madmm/parallel.hpp"

#include "oracles/oracle.hpp"
#include "support/corpus.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <stdexcept>

using namespace madmm;

TEST(Parallel, MapIndicesIsBitIdentical) {
  auto f = [](Index i) { return std::sin(0.1 * static_cast<double>(i)) / (1.0 + i); };
  const auto s = map_indices(Execution::serial, 1000, f);
  const auto p = map_indices(Execution::parallel, 1000, f);
  ASSERT_EQ(s.size(), p.size());
  EXPECT_EQ(std::memcmp(s.data(), p.data(), s.size() * sizeof(double)), 0);
}

TEST(Parallel, LowestThrowingIndexWins) {
  for (Execution exec : {Execution::serial, Execution::parallel}) {
    try {
      for_each_index(exec, 100, [](Index i) {
        if (i == 17 || i == 63) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(Parallel, ReduceMaxKeepsFirstTieAndTreatsNanAsInf) {
  const auto r = reduce_max({1.0, 3.0, 3.0, 2.0});
  EXPECT_EQ(r.value, 3.0);
  EXPECT_EQ(r.argmax, 1);
  const auto n = reduce_max({1.0, std::nan(""), 5.0});
  EXPECT_EQ(n.value, kInfinity);
  EXPECT_EQ(n.argmax, 1);
  EXPECT_EQ(reduce_max({}).argmax, -1);
}

TEST(Parallel, CertificateSerialEqualsParallel) {
  const InstanceData d = corpus::cases()[4].data;  // l1 / box terms
  const Solver solver = corpus::make_solver(d, 1.0);
  IterateState s0 = solver.zero_state();
  IterateState s1 = solver.step(s0);
  IterateState s2 = solver.step(s1);
  Rng rng(5);
  const auto probes = sample_domain_probes(solver.problem(), rng, 300);
  const auto a = proposition1_certificate(solver, &s0, s1, s2, probes, Execution::serial);
  const auto b = proposition1_certificate(solver, &s0, s1, s2, probes, Execution::parallel);
  EXPECT_EQ(a.case_i.worst_excess, b.case_i.worst_excess);
  EXPECT_EQ(a.case_ii.worst_excess, b.case_ii.worst_excess);
  EXPECT_EQ(a.case_i.violations, b.case_i.violations);
  EXPECT_EQ(a.skipped, b.skipped);
}

TEST(Parallel, EpsilonProbeSerialEqualsParallel) {
  const InstanceData d = corpus::cases()[1].data;
  const Probe cand{d.solution->u, d.solution->v, d.solution->x};
  const CoupledProblem prob = build_problem(d);
  const auto a = epsilon_approx_probe(prob, cand, 500, 9, Execution::serial);
  const auto b = epsilon_approx_probe(prob, cand, 500, 9, Execution::parallel);
  EXPECT_EQ(a.max_gap, b.max_gap);
  EXPECT_EQ(a.evaluated, b.evaluated);
}
