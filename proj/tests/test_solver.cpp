#include "madmm/diagnostics.hpp"
#include "madmm/io.hpp"
#include "madmm/solver.hpp"

#include "oracles/oracle.hpp"
#include "support/corpus.hpp"

#include <gtest/gtest.h>

using namespace madmm;

namespace {

SolverConfig plain(double tau = 1.0) {
  SolverConfig c;
  c.tau = tau;
  return c;
}

InstanceData zero_operator_instance() {
  InstanceData d;
  d.family = Family::separable_recovery;
  d.coupling = SmoothCoupling::Kind::zero;
  d.a = Matrix::Zero(2, 2);
  d.b = Matrix::Identity(2, 2);
  d.c = Vector::Ones(2);
  d.p = ProxTerm::zero(2);
  d.q = ProxTerm::zero(2);
  return d;
}

}  // namespace

TEST(Solver, TinyFirstIterateClosedForm) {
  // u1 = argmin u^2/2 + (u - 1)^2/2 = 1/2; v1 = argmin v^2/2 + (v - 1/2)^2/2 = 1/4.
  const Solver s(build_problem(make_analytic_tiny()), plain());
  const IterateState s1 = s.step(s.zero_state());
  EXPECT_EQ(s1.k, 1);
  EXPECT_NEAR(s1.u(0), 0.5, 1e-15);
  EXPECT_NEAR(s1.v(0), 0.25, 1e-15);
  EXPECT_NEAR(s1.residual(0), -0.25, 1e-15);
  EXPECT_NEAR(s1.x(0), -0.25, 1e-15);
  EXPECT_NEAR(s1.x_tilde(0), -0.25, 1e-15);
}

TEST(Solver, TinyConvergesToClosedForm) {
  SolverConfig c = plain();
  c.kkt_tol = 1e-12;
  const Solver s(build_problem(make_analytic_tiny()), c);
  const RunResult r = s.run(s.zero_state());
  EXPECT_EQ(r.status, RunStatus::converged);
  EXPECT_LE(r.iterations, 500);
  EXPECT_NEAR(r.final_state.u(0), 0.5, 1e-10);
  EXPECT_NEAR(r.final_state.v(0), 0.5, 1e-10);
  EXPECT_NEAR(r.final_state.x(0), -0.5, 1e-10);
}

TEST(Solver, RunMatchesStepLoop) {
  const InstanceData d = corpus::cases()[4].data;
  const Solver s = corpus::make_solver(d, 1.0);
  SolverConfig c = s.config();
  c.max_iters = 25;
  c.kkt_tol = 0.0;
  const Solver s25(s.problem(), c);
  IterateState it = s25.zero_state();
  for (int k = 0; k < 25; ++k) it = s25.step(it);
  const RunResult r = s25.run(s25.zero_state());
  EXPECT_EQ(r.iterations, 25);
  EXPECT_EQ(r.final_state.u, it.u);
  EXPECT_EQ(r.final_state.v, it.v);
  EXPECT_EQ(r.final_state.x, it.x);
}

TEST(Solver, SeparableMatchesTextbookAdmm) {
  for (int idx : {12, 13, 14}) {
    const InstanceData d = corpus::cases()[static_cast<std::size_t>(idx)].data;
    for (double tau : {1.0, 1.5}) {
      SolverConfig c;
      c.tau = tau;
      c.sigma = 0.7;
      const Solver s(build_problem(d), c);
      const auto ref = oracle::textbook_admm(d, 0.7, tau, 60);
      IterateState it = s.zero_state();
      for (int k = 1; k <= 60; ++k) {
        it = s.step(it);
        ASSERT_LE((it.u - ref[k].u).norm(), 1e-10) << idx << " k " << k;
        ASSERT_LE((it.v - ref[k].v).norm(), 1e-10);
        ASSERT_LE((it.x - ref[k].x).norm(), 1e-10);
      }
    }
  }
}

TEST(Solver, BackendsAgreeOnQuadraticBlocks) {
  const InstanceData d = corpus::cases()[1].data;
  const CoupledProblem prob = build_problem(d);
  SolverConfig base = plain();
  base.s_op = prox_identity_semi_proximal(prob, 1.0, Block::u);
  base.t_op = prox_identity_semi_proximal(prob, 1.0, Block::v);
  SolverConfig a = base, b = base;
  a.u_backend = a.v_backend = Backend::prox_identity;
  b.u_backend = b.v_backend = Backend::linear_solve;
  const Solver sa(prob, a), sb(prob, b);
  EXPECT_EQ(sa.u_backend(), Backend::prox_identity);
  EXPECT_EQ(sb.u_backend(), Backend::linear_solve);
  IterateState ia = sa.zero_state(), ib = sb.zero_state();
  for (int k = 0; k < 50; ++k) {
    ia = sa.step(ia);
    ib = sb.step(ib);
  }
  EXPECT_LE((ia.w() - ib.w()).norm(), 1e-10);
  EXPECT_LE((ia.x - ib.x).norm(), 1e-10);
}

TEST(Solver, AutomaticSemiProximalMakesScaledIdentity) {
  const CoupledProblem prob = build_problem(corpus::cases()[4].data);
  SolverConfig c = plain();
  c.s_op = prox_identity_semi_proximal(prob, 1.0, Block::u, 0.3);
  c.t_op = prox_identity_semi_proximal(prob, 1.0, Block::v);
  const Solver s(prob, c);
  const Matrix& m = s.m_u();
  const double alpha = m(0, 0);
  EXPECT_LE((m - alpha * Matrix::Identity(m.rows(), m.cols())).norm(), 1e-12);
  EXPECT_GE(min_eigenvalue(s.s_op()), 0.3 - 1e-12);
}

TEST(Solver, NonQuadraticTermNeedsScaledIdentity) {
  const CoupledProblem prob = build_problem(corpus::cases()[4].data);  // l1 term on u
  EXPECT_THROW(Solver(prob, plain()), Error);
}

TEST(Solver, SubproblemResidualsVanish) {
  const Solver s = corpus::make_solver(corpus::cases()[9].data, 1.0);
  IterateState it = s.zero_state();
  for (int k = 0; k < 20; ++k) {
    const IterateState next = s.step(it);
    EXPECT_LE(s.u_step_residual(it, next.u), 1e-9);
    EXPECT_LE(s.v_step_residual(it, next.u, next.v), 1e-9);
    it = next;
  }
}

TEST(Solver, ZeroIterationsReturnsInitialPoint) {
  SolverConfig c = plain();
  c.max_iters = 0;
  const Solver s(build_problem(make_analytic_tiny()), c);
  const RunResult r = s.run(s.zero_state());
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.history.rows.empty());
  EXPECT_EQ(r.final_state.k, 0);
  EXPECT_EQ(r.final_state.u, Vector::Zero(1));
  EXPECT_EQ(r.status, RunStatus::max_iters);
}

TEST(Solver, RecordingStride) {
  SolverConfig c = plain();
  c.max_iters = 10;
  c.kkt_tol = 0.0;
  c.record_every = 3;
  const Solver s(build_problem(make_analytic_tiny()), c);
  const RunResult r = s.run(s.zero_state());
  std::vector<int> ks;
  for (const auto& row : r.history.rows) ks.push_back(row.k);
  EXPECT_EQ(ks, (std::vector<int>{3, 6, 9, 10}));
  ASSERT_EQ(r.history.states.size(), 5u);
  EXPECT_EQ(r.history.states.front().k, 0);
  EXPECT_EQ(r.history.states.back().k, 10);
  for (std::size_t i = 0; i < ks.size(); ++i)
    EXPECT_NEAR(r.history.rows[i].feas, r.history.states[i + 1].residual.norm(), 1e-15);
}

TEST(Solver, DefaultStrideDependsOnDimension) {
  SolverConfig c = plain();
  c.max_iters = 20;
  c.kkt_tol = 0.0;
  const Solver s(build_problem(make_analytic_tiny()), c);
  EXPECT_EQ(s.run(s.zero_state()).history.stride, 1);
}

TEST(Solver, DivergenceGuardStopsTheRun) {
  SolverConfig c = plain();
  c.divergence_cap = 0.1;
  const Solver s(build_problem(make_analytic_tiny()), c);
  const RunResult r = s.run(s.zero_state());
  EXPECT_EQ(r.status, RunStatus::diverged);
  EXPECT_EQ(r.diverged_at, 1);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_FALSE(r.message.empty());
}

TEST(Solver, ConditionsGateAndForce) {
  const CoupledProblem prob = build_problem(zero_operator_instance());
  SolverConfig c = plain();
  c.max_iters = 3;
  const Solver gated(prob, c);
  try {
    gated.run(gated.zero_state());
    FAIL() << "expected conditions_failed";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conditions_failed);
  }
}

TEST(Solver, SingularSystemIsReportedAtFirstStep) {
  InstanceData d;
  d.family = Family::quadratic_coupled;
  d.coupling = SmoothCoupling::Kind::quadratic;
  d.qtilde = Vector(Eigen::Vector3d(1.0, 0.0, 1.0)).asDiagonal();
  d.a = Matrix::Zero(2, 1);
  d.a(0, 0) = 1.0;
  d.b = Matrix::Ones(1, 1);
  d.c = Vector::Ones(1);
  d.p = ProxTerm::zero(2);
  d.q = ProxTerm::zero(1);
  SolverConfig c = plain();
  c.u_backend = Backend::linear_solve;
  c.force = true;
  const Solver s(build_problem(d), c);  // constructing is fine
  EXPECT_THROW(s.step(s.zero_state()), Error);
}

TEST(Solver, InvalidConfigurationsThrow) {
  const CoupledProblem prob = build_problem(make_analytic_tiny());
  SolverConfig c = plain();
  c.sigma = 0.0;
  EXPECT_THROW(Solver(prob, c), Error);
  c = plain(kGoldenRatio);
  EXPECT_THROW(Solver(prob, c), Error);
  c = plain(0.0);
  EXPECT_THROW(Solver(prob, c), Error);
  c = plain();
  c.max_iters = -1;
  EXPECT_THROW(Solver(prob, c), Error);
}

TEST(Solver, ErgodicAccumulatorSkipsFirstTwoIterates) {
  const Solver s(build_problem(make_analytic_tiny()), plain());
  ErgodicAccumulator acc(1, 1, 1);
  std::vector<IterateState> st{s.zero_state()};
  for (int k = 0; k < 4; ++k) st.push_back(s.step(st.back()));
  for (const auto& it : st) acc.add(it);
  EXPECT_EQ(acc.count(), 3);
  EXPECT_NEAR(acc.u_mean()(0), (st[2].u(0) + st[3].u(0) + st[4].u(0)) / 3.0, 1e-15);
  EXPECT_NEAR(acc.x_mean()(0), (st[2].x_tilde(0) + st[3].x_tilde(0) + st[4].x_tilde(0)) / 3.0,
              1e-15);
}

TEST(Solver, ErgodicFeasibilityColumn) {
  SolverConfig c = plain();
  c.max_iters = 6;
  c.kkt_tol = 0.0;
  const Solver s(build_problem(make_analytic_tiny()), c);
  const RunResult r = s.run(s.zero_state());
  EXPECT_TRUE(std::isnan(r.history.rows[0].erg_feas));
  const auto& st = r.history.states;
  const double u = (st[2].u(0) + st[3].u(0)) / 2.0, v = (st[2].v(0) + st[3].v(0)) / 2.0;
  EXPECT_NEAR(r.history.rows[2].erg_feas, std::abs(u + v - 1.0), 1e-15);
}

TEST(Solver, ReferenceAddsLyapunovColumns) {
  SolverConfig c = plain();
  c.max_iters = 5;
  const InstanceData d = make_analytic_tiny();
  const Solver s(build_problem(d), c);
  RunOptions o;
  o.reference = *d.solution;
  const RunResult r = s.run(s.zero_state(), o);
  EXPECT_TRUE(r.history.has_reference);
  EXPECT_FALSE(std::isnan(r.history.rows[0].phi));
  EXPECT_TRUE(std::isnan(s.run(s.zero_state()).history.rows[0].phi));
}
