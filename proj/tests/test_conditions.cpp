#include "madmm/conditions.hpp"
#include "madmm/io.hpp"

#include "support/corpus.hpp"

#include <gtest/gtest.h>

using namespace madmm;

namespace {

Solver tiny(double tau) {
  SolverConfig c;
  c.tau = tau;
  return Solver(build_problem(make_analytic_tiny()), c);
}

}  // namespace

TEST(Conditions, EvaluateConditionStrictVersusSemidefinite) {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 1.0;
  const ConditionEntry strict = evaluate_condition("G", "x.strict", g, true);
  EXPECT_FALSE(strict.passed);
  EXPECT_LT(strict.margin, 0.0);
  EXPECT_EQ(strict.verdict, Definiteness::psd);
  EXPECT_NEAR(std::abs(strict.min_eigenvector(1)), 1.0, 1e-14);
  const ConditionEntry semi = evaluate_condition("G", "x.semi", g, false);
  EXPECT_TRUE(semi.passed);
  EXPECT_GE(semi.margin, 0.0);
  g(1, 1) = -0.5;
  EXPECT_FALSE(evaluate_condition("G", "x.semi", g, false).passed);
}

TEST(Conditions, TinyCaseOne) {
  const ConditionReport r = check_theorem1_case_i(tiny(1.0));
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.passed);
  // Q11 + sigma AA^* + S = 1 + 1 + 0.
  EXPECT_DOUBLE_EQ(r.find("theorem1.base.u")->lambda_min, 2.0);
  EXPECT_DOUBLE_EQ(r.find("remark1.case_i")->lambda_min, 1.0);
  EXPECT_EQ(r.find("nonexistent"), nullptr);
}

TEST(Conditions, TinyTheoremTwoOperatorO1) {
  // O1 = Q/4 + Diag(S, T) = I/4 at tau = 1.
  const ConditionReport r = check_theorem2(tiny(1.0));
  ASSERT_NE(r.find("theorem2.case_i.O1"), nullptr);
  EXPECT_DOUBLE_EQ(r.find("theorem2.case_i.O1")->lambda_min, 0.25);
  EXPECT_TRUE(r.passed);
}

TEST(Conditions, CaseOneDoesNotApplyAboveOne) {
  const ConditionReport r = check_theorem1_case_i(tiny(1.5));
  EXPECT_FALSE(r.applicable);
  EXPECT_FALSE(r.passed);
  EXPECT_TRUE(check_theorem1_case_ii(tiny(1.5)).passed);
  EXPECT_TRUE(convergence_conditions(tiny(1.5)).passed);
}

TEST(Conditions, ZeroOperatorsFailWithOffendingDirection) {
  InstanceData d;
  d.family = Family::separable_recovery;
  d.coupling = SmoothCoupling::Kind::zero;
  d.a = Matrix::Zero(2, 2);
  d.b = Matrix::Identity(2, 2);
  d.c = Vector::Ones(2);
  d.p = ProxTerm::zero(2);
  d.q = ProxTerm::zero(2);
  const Solver s(build_problem(d), SolverConfig{});
  const ConditionReport r = check_theorem1_case_i(s);
  EXPECT_FALSE(r.passed);
  const ConditionEntry* e = r.find("theorem1.base.u");
  ASSERT_NE(e, nullptr);
  EXPECT_FALSE(e->passed);
  EXPECT_EQ(e->lambda_min, 0.0);
  EXPECT_LT(e->margin, 0.0);
  EXPECT_NEAR(e->min_eigenvector.norm(), 1.0, 1e-14);
  const ConvergenceVerdict v = convergence_conditions(s);
  EXPECT_FALSE(v.passed);
  EXPECT_NE(v.summary.find("theorem1.base.u"), std::string::npos) << v.summary;
}

TEST(Conditions, ProjectionPenaltyNeedsShiftedSemiProximalTerms) {
  const InstanceData d = make_projection_penalty(corpus::spec(Family::projection_penalty, 3, 3, 3, 31));
  const CoupledProblem prob = build_problem(d);
  RunConfig rc;
  rc.tau = 1.61;
  rc.s = ProxChoice{ProxChoice::Kind::automatic};
  rc.t = ProxChoice{ProxChoice::Kind::automatic};
  const ConditionReport bad = check_theorem1_case_ii(Solver(prob, resolve_config(prob, rc)));
  EXPECT_FALSE(bad.passed);
  EXPECT_LT(bad.find("theorem1.case_ii.M")->lambda_min, 0.0);

  rc.s->shift = rc.t->shift = d.eta * d.rho;
  const ConditionReport good = check_theorem1_case_ii(Solver(prob, resolve_config(prob, rc)));
  EXPECT_TRUE(good.passed);
}

TEST(Conditions, QuadraticBlockTestApplicability) {
  const Solver qc = corpus::make_solver(corpus::cases()[1].data, 1.0);
  const ConditionReport r = check_remark2_quadratic(qc);
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.passed);
  EXPECT_NE(r.find("remark2.joint"), nullptr);
  const Solver pp = corpus::make_solver(corpus::cases()[8].data, 1.0);
  EXPECT_FALSE(check_remark2_quadratic(pp).applicable);
}

TEST(Conditions, DimensionCapGivesUnverified) {
  ConditionOptions o;
  o.cap = 1;
  const Solver s = tiny(1.0);
  for (const ConditionReport& r :
       {check_theorem1_case_i(s, o), check_theorem1_case_ii(s, o), check_theorem2(s, o),
        check_remark2_quadratic(s, o)}) {
    EXPECT_TRUE(r.unverified) << r.title;
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(r.entries.empty());
  }
  const ConvergenceVerdict v = convergence_conditions(s, o);
  EXPECT_TRUE(v.unverified);
  EXPECT_FALSE(v.passed);
}

TEST(Conditions, CorpusDefaultsVerify) {
  for (const auto& c : corpus::cases())
    for (double tau : {1.0, 1.61}) {
      const Solver s = corpus::make_solver(c.data, tau);
      EXPECT_TRUE(convergence_conditions(s).passed) << c.name << " tau " << tau;
    }
}
