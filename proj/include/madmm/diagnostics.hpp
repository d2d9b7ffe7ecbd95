#pragma once

#include "madmm/parallel.hpp"
#include "madmm/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace madmm {

// --------------------------------------------------------------- KKT bound

struct KKTWitness {
  /// A member of the dual rows of the optimality map at the current iterate.
  Vector dual_element;
  Vector primal_residual;
  /// |dual_element|^2 + |primal_residual|^2.
  double bound_sq = 0.0;
};

/// Builds the witness from consecutive iterates; throws a usage error when
/// curr.k != prev.k + 1.
KKTWitness kkt_witness(const Solver& solver, const IterateState& prev,
                       const IterateState& curr);

// ---------------------------------------------------------------- Lyapunov

/// Xi, Theta and Gamma of the step prev -> curr.
double xi_increment(const Solver& solver, const IterateState& prev,
                    const IterateState& curr);
double theta_increment(const Solver& solver, const IterateState& prev,
                       const IterateState& curr);
double gamma_increment(const Solver& solver, const IterateState& prev,
                       const IterateState& curr);

/// Phi_k and Psi_k at an arbitrary point (u, v, x), with s the k-th iterate.
double phi_value(const Solver& solver, const IterateState& s, const Vector& u,
                 const Vector& v, const Vector& x);
double psi_value(const Solver& solver, const IterateState& s, const Vector& u,
                 const Vector& v, const Vector& x);

struct LyapunovRecord {
  double theta = 0.0;
  double xi = 0.0;
  double gamma = 0.0;
  /// Present only when a reference point was supplied.
  std::optional<double> phi;
  std::optional<double> psi;
  std::optional<double> lambda;
  std::optional<double> lambda_bar;
};

/// The record at index curr.k; reference-dependent entries are left empty
/// when `reference` is null.
LyapunovRecord lyapunov(const Solver& solver, const IterateState& prev,
                        const IterateState& curr,
                        const ReferencePoint* reference);

// ------------------------------------------------------- VI gap, probes

struct Probe {
  Vector u;
  Vector v;
  Vector x;
};

/// p(u~)+q(v~)-p(u)-q(v) + <w~-w, grad phi(w)> + <u~-u, Ax> + <v~-v, Bx>
///   - <x~-x, A^*u + B^*v - c>, the variational-inequality gap of the
/// candidate (u~, v~, x~) against the probe. +inf when the probe lies outside
/// dom p x dom q.
double vi_gap(const CoupledProblem& prob, const Vector& cu, const Vector& cv,
              const Vector& cx, const Probe& probe);

/// n probes from the domain samplers of p and q and a Gaussian in X.
std::vector<Probe> sample_domain_probes(const CoupledProblem& prob, Rng& rng,
                                        int n, double x_scale = 1.0);

struct CertificateCase {
  bool evaluated = false;
  int violations = 0;
  /// max over probes of (LHS - RHS) - 1e-7 (1 + |RHS|); <= 0 passes.
  double worst_slack = -kInfinity;
  /// max over probes of LHS - RHS.
  double worst_excess = -kInfinity;
};

struct CertificateReport {
  int k = 0;  ///< index of the step prev -> curr is k -> k+1
  int probes = 0;
  int skipped = 0;
  CertificateCase case_i;
  CertificateCase case_ii;
  bool passed() const { return case_i.violations == 0 && case_ii.violations == 0; }
};

/// Evaluates both decrease inequalities for the step prev -> curr at every
/// probe. Case (i) runs when tau <= 1; case (ii) runs when `before` (the
/// iterate preceding prev) is supplied, which makes Xi_k available.
CertificateReport proposition1_certificate(
    const Solver& solver, const IterateState* before, const IterateState& prev,
    const IterateState& curr, const std::vector<Probe>& probes,
    Execution exec = default_execution());

// ------------------------------------------------------------------ ergodic

/// Recomputes the ergodic sums from stored iterates (every iterate must be
/// present). Throws a usage error when fewer than two steps were recorded.
ErgodicAccumulator ergodic_state(const RunHistory& history);

struct EpsilonProbeReport {
  double max_gap = -kInfinity;
  int evaluated = 0;
  int skipped = 0;
};

/// Samples the unit ball around the candidate, rejects probes outside
/// dom p x dom q, and returns the largest VI gap seen. This is a lower bound
/// on the supremum over the ball.
EpsilonProbeReport epsilon_approx_probe(const CoupledProblem& prob,
                                        const Probe& candidate, int n_probes,
                                        std::uint64_t seed,
                                        Execution exec = default_execution());

// -------------------------------------------------------------- complexity

enum class RateCase { i, ii };

struct ComplexityConstants {
  RateCase rate_case = RateCase::i;
  bool defined = false;
  std::string refusal;

  double norm_a = 0.0;
  double norm_b = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  /// |O^{-1/2} O_hat O^{-1/2}| with O = O1 or O2.
  double o_hat_ratio = 0.0;
  /// |O1^{-1/2} Diag(0, BB^*) O1^{-1/2}| (tau = 1 branch only).
  double bb_ratio = 0.0;
  /// C for case (i), C' for case (ii).
  double c = 0.0;
  /// Phi_1 for case (i), Psi_1 + Xi_1 for case (ii).
  double lyapunov_1 = 0.0;
  /// The non-ergodic envelope min_i bound_sq <= rate_numerator / k.
  double rate_numerator = 0.0;

  double phi_1 = 0.0;
  double psi_1 = 0.0;
  double xi_1 = 0.0;
  double c3 = 0.0;
  double d1 = 0.0;  ///< sqrt(C3): the ergodic feasibility constant
  double c4 = 0.0;
  double c5 = 0.0;
  double d2 = 0.0;  ///< C5 / 2 (case (i) only)
  double lambda_1 = 0.0;
  double lambda_bar_1 = 0.0;
  double x_ref_norm_sq = 0.0;
};

/// Constants from iterates 0 and 1 and a reference KKT point. Without an
/// explicit case, case (i) is used when tau <= 1 and O1 > 0, else case (ii).
ComplexityConstants complexity_constants(const Solver& solver,
                                         const IterateState& s0,
                                         const IterateState& s1,
                                         const ReferencePoint& reference,
                                         std::optional<RateCase> which = {});

/// |G^{-1/2} Ghat G^{-1/2}| for G positive definite; NaN otherwise.
double relative_norm(const Matrix& g, const Matrix& ghat);

}  // namespace madmm
