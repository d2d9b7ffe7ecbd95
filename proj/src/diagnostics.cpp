#include "madmm/diagnostics.hpp"

#include "dense_blocks.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace madmm {

using detail::block_diag;
using detail::dense_blocks;
using detail::psd_sqrt;
using detail::spectral_norm;

namespace {

double sq(const SelfAdjointOperator& g, const Vector& x) { return seminorm_sq(g, x); }

double large_tau_coefficient(double tau) {
  return std::max(1.0 - tau, 1.0 - 1.0 / tau);
}

bool strictly_pd(const Matrix& g) {
  const SpectrumSummary s = spectrum(g);
  return classify(s.lambda_min, s.lambda_max) == Definiteness::strict_pd;
}

bool semidefinite(const Matrix& g) {
  const SpectrumSummary s = spectrum(g);
  return classify(s.lambda_min, s.lambda_max) != Definiteness::indefinite;
}

}  // namespace

// --------------------------------------------------------------- KKT bound

KKTWitness kkt_witness(const Solver& solver, const IterateState& prev,
                       const IterateState& curr) {
  if (curr.k != prev.k + 1)
    throw Error(ErrorKind::usage, "kkt_witness needs consecutive iterates");
  const auto& prob = solver.problem();
  const auto& phi = prob.phi;
  const double sigma = solver.sigma();
  const double lag = (1.0 - solver.tau()) * sigma;

  const Vector du = curr.u - prev.u;
  const Vector dv = curr.v - prev.v;
  const Vector& r = curr.residual;

  Vector u_row = -lag * prob.a.apply(r) -
                 sigma * prob.a.apply(prob.b.apply_adjoint(prev.v - curr.v)) -
                 solver.s_op().apply(du) + phi.q_lower.q12.apply(dv);
  Vector v_row = -lag * prob.b.apply(r) - solver.t_op().apply(dv);

  KKTWitness w;
  w.dual_element = join(u_row, v_row) - phi.q_plus_h().apply(join(du, dv)) +
                   curr.grad - prev.grad;
  w.primal_residual = r;
  w.bound_sq = w.dual_element.squaredNorm() + r.squaredNorm();
  return w;
}

// ---------------------------------------------------------------- Lyapunov

double xi_increment(const Solver& solver, const IterateState& prev,
                    const IterateState& curr) {
  const auto& phi = solver.problem().phi;
  const Vector du = curr.u - prev.u;
  const Vector dv = curr.v - prev.v;
  return sq(phi.d2, dv) + sq(solver.t_op(), dv) + phi.eta * sq(phi.d1, du);
}

double theta_increment(const Solver& solver, const IterateState& prev,
                       const IterateState& curr) {
  const auto& phi = solver.problem().phi;
  const Vector du = curr.u - prev.u;
  const Vector dv = curr.v - prev.v;
  return sq(solver.s_op(), du) + sq(solver.t_op(), dv) +
         0.25 * sq(phi.q(), join(du, dv));
}

double gamma_increment(const Solver& solver, const IterateState& prev,
                       const IterateState& curr) {
  const auto& prob = solver.problem();
  const double tau = solver.tau();
  const Vector du = curr.u - prev.u;
  const Vector dv = curr.v - prev.v;
  const double rho = std::min(tau, 1.0 + tau - tau * tau);
  return theta_increment(solver, prev, curr) +
         rho * solver.sigma() * prob.b.apply_adjoint(dv).squaredNorm() -
         prob.phi.eta * (sq(prob.phi.d1, du) + sq(prob.phi.d2, dv));
}

double phi_value(const Solver& solver, const IterateState& s, const Vector& u,
                 const Vector& v, const Vector& x) {
  const auto& prob = solver.problem();
  const auto& phi = prob.phi;
  const double sigma = solver.sigma();
  const Vector eu = s.u - u;
  const Vector ev = s.v - v;
  return (s.x - x).squaredNorm() / (solver.tau() * sigma) + sq(phi.d1, eu) +
         sq(solver.s_op(), eu) + sq(phi.q_lower.q22, ev) + sq(phi.d2, ev) +
         sq(solver.t_op(), ev) + 0.5 * sq(phi.q(), join(eu, ev)) +
         sigma * prob.residual(u, s.v).squaredNorm();
}

double psi_value(const Solver& solver, const IterateState& s, const Vector& u,
                 const Vector& v, const Vector& x) {
  const auto& prob = solver.problem();
  return phi_value(solver, s, u, v, x) +
         sq(prob.phi.q(), join(s.u - u, s.v - v)) +
         large_tau_coefficient(solver.tau()) * solver.sigma() *
             s.residual.squaredNorm();
}

LyapunovRecord lyapunov(const Solver& solver, const IterateState& prev,
                        const IterateState& curr,
                        const ReferencePoint* reference) {
  LyapunovRecord rec;
  rec.theta = theta_increment(solver, prev, curr);
  rec.xi = xi_increment(solver, prev, curr);
  rec.gamma = gamma_increment(solver, prev, curr);
  if (!reference) return rec;

  const auto& prob = solver.problem();
  const auto& phi = prob.phi;
  const double sigma = solver.sigma();
  const auto& ref = *reference;
  rec.phi = phi_value(solver, curr, ref.u, ref.v, ref.x);
  rec.psi = psi_value(solver, curr, ref.u, ref.v, ref.x);

  const Vector eu = curr.u - ref.u;
  const Vector ev = curr.v - ref.v;
  const double lambda = sq(phi.d1, eu) + sq(solver.s_op(), eu) +
                        sq(phi.d2, ev) + sq(solver.t_op(), ev) +
                        sq(phi.q_lower.q22, ev) +
                        sigma * prob.b.apply_adjoint(ev).squaredNorm() +
                        curr.x.squaredNorm() / (solver.tau() * sigma);
  rec.lambda = lambda;
  rec.lambda_bar = lambda + rec.xi + sq(phi.q(), join(eu, ev)) +
                   large_tau_coefficient(solver.tau()) * sigma *
                       curr.residual.squaredNorm();
  return rec;
}

// ----------------------------------------------------------- VI gap, probes

double vi_gap(const CoupledProblem& prob, const Vector& cu, const Vector& cv,
              const Vector& cx, const Probe& probe) {
  const double pq = prob.p.value(probe.u) + prob.q.value(probe.v);
  if (std::isinf(pq)) return kInfinity;
  const double pq_c = prob.p.value(cu) + prob.q.value(cv);
  if (std::isinf(pq_c)) return kInfinity;
  const Vector w = join(probe.u, probe.v);
  const Vector grad = prob.phi.gradient(w);
  return pq_c - pq + grad.dot(join(cu, cv) - w) +
         (cu - probe.u).dot(prob.a.apply(probe.x)) +
         (cv - probe.v).dot(prob.b.apply(probe.x)) -
         (cx - probe.x).dot(prob.residual(probe.u, probe.v));
}

std::vector<Probe> sample_domain_probes(const CoupledProblem& prob, Rng& rng,
                                        int n, double x_scale) {
  std::normal_distribution<double> normal(0.0, x_scale);
  std::vector<Probe> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    Probe p;
    p.u = prob.p.sample_domain(rng);
    p.v = prob.q.sample_domain(rng);
    p.x.resize(prob.x_dim());
    for (Index j = 0; j < p.x.size(); ++j) p.x(j) = normal(rng);
    out.push_back(std::move(p));
  }
  return out;
}

CertificateReport proposition1_certificate(
    const Solver& solver, const IterateState* before, const IterateState& prev,
    const IterateState& curr, const std::vector<Probe>& probes,
    Execution exec) {
  if (curr.k != prev.k + 1 || (before && prev.k != before->k + 1))
    throw Error(ErrorKind::usage, "certificate needs consecutive iterates");
  const auto& prob = solver.problem();
  const double sigma = solver.sigma();
  const double tau = solver.tau();

  CertificateReport report;
  report.k = prev.k;
  report.probes = static_cast<int>(probes.size());
  report.case_i.evaluated = tau <= 1.0;
  report.case_ii.evaluated = before != nullptr;

  // Probe-independent right-hand sides.
  const double theta = theta_increment(solver, prev, curr);
  const double r_sq = curr.residual.squaredNorm();
  const double mid_sq = prob.residual(curr.u, prev.v).squaredNorm();
  const double rhs_i = -0.5 * (theta + sigma * mid_sq + (1.0 - tau) * sigma * r_sq);
  double rhs_ii = 0.0;
  double xi_next = 0.0;
  double xi_prev = 0.0;
  if (before) {
    const double gamma = gamma_increment(solver, prev, curr);
    rhs_ii = -0.5 * (gamma + std::min(1.0, 1.0 + 1.0 / tau - tau) * sigma * r_sq);
    xi_next = xi_increment(solver, prev, curr);
    xi_prev = xi_increment(solver, *before, prev);
  }

  const Index n = static_cast<Index>(probes.size());
  std::vector<double> excess_i(probes.size(), -kInfinity);
  std::vector<double> excess_ii(probes.size(), -kInfinity);
  std::vector<char> skipped(probes.size(), 0);
  for_each_index(exec, n, [&](Index j) {
    const Probe& pr = probes[static_cast<std::size_t>(j)];
    const double gap = vi_gap(prob, curr.u, curr.v, curr.x_tilde, pr);
    if (std::isinf(gap)) {
      skipped[static_cast<std::size_t>(j)] = 1;
      return;
    }
    if (report.case_i.evaluated) {
      const double lhs = gap + 0.5 * (phi_value(solver, curr, pr.u, pr.v, pr.x) -
                                      phi_value(solver, prev, pr.u, pr.v, pr.x));
      excess_i[static_cast<std::size_t>(j)] = lhs - rhs_i;
    }
    if (report.case_ii.evaluated) {
      const double lhs =
          gap + 0.5 * (psi_value(solver, curr, pr.u, pr.v, pr.x) + xi_next -
                       psi_value(solver, prev, pr.u, pr.v, pr.x) - xi_prev);
      excess_ii[static_cast<std::size_t>(j)] = lhs - rhs_ii;
    }
  });

  auto tally = [&](CertificateCase& c, const std::vector<double>& excess, double rhs) {
    if (!c.evaluated) return;
    const double tol = 1e-7 * (1.0 + std::abs(rhs));
    for (std::size_t j = 0; j < excess.size(); ++j) {
      if (skipped[j]) continue;
      c.worst_excess = std::max(c.worst_excess, excess[j]);
      c.worst_slack = std::max(c.worst_slack, excess[j] - tol);
      if (excess[j] > tol) ++c.violations;
    }
  };
  tally(report.case_i, excess_i, rhs_i);
  tally(report.case_ii, excess_ii, rhs_ii);
  for (char s : skipped) report.skipped += s;
  return report;
}

// ------------------------------------------------------------------ ergodic

ErgodicAccumulator ergodic_state(const RunHistory& history) {
  if (history.states.empty())
    throw Error(ErrorKind::usage, "ergodic_state of an empty history");
  const IterateState& first = history.states.front();
  ErgodicAccumulator acc(first.u.size(), first.v.size(), first.x.size());
  int expected = first.k;
  for (const auto& s : history.states) {
    if (s.k != expected)
      throw Error(ErrorKind::usage, "ergodic_state needs every iterate recorded");
    acc.add(s);
    ++expected;
  }
  if (acc.count() == 0)
    throw Error(ErrorKind::usage, "ergodic_state needs at least two steps");
  return acc;
}

EpsilonProbeReport epsilon_approx_probe(const CoupledProblem& prob,
                                        const Probe& candidate, int n_probes,
                                        std::uint64_t seed, Execution exec) {
  if (n_probes < 1)
    throw Error(ErrorKind::invalid_argument, "epsilon_approx_probe needs n_probes >= 1");
  const Index nu = prob.u_dim();
  const Index nv = prob.v_dim();
  const Index nx = prob.x_dim();
  const Index dim = nu + nv + nx;

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Probe> probes(static_cast<std::size_t>(n_probes));
  for (auto& p : probes) {
    Vector d(dim);
    for (Index i = 0; i < dim; ++i) d(i) = normal(rng);
    const double nrm = d.norm();
    const double radius = std::pow(unif(rng), 1.0 / static_cast<double>(dim));
    if (nrm > 0.0) d *= radius / nrm;
    p.u = candidate.u + d.head(nu);
    p.v = candidate.v + d.segment(nu, nv);
    p.x = candidate.x + d.tail(nx);
  }

  const std::vector<double> gaps = map_indices(exec, n_probes, [&](Index j) {
    return vi_gap(prob, candidate.u, candidate.v, candidate.x,
                  probes[static_cast<std::size_t>(j)]);
  });

  EpsilonProbeReport report;
  for (double g : gaps) {
    if (std::isinf(g)) {
      ++report.skipped;
      continue;
    }
    ++report.evaluated;
    report.max_gap = std::max(report.max_gap, g);
  }
  if (report.evaluated == 0)
    throw Error(ErrorKind::no_feasible_probe,
                "every probe fell outside dom p x dom q; use a domain-aware sampler");
  return report;
}

// -------------------------------------------------------------- complexity

double relative_norm(const Matrix& g, const Matrix& ghat) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
  const Vector lam = es.eigenvalues();
  if (lam.size() == 0) return 0.0;
  if (!(lam.minCoeff() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const Matrix inv_sqrt =
      es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  const Matrix scaled = inv_sqrt * (0.5 * (ghat + ghat.transpose())) * inv_sqrt;
  Eigen::SelfAdjointEigenSolver<Matrix> es2(0.5 * (scaled + scaled.transpose()),
                                            Eigen::EigenvaluesOnly);
  return es2.eigenvalues().cwiseAbs().maxCoeff();
}

ComplexityConstants complexity_constants(const Solver& solver,
                                         const IterateState& s0,
                                         const IterateState& s1,
                                         const ReferencePoint& reference,
                                         std::optional<RateCase> which) {
  if (s1.k != s0.k + 1 || s0.k != 0)
    throw Error(ErrorKind::usage, "complexity_constants needs iterates 0 and 1");
  if (!which) {
    // Case (i) when it applies and verifies, case (ii) otherwise.
    if (solver.tau() <= 1.0) {
      ComplexityConstants first =
          complexity_constants(solver, s0, s1, reference, RateCase::i);
      if (first.defined) return first;
    }
    return complexity_constants(solver, s0, s1, reference, RateCase::ii);
  }
  const auto& prob = solver.problem();
  const double sigma = solver.sigma();
  const double tau = solver.tau();
  const double eta = prob.phi.eta;
  const detail::DenseBlocks b = dense_blocks(solver);

  ComplexityConstants k;
  k.rate_case = *which;
  k.norm_a = operator_norm(prob.a);
  k.norm_b = operator_norm(prob.b);
  const Matrix h = block_diag(b.d1, b.d2);
  k.c1 = 5.0 * std::max({sigma * k.norm_a * k.norm_a, spectral_norm(b.q12),
                         spectral_norm(h), spectral_norm(b.s), spectral_norm(b.t)});
  k.c2 = 5.0 * (1.0 - tau) * (1.0 - tau) * sigma * sigma *
             (k.norm_a * k.norm_a + k.norm_b * k.norm_b) +
         1.0;
  const Matrix o_hat =
      h + block_diag(b.s, b.t + sigma * b.bb + psd_sqrt(b.q12.transpose() * b.q12));

  const LyapunovRecord rec1 = lyapunov(solver, s0, s1, &reference);
  k.phi_1 = *rec1.phi;
  k.psi_1 = *rec1.psi;
  k.xi_1 = rec1.xi;
  k.lambda_1 = *rec1.lambda;
  k.lambda_bar_1 = *rec1.lambda_bar;
  k.x_ref_norm_sq = reference.x.squaredNorm();

  const double ts = tau * sigma;
  const double x1_term = ((s1.x - reference.x) / ts).squaredNorm();

  if (k.rate_case == RateCase::i) {
    if (tau > 1.0) {
      k.refusal = "case (i) needs tau <= 1";
      return k;
    }
    const Matrix o1 = 0.25 * b.q + block_diag(b.s + (1.0 - tau) * sigma * b.aa,
                                              b.t + (1.0 - tau) * sigma * b.bb);
    if (!strictly_pd(o1)) {
      k.refusal = "O1 is not positive definite";
      return k;
    }
    k.o_hat_ratio = relative_norm(o1, o_hat);
    if (tau < 1.0) {
      k.c = k.c1 * (9.0 - 4.0 * tau) * k.o_hat_ratio + k.c2 / ((1.0 - tau) * sigma);
    } else {
      const Matrix zb = block_diag(Matrix::Zero(b.n, b.n), b.bb);
      k.bb_ratio = relative_norm(o1, zb);
      k.c = k.c1 * (9.0 - 4.0 * tau) * k.o_hat_ratio +
            k.c2 * (2.0 / sigma + (18.0 - 8.0 * tau) * k.bb_ratio);
    }
    k.lyapunov_1 = k.phi_1;
    k.c3 = 2.0 * k.phi_1 / ts + 2.0 * x1_term;
  } else {
    const Matrix m = 0.25 * b.q + block_diag(b.s - eta * b.d1, b.t - eta * b.d2);
    if (!semidefinite(m)) {
      k.refusal = "1/4 Q + Diag(S - eta D1, T - eta D2) is not positive semidefinite";
      return k;
    }
    const Matrix o2 = 0.25 * b.q + block_diag(b.s + sigma * b.aa - eta * b.d1,
                                              b.t + sigma * b.bb - eta * b.d2);
    if (!strictly_pd(o2)) {
      k.refusal = "O2 is not positive definite";
      return k;
    }
    const double rho = std::min(tau, 1.0 + tau - tau * tau);
    k.o_hat_ratio = relative_norm(o2, o_hat);
    k.c = k.c1 * k.o_hat_ratio * (1.0 + (6.0 * tau + 3.0) / rho) +
          k.c2 * tau / (sigma * rho);
    k.lyapunov_1 = k.psi_1 + k.xi_1;
    k.c3 = 2.0 * k.lyapunov_1 / ts + 2.0 * x1_term;
  }
  k.rate_numerator = k.c * k.lyapunov_1;
  k.d1 = std::sqrt(k.c3);

  const Matrix g4 = 0.5 * b.q + block_diag(b.d1 + b.s + 2.0 * sigma * b.aa,
                                           b.q22 + b.d2 + b.t);
  k.c4 = std::max(1.0 / ts, spectral_norm(g4));
  if (k.rate_case == RateCase::i) {
    const double inv = 1.0 / tau - 1.0;
    k.c5 = (12.0 + 24.0 * inv * inv) * k.phi_1 + 3.0 * k.c4 + 3.0 * k.c3;
    k.d2 = 0.5 * k.c5;
  }
  k.defined = true;
  return k;
}

}  // namespace madmm
