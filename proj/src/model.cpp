#include "madmm/model.hpp"

#include "madmm/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace madmm {

// ---------------------------------------------------------- SeparableSmooth

double SeparableSmooth::value(const Vector& t) const {
  if (kind == Kind::none) return 0.0;
  double s = 0.0;
  for (Index i = 0; i < t.size(); ++i) {
    const double ti = t(i);
    s += ti > 0.0 ? ti + std::log1p(std::exp(-ti)) : std::log1p(std::exp(ti));
  }
  return weight * s;
}

Vector SeparableSmooth::gradient(const Vector& t) const {
  if (kind == Kind::none) return Vector::Zero(t.size());
  return t.unaryExpr([w = weight](double ti) {
    return ti >= 0.0 ? w / (1.0 + std::exp(-ti))
                     : w * std::exp(ti) / (1.0 + std::exp(ti));
  });
}

// ------------------------------------------------------------------ builders

Vector join(const Vector& u, const Vector& v) {
  Vector w(u.size() + v.size());
  w << u, v;
  return w;
}

SmoothCoupling make_zero_coupling(Index u_dim, Index v_dim) {
  return SmoothCoupling{
      .kind = SmoothCoupling::Kind::zero,
      .u_dim = u_dim,
      .v_dim = v_dim,
      .value = [](const Vector&) { return 0.0; },
      .gradient = [n = u_dim + v_dim](const Vector& w) -> Vector {
        require_dim(w.size(), n, "phi gradient");
        return Vector::Zero(n);
      },
      .q_lower = BlockCurvature::zero(u_dim, v_dim),
      .d1 = SelfAdjointOperator::zero(u_dim),
      .d2 = SelfAdjointOperator::zero(v_dim),
      .eta = 0.0,
      .qtilde = Matrix(),
      .f = {},
      .g = {},
      .rho = 0.0,
      .k1 = {},
  };
}

SmoothCoupling make_quadratic_coupling(const Matrix& qtilde, Index u_dim,
                                       SeparableSmooth f, SeparableSmooth g) {
  if (qtilde.rows() != qtilde.cols() || u_dim < 1 || u_dim >= qtilde.rows())
    throw Error(ErrorKind::dimension_mismatch, "quadratic coupling shape");
  const Index v_dim = qtilde.rows() - u_dim;
  auto q = std::make_shared<const Matrix>(0.5 * (qtilde + qtilde.transpose()));

  Matrix lower = *q;
  lower.topLeftCorner(u_dim, u_dim).diagonal().array() += f.hessian_lower();
  lower.bottomRightCorner(v_dim, v_dim).diagonal().array() += g.hessian_lower();

  return SmoothCoupling{
      .kind = SmoothCoupling::Kind::quadratic,
      .u_dim = u_dim,
      .v_dim = v_dim,
      .value =
          [q, f, g, u_dim, v_dim](const Vector& w) {
            return 0.5 * w.dot((*q) * w) + f.value(w.head(u_dim)) +
                   g.value(w.tail(v_dim));
          },
      .gradient =
          [q, f, g, u_dim, v_dim](const Vector& w) -> Vector {
            require_dim(w.size(), u_dim + v_dim, "phi gradient");
            Vector out = (*q) * w;
            out.head(u_dim) += f.gradient(w.head(u_dim));
            out.tail(v_dim) += g.gradient(w.tail(v_dim));
            return out;
          },
      .q_lower = BlockCurvature::from_dense(lower, u_dim),
      .d1 = SelfAdjointOperator::identity(u_dim, f.hessian_upper() - f.hessian_lower()),
      .d2 = SelfAdjointOperator::identity(v_dim, g.hessian_upper() - g.hessian_lower()),
      .eta = 0.0,
      .qtilde = *q,
      .f = f,
      .g = g,
      .rho = 0.0,
      .k1 = {},
  };
}

SmoothCoupling make_projection_penalty_coupling(const Matrix& qtilde,
                                                Index u_dim, double rho,
                                                SetDescriptor k1, double eta) {
  if (qtilde.rows() != qtilde.cols() || u_dim < 1 || u_dim >= qtilde.rows())
    throw Error(ErrorKind::dimension_mismatch, "projection penalty shape");
  if (!(rho > 0.0))
    throw Error(ErrorKind::invalid_argument, "penalty rho must be positive");
  require_dim(k1.dim(), qtilde.rows(), "K1 dimension");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw Error(ErrorKind::invalid_argument, "eta must lie in [0, 1]");
  const Index v_dim = qtilde.rows() - u_dim;
  auto q = std::make_shared<const Matrix>(0.5 * (qtilde + qtilde.transpose()));
  auto set = std::make_shared<const SetDescriptor>(k1);

  return SmoothCoupling{
      .kind = SmoothCoupling::Kind::projection_penalty,
      .u_dim = u_dim,
      .v_dim = v_dim,
      .value =
          [q, set, rho](const Vector& w) {
            const Vector gap = w - set->project(w);
            return 0.5 * w.dot((*q) * w) + 0.5 * rho * gap.squaredNorm();
          },
      // A single projection per gradient evaluation.
      .gradient =
          [q, set, rho](const Vector& w) -> Vector {
            require_dim(w.size(), q->rows(), "phi gradient");
            return (*q) * w + rho * (w - set->project(w));
          },
      .q_lower = BlockCurvature::from_dense(*q, u_dim),
      .d1 = SelfAdjointOperator::identity(u_dim, rho),
      .d2 = SelfAdjointOperator::identity(v_dim, rho),
      .eta = eta,
      .qtilde = *q,
      .f = {},
      .g = {},
      .rho = rho,
      .k1 = k1,
  };
}

double majorized_phi(const SmoothCoupling& phi, const Vector& w,
                     const Vector& anchor) {
  require_dim(w.size(), phi.dim(), "majorized_phi point");
  require_dim(anchor.size(), phi.dim(), "majorized_phi anchor");
  const Vector d = w - anchor;
  return phi.value(anchor) + phi.gradient(anchor).dot(d) +
         0.5 * seminorm_sq(phi.q_plus_h(), d);
}

// ------------------------------------------------------------------- problem

void CoupledProblem::validate() const {
  const Index n = p.dim();
  const Index m = q.dim();
  const Index l = c.size();
  require_dim(phi.u_dim, n, "phi u-dimension");
  require_dim(phi.v_dim, m, "phi v-dimension");
  require_dim(phi.q_lower.u_dim(), n, "Q11 dimension");
  require_dim(phi.q_lower.v_dim(), m, "Q22 dimension");
  require_dim(phi.d1.dim(), n, "D1 dimension");
  require_dim(phi.d2.dim(), m, "D2 dimension");
  require_dim(a.out_dim(), n, "A output (U) dimension");
  require_dim(b.out_dim(), m, "B output (V) dimension");
  require_dim(a.in_dim(), l, "A input (X) dimension");
  require_dim(b.in_dim(), l, "B input (X) dimension");
  if (!(phi.eta >= 0.0 && phi.eta <= 1.0))
    throw Error(ErrorKind::invalid_argument, "eta must lie in [0, 1]");
}

Vector CoupledProblem::residual(const Vector& u, const Vector& v) const {
  return a.apply_adjoint(u) + b.apply_adjoint(v) - c;
}

double objective(const CoupledProblem& prob, const Vector& u, const Vector& v) {
  require_dim(u.size(), prob.u_dim(), "objective u");
  require_dim(v.size(), prob.v_dim(), "objective v");
  const double pu = prob.p.value(u);
  const double qv = prob.q.value(v);
  if (std::isinf(pu) || std::isinf(qv)) return kInfinity;
  return pu + qv + prob.phi.value(join(u, v));
}

// ------------------------------------------------------- envelope validation

namespace {

struct PairOutcome {
  double lower = 0.0;  // amount the lower bound exceeds phi(w), minus tol
  double upper = 0.0;  // amount phi(w) exceeds phi_hat, minus tol
  double gap = 0.0;    // |phi_hat - phi|
};

Matrix fd_hessian(const SmoothCoupling& phi, const Vector& z) {
  const Index n = phi.dim();
  const double h = 1e-6 * (1.0 + z.cwiseAbs().maxCoeff());
  Matrix w(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector zp = z, zm = z;
    zp(j) += h;
    zm(j) -= h;
    w.col(j) = (phi.gradient(zp) - phi.gradient(zm)) / (2.0 * h);
  }
  return 0.5 * (w + w.transpose());
}

Matrix cross_test_matrix(const SmoothCoupling& phi, const Matrix& e) {
  const Index n = phi.u_dim;
  const Index m = phi.v_dim;
  Matrix k(n + m, n + m);
  k.topLeftCorner(n, n) = phi.eta * materialize(phi.d1);
  k.bottomRightCorner(m, m) = phi.eta * materialize(phi.d2);
  k.topRightCorner(n, m) = -e;
  k.bottomLeftCorner(m, n) = -e.transpose();
  return k;
}

// || D1^{-1/2} E D2^{-1/2} || when both D blocks are positive definite.
double cross_ratio(const SmoothCoupling& phi, const Matrix& e) {
  Eigen::LLT<Matrix> l1(materialize(phi.d1));
  Eigen::LLT<Matrix> l2(materialize(phi.d2));
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) {
    return e.cwiseAbs().maxCoeff() > 0.0 ? kInfinity : 0.0;
  }
  Matrix left = l1.matrixL().solve(e);
  Matrix scaled = l2.matrixL().solve(left.transpose()).transpose();
  Eigen::JacobiSVD<Matrix> svd(scaled);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

EnvelopeReport validate_envelope(const SmoothCoupling& phi,
                                 std::uint64_t sampler_seed, int n_samples,
                                 const EnvelopeOptions& options) {
  if (n_samples < 1)
    throw Error(ErrorKind::invalid_argument, "validate_envelope needs n_samples >= 1");

  const Index n = phi.dim();
  Rng rng(sampler_seed);
  std::normal_distribution<double> normal(0.0, options.sample_scale);
  std::vector<Vector> points(static_cast<std::size_t>(2 * n_samples));
  for (auto& p : points) {
    p.resize(n);
    for (Index i = 0; i < n; ++i) p(i) = normal(rng);
  }

  const SelfAdjointOperator q = phi.q();
  const SelfAdjointOperator qh = phi.q_plus_h();
  std::vector<PairOutcome> outcomes(static_cast<std::size_t>(n_samples));
  for_each_index(default_execution(), n_samples, [&](Index s) {
    const Vector& w = points[static_cast<std::size_t>(2 * s)];
    const Vector& anchor = points[static_cast<std::size_t>(2 * s + 1)];
    const double fw = phi.value(w);
    const double fa = phi.value(anchor);
    const Vector ga = phi.gradient(anchor);
    const Vector d = w - anchor;
    const double linear = fa + ga.dot(d);
    const double lower = linear + 0.5 * seminorm_sq(q, d);
    const double upper = linear + 0.5 * seminorm_sq(qh, d);
    const double tol = options.rel_tol * (1.0 + std::abs(fw));
    outcomes[static_cast<std::size_t>(s)] =
        PairOutcome{lower - fw - tol, fw - upper - tol, std::abs(upper - fw)};
  });

  EnvelopeReport report;
  report.samples = n_samples;
  for (const auto& o : outcomes) {
    if (o.lower > 0.0) ++report.lower_failures;
    if (o.upper > 0.0) ++report.upper_failures;
    report.worst_violation = std::max({report.worst_violation, o.lower, o.upper});
    report.max_majorization_gap = std::max(report.max_majorization_gap, o.gap);
  }

  const Index nu = phi.u_dim;
  const Index nv = phi.v_dim;
  const Matrix q12 = materialize(phi.q_lower.q12);
  if (phi.is_quadratic_coupled()) {
    // The generalized Hessian is the constant Qt plus separable diagonal
    // parts, so its off-diagonal block is exactly Qt12.
    const Matrix w12 = phi.qtilde.size() ? Matrix(phi.qtilde.topRightCorner(nu, nv))
                                         : Matrix(Matrix::Zero(nu, nv));
    const Matrix e = w12 - q12;
    const SpectrumSummary s = spectrum(cross_test_matrix(phi, e));
    report.cross_term_dense = true;
    report.cross_term_margin = s.lambda_min;
    report.cross_term_ok =
        s.lambda_min >= -1e-9 * std::max(1.0, std::abs(s.lambda_max));
    report.cross_term_ratio = cross_ratio(phi, e);
    if (!report.cross_term_ok) {
      std::ostringstream os;
      os << "cross-term bound fails for eta=" << phi.eta
         << " (margin " << s.lambda_min << ")";
      report.warnings.push_back(os.str());
    }
    return report;
  }

  const int secants = std::min(options.max_secant_points, n_samples);
  std::vector<double> margins(static_cast<std::size_t>(secants));
  std::vector<double> ratios(static_cast<std::size_t>(secants));
  for_each_index(default_execution(), secants, [&](Index s) {
    const Vector& z = points[static_cast<std::size_t>(2 * s)];
    const Matrix w = fd_hessian(phi, z);
    const Matrix e = Matrix(w.topRightCorner(nu, nv)) - q12;
    const SpectrumSummary sp = spectrum(cross_test_matrix(phi, e));
    margins[static_cast<std::size_t>(s)] =
        sp.lambda_min + 1e-6 * std::max(1.0, std::abs(sp.lambda_max));
    ratios[static_cast<std::size_t>(s)] = cross_ratio(phi, e);
  });
  report.cross_term_dense = false;
  report.cross_term_margin = kInfinity;
  for (int s = 0; s < secants; ++s) {
    report.cross_term_margin = std::min(report.cross_term_margin, margins[s]);
    report.cross_term_ratio = std::max(report.cross_term_ratio, ratios[s]);
    if (margins[s] < 0.0) ++report.cross_term_warnings;
  }
  if (report.cross_term_warnings > 0) {
    std::ostringstream os;
    os << report.cross_term_warnings << " of " << secants
       << " sampled secants exceed the declared eta=" << phi.eta;
    report.warnings.push_back(os.str());
  }
  return report;
}

}  // namespace madmm
