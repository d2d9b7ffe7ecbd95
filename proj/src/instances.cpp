#include "madmm/instances.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>

namespace madmm {

const char* to_string(Family f) {
  switch (f) {
    case Family::analytic_tiny: return "analytic_tiny";
    case Family::quadratic_coupled: return "quadratic_coupled";
    case Family::projection_penalty: return "projection_penalty";
    case Family::separable_recovery: return "separable_recovery";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "analytic_tiny") return Family::analytic_tiny;
  if (name == "quadratic_coupled") return Family::quadratic_coupled;
  if (name == "projection_penalty") return Family::projection_penalty;
  if (name == "separable_recovery") return Family::separable_recovery;
  throw Error(ErrorKind::schema, "unknown family '" + name + "'");
}

const char* to_string(TermKind k) {
  switch (k) {
    case TermKind::zero: return "zero";
    case TermKind::l1: return "l1";
    case TermKind::box: return "box";
    case TermKind::nonneg: return "nonneg";
  }
  return "?";
}

TermKind term_kind_from_string(const std::string& name) {
  if (name == "zero") return TermKind::zero;
  if (name == "l1") return TermKind::l1;
  if (name == "box") return TermKind::box;
  if (name == "nonneg") return TermKind::nonneg;
  throw Error(ErrorKind::schema, "unknown term kind '" + name + "'");
}

void InstanceSpec::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorKind::invalid_argument, field + ": " + why);
  };
  if (u_dim < 1 || v_dim < 1 || x_dim < 1) bad("dims", "every dimension must be >= 1");
  if (!(conditioning >= 1.0)) bad("conditioning", "must be >= 1");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) bad("sparsity", "must lie in [0, 1)");
  if (!(l1_lambda > 0.0)) bad("l1_lambda", "must be positive");
  if (!(box_lo < box_hi)) bad("box", "box_lo must be below box_hi");
  if (!(f_weight >= 0.0) || !(g_weight >= 0.0)) bad("smooth_separable", "weights must be >= 0");
  if (family == Family::projection_penalty) {
    if (!(rho > 0.0)) bad("rho", "must be positive");
    if (!(eta >= 0.0 && eta <= 1.0)) bad("eta", "must lie in [0, 1]");
    if (k1 && k1->dim() != u_dim + v_dim) bad("sets.K1", "dimension must be u + v");
    if (k1 && k1->kind == SetDescriptor::Kind::nonneg)
      bad("sets.K1", "K1 must be a box or a ball");
    if (k2 && k2->dim() != u_dim) bad("sets.K2", "dimension must be u");
    if (k3 && k3->dim() != v_dim) bad("sets.K3", "dimension must be v");
    if (k2 && k2->kind == SetDescriptor::Kind::ball) bad("sets.K2", "K2 must be a box or nonneg");
    if (k3 && k3->kind == SetDescriptor::Kind::ball) bad("sets.K3", "K3 must be a box or nonneg");
  }
  if (family == Family::separable_recovery && (x_dim < u_dim || x_dim < v_dim))
    bad("dims", "separable_recovery needs x >= u and x >= v");
}

// ---------------------------------------------------------------- helpers

Matrix random_orthogonal(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Matrix conditioned_psd(Index n, double conditioning, Rng& rng) {
  const Matrix u = random_orthogonal(n, rng);
  Vector lambda(n);
  for (Index i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    lambda(i) = std::pow(conditioning, -t);
  }
  Matrix q = u * lambda.asDiagonal() * u.transpose();
  return 0.5 * (q + q.transpose());
}

namespace {

// rows x cols Gaussian with a sparsity mask, scaled to unit spectral norm.
Matrix random_map(Index rows, Index cols, double sparsity, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double keep = unif(rng);
      const double value = normal(rng);
      m(i, j) = keep < sparsity ? 0.0 : value;
    }
  const double nrm = m.size() ? Eigen::JacobiSVD<Matrix>(m).singularValues()(0) : 0.0;
  if (nrm > 0.0) m /= nrm;
  return m;
}

ProxTerm make_term(TermKind kind, Index dim, const InstanceSpec& spec) {
  switch (kind) {
    case TermKind::zero: return ProxTerm::zero(dim);
    case TermKind::l1: return ProxTerm::l1(dim, spec.l1_lambda);
    case TermKind::box:
      return ProxTerm::indicator(SetDescriptor::box(Vector::Constant(dim, spec.box_lo),
                                                    Vector::Constant(dim, spec.box_hi)));
    case TermKind::nonneg: return ProxTerm::indicator(SetDescriptor::nonneg(dim));
  }
  return ProxTerm::zero(dim);
}

SeparableSmooth logistic(double weight) {
  if (weight <= 0.0) return {};
  return SeparableSmooth{SeparableSmooth::Kind::logistic, weight};
}

// Unique KKT point of min 1/2 <w, Qt w> s.t. A^*u + B^*v = c.
std::optional<ReferencePoint> smooth_qp_solution(const Matrix& qt, const Matrix& a,
                                                 const Matrix& b, const Vector& c) {
  const Index n = a.rows();
  const Index m = b.rows();
  const Index l = c.size();
  Matrix g(n + m, l);
  g << a, b;
  Matrix kkt = Matrix::Zero(n + m + l, n + m + l);
  kkt.topLeftCorner(n + m, n + m) = qt;
  kkt.topRightCorner(n + m, l) = g;
  kkt.bottomLeftCorner(l, n + m) = g.transpose();
  Vector rhs = Vector::Zero(n + m + l);
  rhs.tail(l) = c;
  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  const Vector z = lu.solve(rhs);
  return ReferencePoint{z.head(n), z.segment(n, m), z.tail(l)};
}

}  // namespace

// ------------------------------------------------------------- generators

CoupledProblem build_problem(const InstanceData& d) {
  const Index n = d.u_dim();
  const Index m = d.v_dim();
  SmoothCoupling phi = [&] {
    switch (d.coupling) {
      case SmoothCoupling::Kind::zero: return make_zero_coupling(n, m);
      case SmoothCoupling::Kind::quadratic:
        return make_quadratic_coupling(d.qtilde, n, d.f, d.g);
      case SmoothCoupling::Kind::projection_penalty:
        if (!d.k1) throw Error(ErrorKind::schema, "projection_penalty needs sets.K1");
        return make_projection_penalty_coupling(d.qtilde, n, d.rho, *d.k1, d.eta);
    }
    throw Error(ErrorKind::schema, "unknown coupling");
  }();
  CoupledProblem prob{d.p, d.q, std::move(phi), LinearMap::dense(d.a, "A"),
                      LinearMap::dense(d.b, "B"), d.c};
  prob.validate();
  return prob;
}

InstanceData make_analytic_tiny() {
  InstanceData d;
  d.family = Family::analytic_tiny;
  d.spec.family = Family::analytic_tiny;
  d.coupling = SmoothCoupling::Kind::quadratic;
  d.qtilde = Matrix::Identity(2, 2);
  d.a = Matrix::Ones(1, 1);
  d.b = Matrix::Ones(1, 1);
  d.c = Vector::Ones(1);
  d.p = ProxTerm::zero(1);
  d.q = ProxTerm::zero(1);
  d.eta = 0.0;
  d.solution = ReferencePoint{Vector::Constant(1, 0.5), Vector::Constant(1, 0.5),
                              Vector::Constant(1, -0.5)};
  return d;
}

InstanceData make_quadratic_coupled(const InstanceSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.u_dim, m = spec.v_dim, l = spec.x_dim;
  InstanceData d;
  d.family = Family::quadratic_coupled;
  d.spec = spec;
  d.coupling = SmoothCoupling::Kind::quadratic;
  d.qtilde = conditioned_psd(n + m, spec.conditioning, rng);
  d.a = random_map(n, l, spec.sparsity, rng);
  d.b = random_map(m, l, spec.sparsity, rng);
  d.p = make_term(spec.p_kind, n, spec);
  d.q = make_term(spec.q_kind, m, spec);
  d.f = logistic(spec.f_weight);
  d.g = logistic(spec.g_weight);
  const Vector u0 = d.p.sample_interior(rng);
  const Vector v0 = d.q.sample_interior(rng);
  d.c = d.a.transpose() * u0 + d.b.transpose() * v0;
  d.eta = 0.0;
  if (d.p.kind() == ProxTerm::Kind::zero && d.q.kind() == ProxTerm::Kind::zero &&
      d.f.kind == SeparableSmooth::Kind::none && d.g.kind == SeparableSmooth::Kind::none)
    d.solution = smooth_qp_solution(d.qtilde, d.a, d.b, d.c);
  return d;
}

InstanceData make_projection_penalty(const InstanceSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.u_dim, m = spec.v_dim, l = spec.x_dim;
  InstanceData d;
  d.family = Family::projection_penalty;
  d.spec = spec;
  d.coupling = SmoothCoupling::Kind::projection_penalty;
  d.qtilde = conditioned_psd(n + m, spec.conditioning, rng);
  d.a = random_map(n, l, spec.sparsity, rng);
  d.b = random_map(m, l, spec.sparsity, rng);
  d.k1 = spec.k1 ? *spec.k1
                 : SetDescriptor::box(Vector::Constant(n + m, -0.5),
                                      Vector::Constant(n + m, 0.5));
  const SetDescriptor k2 = spec.k2 ? *spec.k2
                                   : SetDescriptor::box(Vector::Constant(n, spec.box_lo),
                                                        Vector::Constant(n, spec.box_hi));
  const SetDescriptor k3 = spec.k3 ? *spec.k3 : SetDescriptor::nonneg(m);
  d.p = ProxTerm::indicator(k2);
  d.q = ProxTerm::indicator(k3);
  d.rho = spec.rho;
  d.eta = spec.eta;
  const Vector u0 = d.p.sample_interior(rng);
  const Vector v0 = d.q.sample_interior(rng);
  d.c = d.a.transpose() * u0 + d.b.transpose() * v0;
  return d;
}

InstanceData make_separable_recovery(const InstanceSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.u_dim, m = spec.v_dim, l = spec.x_dim;
  InstanceData d;
  d.family = Family::separable_recovery;
  d.spec = spec;
  d.coupling = SmoothCoupling::Kind::zero;
  // A^* and B^* get orthonormal columns, scaled so AA^* = I and BB^* = 2 I.
  d.a = random_orthogonal(l, rng).leftCols(n).transpose();
  d.b = std::sqrt(2.0) * random_orthogonal(l, rng).leftCols(m).transpose();
  d.p = make_term(spec.p_kind == TermKind::zero ? TermKind::l1 : spec.p_kind, n, spec);
  d.q = make_term(spec.q_kind == TermKind::zero ? TermKind::l1 : spec.q_kind, m, spec);
  const Vector u0 = d.p.sample_interior(rng);
  const Vector v0 = d.q.sample_interior(rng);
  d.c = d.a.transpose() * u0 + d.b.transpose() * v0;
  d.eta = 0.0;
  return d;
}

InstanceData generate(const InstanceSpec& spec) {
  switch (spec.family) {
    case Family::analytic_tiny: return make_analytic_tiny();
    case Family::quadratic_coupled: return make_quadratic_coupled(spec);
    case Family::projection_penalty: return make_projection_penalty(spec);
    case Family::separable_recovery: return make_separable_recovery(spec);
  }
  throw Error(ErrorKind::invalid_argument, "unknown family");
}

}  // namespace madmm
