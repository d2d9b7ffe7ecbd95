#include "madmm/linop.hpp"

#include "madmm/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace madmm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::materialize_cap: return "materialize_cap";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::conditions_failed: return "conditions_failed";
    case ErrorKind::usage: return "usage";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
    case ErrorKind::no_feasible_probe: return "no_feasible_probe";
  }
  return "unknown";
}

void require_dim(Index got, Index want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": dimension " << got << " does not match expected " << want;
    throw Error(ErrorKind::dimension_mismatch, os.str());
  }
}

// ---------------------------------------------------------------- LinearMap

LinearMap::LinearMap(Index in_dim, Index out_dim, Action apply,
                     Action apply_adjoint, std::string label)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      apply_(std::move(apply)),
      apply_adjoint_(std::move(apply_adjoint)),
      label_(std::move(label)) {
  if (in_dim < 1 || out_dim < 1)
    throw Error(ErrorKind::invalid_argument,
                "LinearMap dimensions must be positive");
}

LinearMap LinearMap::dense(Matrix m, std::string label) {
  auto shared = std::make_shared<const Matrix>(std::move(m));
  LinearMap map(
      shared->cols(), shared->rows(),
      [shared](const Vector& x) -> Vector { return (*shared) * x; },
      [shared](const Vector& y) -> Vector {
        return shared->transpose() * y;
      },
      std::move(label));
  map.dense_ = shared;
  return map;
}

LinearMap LinearMap::zero(Index in_dim, Index out_dim) {
  return dense(Matrix::Zero(out_dim, in_dim), "0");
}

LinearMap LinearMap::identity(Index dim) {
  return dense(Matrix::Identity(dim, dim), "I");
}

Vector LinearMap::apply(const Vector& x) const {
  require_dim(x.size(), in_dim_, "LinearMap::apply");
  return apply_(x);
}

Vector LinearMap::apply_adjoint(const Vector& y) const {
  require_dim(y.size(), out_dim_, "LinearMap::apply_adjoint");
  return apply_adjoint_(y);
}

LinearMap LinearMap::adjoint() const {
  if (dense_) return dense(dense_->transpose(), label_ + "*");
  return LinearMap(out_dim_, in_dim_, apply_adjoint_, apply_, label_ + "*");
}

// ------------------------------------------------------- SelfAdjointOperator

SelfAdjointOperator::SelfAdjointOperator(Index dim, Action apply, bool psd,
                                         std::string label)
    : dim_(dim), apply_(std::move(apply)), psd_(psd), label_(std::move(label)) {
  if (dim < 1)
    throw Error(ErrorKind::invalid_argument,
                "SelfAdjointOperator dimension must be positive");
}

SelfAdjointOperator SelfAdjointOperator::dense(Matrix m, bool psd,
                                               std::string label) {
  if (m.rows() != m.cols())
    throw Error(ErrorKind::dimension_mismatch,
                "self-adjoint operator needs a square matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorKind::invalid_argument,
                "matrix for self-adjoint operator '" + label +
                    "' is not symmetric");
  Matrix sym = 0.5 * (m + m.transpose());
  auto shared = std::make_shared<const Matrix>(std::move(sym));
  SelfAdjointOperator op(
      shared->rows(), [shared](const Vector& x) -> Vector { return (*shared) * x; },
      psd, std::move(label));
  op.dense_ = shared;
  return op;
}

SelfAdjointOperator SelfAdjointOperator::zero(Index dim) {
  return dense(Matrix::Zero(dim, dim), true, "0");
}

SelfAdjointOperator SelfAdjointOperator::identity(Index dim, double scale) {
  return dense(scale * Matrix::Identity(dim, dim), scale >= 0.0, "I");
}

SelfAdjointOperator SelfAdjointOperator::diagonal(const Vector& d) {
  return dense(d.asDiagonal().toDenseMatrix(), (d.array() >= 0.0).all(),
               "diag");
}

SelfAdjointOperator SelfAdjointOperator::gram(const LinearMap& m,
                                              double scale) {
  if (const Matrix* d = m.dense_backing())
    return dense(scale * (*d) * d->transpose(), scale >= 0.0,
                 m.label() + m.label() + "*");
  return SelfAdjointOperator(
      m.out_dim(),
      [m, scale](const Vector& y) -> Vector {
        return scale * m.apply(m.apply_adjoint(y));
      },
      scale >= 0.0, m.label() + m.label() + "*");
}

Vector SelfAdjointOperator::apply(const Vector& x) const {
  require_dim(x.size(), dim_, "SelfAdjointOperator::apply");
  return apply_(x);
}

SelfAdjointOperator SelfAdjointOperator::scaled(double s) const {
  if (dense_) return dense(s * (*dense_), psd_ && s >= 0.0, label_);
  Action f = apply_;
  return SelfAdjointOperator(
      dim_, [f, s](const Vector& x) -> Vector { return s * f(x); },
      psd_ && s >= 0.0, label_);
}

SelfAdjointOperator operator+(const SelfAdjointOperator& a,
                              const SelfAdjointOperator& b) {
  require_dim(b.dim(), a.dim(), "SelfAdjointOperator sum");
  const std::string label = a.label() + "+" + b.label();
  if (a.dense_ && b.dense_)
    return SelfAdjointOperator::dense(*a.dense_ + *b.dense_,
                                      a.psd_ && b.psd_, label);
  auto fa = a.apply_;
  auto fb = b.apply_;
  return SelfAdjointOperator(
      a.dim(), [fa, fb](const Vector& x) -> Vector { return fa(x) + fb(x); },
      a.psd_ && b.psd_, label);
}

SelfAdjointOperator operator-(const SelfAdjointOperator& a,
                              const SelfAdjointOperator& b) {
  require_dim(b.dim(), a.dim(), "SelfAdjointOperator difference");
  const std::string label = a.label() + "-" + b.label();
  if (a.dense_ && b.dense_)
    return SelfAdjointOperator::dense(*a.dense_ - *b.dense_, false, label);
  auto fa = a.apply_;
  auto fb = b.apply_;
  return SelfAdjointOperator(
      a.dim(), [fa, fb](const Vector& x) -> Vector { return fa(x) - fb(x); },
      false, label);
}

SelfAdjointOperator block_diagonal(const SelfAdjointOperator& a,
                                   const SelfAdjointOperator& b) {
  const Index n = a.dim();
  const Index m = b.dim();
  const std::string label = "Diag(" + a.label() + "," + b.label() + ")";
  if (a.dense_backing() && b.dense_backing()) {
    Matrix full = Matrix::Zero(n + m, n + m);
    full.topLeftCorner(n, n) = *a.dense_backing();
    full.bottomRightCorner(m, m) = *b.dense_backing();
    return SelfAdjointOperator::dense(std::move(full), a.psd() && b.psd(),
                                      label);
  }
  return SelfAdjointOperator(
      n + m,
      [a, b, n, m](const Vector& w) -> Vector {
        Vector out(n + m);
        out.head(n) = a.apply(w.head(n));
        out.tail(m) = b.apply(w.tail(m));
        return out;
      },
      a.psd() && b.psd(), label);
}

// ------------------------------------------------------------ BlockCurvature

SelfAdjointOperator BlockCurvature::assembled() const {
  const Index n = u_dim();
  const Index m = v_dim();
  require_dim(q12.out_dim(), n, "BlockCurvature q12 output");
  require_dim(q12.in_dim(), m, "BlockCurvature q12 input");
  if (q11.dense_backing() && q22.dense_backing() && q12.dense_backing()) {
    Matrix full(n + m, n + m);
    full.topLeftCorner(n, n) = *q11.dense_backing();
    full.topRightCorner(n, m) = *q12.dense_backing();
    full.bottomLeftCorner(m, n) = q12.dense_backing()->transpose();
    full.bottomRightCorner(m, m) = *q22.dense_backing();
    return SelfAdjointOperator::dense(std::move(full), true, "Q");
  }
  return SelfAdjointOperator(
      n + m,
      [q11 = q11, q22 = q22, q12 = q12, n, m](const Vector& w) -> Vector {
        Vector out(n + m);
        out.head(n) = q11.apply(w.head(n)) + q12.apply(w.tail(m));
        out.tail(m) = q12.apply_adjoint(w.head(n)) + q22.apply(w.tail(m));
        return out;
      },
      true, "Q");
}

BlockCurvature BlockCurvature::from_dense(const Matrix& full, Index u_dim) {
  if (full.rows() != full.cols() || u_dim < 1 || u_dim >= full.rows())
    throw Error(ErrorKind::dimension_mismatch,
                "block curvature needs a square matrix split into two blocks");
  const Index m = full.rows() - u_dim;
  Matrix sym = 0.5 * (full + full.transpose());
  return BlockCurvature{
      SelfAdjointOperator::dense(sym.topLeftCorner(u_dim, u_dim), true, "Q11"),
      SelfAdjointOperator::dense(sym.bottomRightCorner(m, m), true, "Q22"),
      LinearMap::dense(sym.topRightCorner(u_dim, m), "Q12")};
}

BlockCurvature BlockCurvature::zero(Index u_dim, Index v_dim) {
  return BlockCurvature{SelfAdjointOperator::zero(u_dim),
                        SelfAdjointOperator::zero(v_dim),
                        LinearMap::zero(v_dim, u_dim)};
}

// --------------------------------------------------------------- operations

double seminorm_sq(const SelfAdjointOperator& g, const Vector& x) {
  require_dim(x.size(), g.dim(), "seminorm_sq");
  const double value = x.dot(g.apply(x));
  if (value < 0.0 && value >= -1e-12 * x.squaredNorm()) return 0.0;
  return value;
}

namespace {

void check_cap(Index dim, Index cap) {
  if (dim > cap) {
    std::ostringstream os;
    os << "refusing to materialize an operator of dimension " << dim
       << " above the cap of " << cap;
    throw Error(ErrorKind::materialize_cap, os.str());
  }
}

template <class Apply>
Matrix columns_of(Index rows, Index cols, Apply&& apply) {
  Matrix out(rows, cols);
  for_each_index(default_execution(), cols, [&](Index j) {
    Vector e = Vector::Zero(cols);
    e(j) = 1.0;
    out.col(j) = apply(e);
  });
  return out;
}

}  // namespace

Matrix materialize(const SelfAdjointOperator& op, Index cap) {
  check_cap(op.dim(), cap);
  if (const Matrix* d = op.dense_backing()) return *d;
  return columns_of(op.dim(), op.dim(),
                    [&](const Vector& e) { return op.apply(e); });
}

Matrix materialize(const LinearMap& op, Index cap) {
  check_cap(std::max(op.in_dim(), op.out_dim()), cap);
  if (const Matrix* d = op.dense_backing()) return *d;
  return columns_of(op.out_dim(), op.in_dim(),
                    [&](const Vector& e) { return op.apply(e); });
}

SpectrumSummary spectrum(const Matrix& symmetric) {
  Matrix sym = 0.5 * (symmetric + symmetric.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::invalid_argument, "symmetric eigensolver failed");
  const Index n = sym.rows();
  return SpectrumSummary{solver.eigenvalues()(0), solver.eigenvalues()(n - 1),
                         solver.eigenvectors().col(0)};
}

SpectrumSummary spectrum(const SelfAdjointOperator& op, Index cap) {
  return spectrum(materialize(op, cap));
}

double min_eigenvalue(const SelfAdjointOperator& op, Index cap) {
  return spectrum(op, cap).lambda_min;
}

double max_eigenvalue(const SelfAdjointOperator& op, Index cap) {
  return spectrum(op, cap).lambda_max;
}

double operator_norm(const LinearMap& m, Index cap) {
  const Matrix dense = materialize(m, cap);
  Eigen::JacobiSVD<Matrix> svd(dense);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double operator_norm(const SelfAdjointOperator& g, Index cap) {
  const SpectrumSummary s = spectrum(g, cap);
  return std::max(std::abs(s.lambda_min), std::abs(s.lambda_max));
}

Definiteness classify(double lambda_min, double lambda_max,
                      const DefinitenessThresholds& t) {
  const double scale = std::max(1.0, lambda_max);
  if (lambda_min > t.strict_rel * scale) return Definiteness::strict_pd;
  if (lambda_min >= -t.semi_rel * scale) return Definiteness::psd;
  return Definiteness::indefinite;
}

}  // namespace madmm
