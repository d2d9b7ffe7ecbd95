#include "madmm/model.hpp"

#include <algorithm>
#include <cmath>

namespace madmm {

namespace {

bool at_bound(double t, double bound) {
  return std::isfinite(bound) && std::abs(t - bound) <= 1e-12 * (1.0 + std::abs(bound));
}

double gaussian(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Vector soft_threshold(const Vector& z, double lambda) {
  if (!(lambda >= 0.0))
    throw Error(ErrorKind::invalid_argument, "soft_threshold needs lambda >= 0");
  return z.unaryExpr([lambda](double zi) {
    return zi > lambda ? zi - lambda : (zi < -lambda ? zi + lambda : 0.0);
  });
}

Vector project_box(const Vector& z, const Vector& lo, const Vector& hi) {
  require_dim(lo.size(), z.size(), "project_box lower bound");
  require_dim(hi.size(), z.size(), "project_box upper bound");
  if (((lo.array() > hi.array())).any())
    throw Error(ErrorKind::invalid_argument, "project_box needs lo <= hi");
  return z.cwiseMax(lo).cwiseMin(hi);
}

Vector project_nonneg(const Vector& z) { return z.cwiseMax(0.0); }

Vector project_ball(const Vector& z, const Vector& center, double radius) {
  require_dim(center.size(), z.size(), "project_ball center");
  if (!(radius > 0.0))
    throw Error(ErrorKind::invalid_argument, "project_ball needs radius > 0");
  const Vector d = z - center;
  const double n = d.norm();
  if (n <= radius) return z;
  return center + (radius / n) * d;
}

// ------------------------------------------------------------ SetDescriptor

const char* to_string(SetDescriptor::Kind kind) {
  switch (kind) {
    case SetDescriptor::Kind::box: return "box";
    case SetDescriptor::Kind::nonneg: return "nonneg";
    case SetDescriptor::Kind::ball: return "ball";
  }
  return "unknown";
}

SetDescriptor SetDescriptor::box(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || lo.size() < 1)
    throw Error(ErrorKind::invalid_argument, "box bounds must have equal, positive size");
  if ((lo.array() > hi.array()).any())
    throw Error(ErrorKind::invalid_argument, "box needs lo <= hi componentwise");
  SetDescriptor s;
  s.kind = Kind::box;
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

SetDescriptor SetDescriptor::nonneg(Index dim) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "nonneg set needs dim >= 1");
  SetDescriptor s;
  s.kind = Kind::nonneg;
  s.lo = Vector::Zero(dim);
  s.hi = Vector::Constant(dim, kInfinity);
  return s;
}

SetDescriptor SetDescriptor::ball(Vector center, double radius) {
  if (!(radius > 0.0) || center.size() < 1)
    throw Error(ErrorKind::invalid_argument, "ball needs radius > 0 and a center");
  SetDescriptor s;
  s.kind = Kind::ball;
  s.center = std::move(center);
  s.radius = radius;
  return s;
}

Index SetDescriptor::dim() const {
  return kind == Kind::ball ? center.size() : lo.size();
}

Vector SetDescriptor::project(const Vector& z) const {
  switch (kind) {
    case Kind::box: return project_box(z, lo, hi);
    case Kind::nonneg: return project_nonneg(z);
    case Kind::ball: return project_ball(z, center, radius);
  }
  return z;
}

bool SetDescriptor::contains(const Vector& t) const {
  if (t.size() != dim()) return false;
  if (kind == Kind::ball)
    return (t - center).norm() <= radius * (1.0 + 1e-12);
  for (Index i = 0; i < t.size(); ++i) {
    if (t(i) < lo(i) - 1e-12 * (1.0 + std::abs(lo(i)))) return false;
    if (t(i) > hi(i) + 1e-12 * (1.0 + std::abs(hi(i)))) return false;
  }
  return true;
}

double SetDescriptor::normal_cone_distance(const Vector& t, const Vector& g) const {
  require_dim(g.size(), dim(), "normal_cone_distance");
  if (!contains(t)) return kInfinity;
  if (kind == Kind::ball) {
    const Vector d = t - center;
    const double n = d.norm();
    if (n < radius * (1.0 - 1e-12)) return g.norm();
    const Vector normal = d / n;
    const double s = std::max(0.0, g.dot(normal));
    return (g - s * normal).norm();
  }
  double sq = 0.0;
  for (Index i = 0; i < t.size(); ++i) {
    const bool low = at_bound(t(i), lo(i));
    const bool high = at_bound(t(i), hi(i));
    double e = 0.0;
    if (low && high) e = 0.0;
    else if (low) e = std::max(g(i), 0.0);
    else if (high) e = std::max(-g(i), 0.0);
    else e = std::abs(g(i));
    sq += e * e;
  }
  return std::sqrt(sq);
}

Vector SetDescriptor::sample(Rng& rng) const {
  const Index n = dim();
  Vector t(n);
  if (kind == Kind::ball) {
    Vector d(n);
    for (Index i = 0; i < n; ++i) d(i) = gaussian(rng);
    const double r = radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / double(n));
    const double dn = d.norm();
    return center + (dn > 0.0 ? (r / dn) * d : Vector(Vector::Zero(n)));
  }
  for (Index i = 0; i < n; ++i) {
    const bool flo = std::isfinite(lo(i));
    const bool fhi = std::isfinite(hi(i));
    if (flo && fhi) t(i) = lo(i) == hi(i) ? lo(i) : uniform(rng, lo(i), hi(i));
    else if (flo) t(i) = lo(i) + std::abs(gaussian(rng)) * 1.5;
    else if (fhi) t(i) = hi(i) - std::abs(gaussian(rng)) * 1.5;
    else t(i) = 1.5 * gaussian(rng);
  }
  return t;
}

Vector SetDescriptor::sample_interior(Rng& rng) const {
  if (kind == Kind::ball) {
    Vector s = sample(rng);
    return center + 0.9 * (s - center);
  }
  const Index n = dim();
  Vector t(n);
  for (Index i = 0; i < n; ++i) {
    const bool flo = std::isfinite(lo(i));
    const bool fhi = std::isfinite(hi(i));
    if (flo && fhi) {
      const double mid = 0.5 * (lo(i) + hi(i));
      const double half = 0.5 * (hi(i) - lo(i));
      t(i) = mid + 0.8 * half * uniform(rng, -1.0, 1.0);
    } else if (flo) {
      t(i) = lo(i) + 0.1 + std::abs(gaussian(rng));
    } else if (fhi) {
      t(i) = hi(i) - 0.1 - std::abs(gaussian(rng));
    } else {
      t(i) = gaussian(rng);
    }
  }
  return t;
}

// ------------------------------------------------------------------ ProxTerm

const char* to_string(ProxTerm::Kind kind) {
  switch (kind) {
    case ProxTerm::Kind::zero: return "zero";
    case ProxTerm::Kind::l1: return "l1";
    case ProxTerm::Kind::indicator: return "indicator";
    case ProxTerm::Kind::quadratic: return "quadratic";
  }
  return "unknown";
}

ProxTerm ProxTerm::zero(Index dim) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "ProxTerm dim must be positive");
  ProxTerm t;
  t.kind_ = Kind::zero;
  t.dim_ = dim;
  return t;
}

ProxTerm ProxTerm::l1(Index dim, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::invalid_argument, "l1 weight must be >= 0");
  ProxTerm t = zero(dim);
  t.kind_ = Kind::l1;
  t.lambda_ = lambda;
  return t;
}

ProxTerm ProxTerm::indicator(SetDescriptor set) {
  ProxTerm t = zero(set.dim());
  t.kind_ = Kind::indicator;
  t.set_ = std::move(set);
  return t;
}

ProxTerm ProxTerm::quadratic(Matrix hessian, Vector linear) {
  if (hessian.rows() != hessian.cols() || hessian.rows() != linear.size())
    throw Error(ErrorKind::dimension_mismatch, "quadratic ProxTerm shape mismatch");
  ProxTerm t = zero(linear.size());
  t.kind_ = Kind::quadratic;
  t.hessian_ = 0.5 * (hessian + hessian.transpose());
  t.linear_ = std::move(linear);
  return t;
}

double ProxTerm::value(const Vector& t) const {
  require_dim(t.size(), dim_, "ProxTerm::value");
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::l1: return lambda_ * t.lpNorm<1>();
    case Kind::indicator: return set_.contains(t) ? 0.0 : kInfinity;
    case Kind::quadratic: return 0.5 * t.dot(hessian_ * t) + linear_.dot(t);
  }
  return 0.0;
}

Vector ProxTerm::prox(const Vector& z, double alpha) const {
  require_dim(z.size(), dim_, "ProxTerm::prox");
  if (!(alpha > 0.0)) throw Error(ErrorKind::invalid_argument, "prox weight must be positive");
  switch (kind_) {
    case Kind::zero: return z;
    case Kind::l1: return soft_threshold(z, lambda_ / alpha);
    case Kind::indicator: return set_.project(z);
    case Kind::quadratic: {
      Matrix m = hessian_ + alpha * Matrix::Identity(dim_, dim_);
      return m.ldlt().solve(alpha * z - linear_);
    }
  }
  return z;
}

double ProxTerm::subdifferential_distance(const Vector& t, const Vector& g) const {
  require_dim(t.size(), dim_, "ProxTerm::subdifferential_distance");
  require_dim(g.size(), dim_, "ProxTerm::subdifferential_distance");
  switch (kind_) {
    case Kind::zero: return g.norm();
    case Kind::quadratic: return (g - hessian_ * t - linear_).norm();
    case Kind::indicator: return set_.normal_cone_distance(t, g);
    case Kind::l1: {
      double sq = 0.0;
      for (Index i = 0; i < dim_; ++i) {
        double e;
        if (t(i) > 0.0) e = g(i) - lambda_;
        else if (t(i) < 0.0) e = g(i) + lambda_;
        else e = std::max(std::abs(g(i)) - lambda_, 0.0);
        sq += e * e;
      }
      return std::sqrt(sq);
    }
  }
  return kInfinity;
}

Vector ProxTerm::sample_domain(Rng& rng) const {
  if (kind_ == Kind::indicator) return set_.sample(rng);
  Vector t(dim_);
  for (Index i = 0; i < dim_; ++i) t(i) = 1.5 * gaussian(rng);
  return t;
}

Vector ProxTerm::sample_interior(Rng& rng) const {
  if (kind_ == Kind::indicator) return set_.sample_interior(rng);
  Vector t(dim_);
  for (Index i = 0; i < dim_; ++i) t(i) = gaussian(rng);
  return t;
}

}  // namespace madmm
