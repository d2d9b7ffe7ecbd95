#pragma once

// Independent reference computations. Nothing here calls the solver or the
// diagnostics module; formulas are re-derived on dense matrices.

#include "madmm/instances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using madmm::Index;
using madmm::Matrix;
using madmm::Vector;

/// KKT point of min 1/2 <w, Qt w> s.t. A^T u + B^T v = c via the Schur
/// complement of a positive definite Qt: x = -(G^T Qt^{-1} G)^{-1} c,
/// w = -Qt^{-1} G x with G = [A; B].
struct KktPoint {
  Vector u, v, x;
};

inline KktPoint schur_kkt(const Matrix& qt, const Matrix& a, const Matrix& b, const Vector& c) {
  const Index n = a.rows(), m = b.rows();
  Matrix g(n + m, c.size());
  g << a, b;
  const Eigen::LLT<Matrix> llt(qt);
  const Matrix qinv_g = llt.solve(g);
  const Matrix schur = g.transpose() * qinv_g;
  const Vector x = -schur.ldlt().solve(c);
  const Vector w = -qinv_g * x;
  return {w.head(n), w.tail(m), x};
}

// ------------------------------------------------------------ prox, scalar

inline double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// prox of (1/alpha) * term at z, written out per kind.
inline Vector prox(const madmm::ProxTerm& term, const Vector& z, double alpha) {
  Vector out = z;
  switch (term.kind()) {
    case madmm::ProxTerm::Kind::zero: break;
    case madmm::ProxTerm::Kind::l1:
      for (Index i = 0; i < z.size(); ++i) out(i) = soft(z(i), term.lambda() / alpha);
      break;
    case madmm::ProxTerm::Kind::indicator: {
      const auto& s = term.set();
      if (s.kind == madmm::SetDescriptor::Kind::box) {
        for (Index i = 0; i < z.size(); ++i) out(i) = std::min(std::max(z(i), s.lo(i)), s.hi(i));
      } else if (s.kind == madmm::SetDescriptor::Kind::nonneg) {
        for (Index i = 0; i < z.size(); ++i) out(i) = std::max(z(i), 0.0);
      } else {
        const Vector d = z - s.center;
        const double nd = d.norm();
        out = nd <= s.radius ? z : Vector(s.center + d * (s.radius / nd));
      }
      break;
    }
    case madmm::ProxTerm::Kind::quadratic:
      out = (term.hessian() + alpha * Matrix::Identity(z.size(), z.size()))
                .ldlt()
                .solve(alpha * z - term.linear());
      break;
  }
  return out;
}

// ------------------------------------------------- minimal two-block ADMM

/// Scaled-form ADMM for min p(u) + q(v) s.t. A^T u + B^T v = c when
/// A A^T = a_scale I and B B^T = b_scale I. y is the scaled multiplier x / sigma.
struct AdmmIterate {
  Vector u, v, x;
};

inline std::vector<AdmmIterate> textbook_admm(const madmm::InstanceData& d, double sigma,
                                              double tau, int iters) {
  const double a_scale = (d.a * d.a.transpose())(0, 0);
  const double b_scale = (d.b * d.b.transpose())(0, 0);
  Vector u = Vector::Zero(d.a.rows());
  Vector v = Vector::Zero(d.b.rows());
  Vector y = Vector::Zero(d.c.size());
  std::vector<AdmmIterate> out;
  out.push_back({u, v, sigma * y});
  for (int k = 0; k < iters; ++k) {
    // u = argmin p(u) + sigma/2 |A^T u + B^T v - c + y|^2
    const Vector s_u = d.b.transpose() * v - d.c + y;
    u = prox(d.p, -(d.a * s_u) / a_scale, sigma * a_scale);
    const Vector s_v = d.a.transpose() * u - d.c + y;
    v = prox(d.q, -(d.b * s_v) / b_scale, sigma * b_scale);
    y += tau * (d.a.transpose() * u + d.b.transpose() * v - d.c);
    out.push_back({u, v, sigma * y});
  }
  return out;
}

// --------------------------------------------- decrease inequality, dense

/// Every operator the decrease inequalities mention, as dense matrices.
struct DenseSetup {
  Matrix q;  ///< (n+m) square
  Matrix d1, d2, s, t;
  Matrix a, b;  ///< n x l, m x l
  Vector c;
  double sigma = 1.0, tau = 1.0, eta = 0.0;
  Index n() const { return a.rows(); }
  Index m() const { return b.rows(); }
};

inline double qf(const Matrix& g, const Vector& x) { return x.dot(g * x); }

struct Point {
  Vector u, v, x, x_tilde;
};

inline Vector join(const Vector& a, const Vector& b) {
  Vector w(a.size() + b.size());
  w << a, b;
  return w;
}

inline double big_phi(const DenseSetup& z, const Point& k, const Vector& u, const Vector& v,
                      const Vector& x) {
  const Vector eu = k.u - u, ev = k.v - v;
  const Matrix q22 = z.q.bottomRightCorner(z.m(), z.m());
  const Vector mid = z.a.transpose() * u + z.b.transpose() * k.v - z.c;
  return (k.x - x).squaredNorm() / (z.tau * z.sigma) + qf(z.d1 + z.s, eu) +
         qf(q22 + z.d2 + z.t, ev) + 0.5 * qf(z.q, join(eu, ev)) + z.sigma * mid.squaredNorm();
}

inline double big_psi(const DenseSetup& z, const Point& k, const Vector& u, const Vector& v,
                      const Vector& x) {
  const Vector r = z.a.transpose() * k.u + z.b.transpose() * k.v - z.c;
  const double coef = std::max(1.0 - z.tau, 1.0 - 1.0 / z.tau);
  return big_phi(z, k, u, v, x) + qf(z.q, join(k.u - u, k.v - v)) +
         coef * z.sigma * r.squaredNorm();
}

inline double big_xi(const DenseSetup& z, const Point& prev, const Point& curr) {
  const Vector du = curr.u - prev.u, dv = curr.v - prev.v;
  return qf(z.d2 + z.t, dv) + z.eta * qf(z.d1, du);
}

/// Left side minus right side of the case (i) or case (ii) decrease
/// inequality. `gap` is the variational term evaluated by the caller.
inline double decrease_excess_i(const DenseSetup& z, double gap, const Point& prev,
                                const Point& curr, const Vector& u, const Vector& v,
                                const Vector& x) {
  const Vector du = curr.u - prev.u, dv = curr.v - prev.v;
  const double theta = qf(z.s, du) + qf(z.t, dv) + 0.25 * qf(z.q, join(du, dv));
  const Vector mid = z.a.transpose() * curr.u + z.b.transpose() * prev.v - z.c;
  const Vector r = z.a.transpose() * curr.u + z.b.transpose() * curr.v - z.c;
  const double lhs = gap + 0.5 * (big_phi(z, curr, u, v, x) - big_phi(z, prev, u, v, x));
  const double rhs = -0.5 * (theta + z.sigma * mid.squaredNorm() +
                             (1.0 - z.tau) * z.sigma * r.squaredNorm());
  return lhs - rhs;
}

inline double decrease_excess_ii(const DenseSetup& z, double gap, const Point& before,
                                 const Point& prev, const Point& curr, const Vector& u,
                                 const Vector& v, const Vector& x) {
  const Vector du = curr.u - prev.u, dv = curr.v - prev.v;
  const Vector r = z.a.transpose() * curr.u + z.b.transpose() * curr.v - z.c;
  const double theta = qf(z.s, du) + qf(z.t, dv) + 0.25 * qf(z.q, join(du, dv));
  const double rho = std::min(z.tau, 1.0 + z.tau - z.tau * z.tau);
  const double gamma = theta + rho * z.sigma * (z.b.transpose() * dv).squaredNorm() -
                       z.eta * (qf(z.d1, du) + qf(z.d2, dv));
  const double lhs = gap + 0.5 * (big_psi(z, curr, u, v, x) + big_xi(z, prev, curr) -
                                  big_psi(z, prev, u, v, x) - big_xi(z, before, prev));
  const double rhs =
      -0.5 * (gamma + std::min(1.0, 1.0 + 1.0 / z.tau - z.tau) * z.sigma * r.squaredNorm());
  return lhs - rhs;
}

}  // namespace oracle
