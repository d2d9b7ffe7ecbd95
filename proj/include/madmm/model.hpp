#pragma once

#include "madmm/linop.hpp"
#include "madmm/types.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace madmm {

using Rng = std::mt19937_64;

// ------------------------------------------------------------ prox toolbox

/// argmin_t lambda*|t|_1 + 1/2 |t - z|^2.
Vector soft_threshold(const Vector& z, double lambda);
Vector project_box(const Vector& z, const Vector& lo, const Vector& hi);
Vector project_nonneg(const Vector& z);
Vector project_ball(const Vector& z, const Vector& center, double radius);

/// A closed convex set with a closed-form projection.
struct SetDescriptor {
  enum class Kind { box, nonneg, ball };

  Kind kind = Kind::box;
  Vector lo;      ///< box only; entries may be -inf
  Vector hi;      ///< box only; entries may be +inf
  Vector center;  ///< ball only
  double radius = 1.0;

  static SetDescriptor box(Vector lo, Vector hi);
  static SetDescriptor nonneg(Index dim);
  static SetDescriptor ball(Vector center, double radius);

  Index dim() const;
  Vector project(const Vector& z) const;
  bool contains(const Vector& t) const;
  /// dist(g, N_K(t)) for t in K; +inf outside K.
  double normal_cone_distance(const Vector& t, const Vector& g) const;
  /// A point of K drawn from a fixed seeded distribution.
  Vector sample(Rng& rng) const;
  /// A point strictly inside K (relative interior for degenerate boxes).
  Vector sample_interior(Rng& rng) const;
};

const char* to_string(SetDescriptor::Kind kind);

/// A closed proper convex term with an exact prox: zero, lambda*|.|_1, the
/// indicator of a SetDescriptor, or the quadratic 1/2 <t,Pt> + <b,t>.
class ProxTerm {
 public:
  enum class Kind { zero, l1, indicator, quadratic };

  static ProxTerm zero(Index dim);
  static ProxTerm l1(Index dim, double lambda);
  static ProxTerm indicator(SetDescriptor set);
  static ProxTerm quadratic(Matrix hessian, Vector linear);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  double lambda() const { return lambda_; }
  const SetDescriptor& set() const { return set_; }
  const Matrix& hessian() const { return hessian_; }
  const Vector& linear() const { return linear_; }

  /// Zero or quadratic: the linear_solve backend can absorb it.
  bool is_quadratic() const {
    return kind_ == Kind::zero || kind_ == Kind::quadratic;
  }

  /// Extended-real value; +inf outside the domain.
  double value(const Vector& t) const;
  /// argmin_t value(t) + alpha/2 |t - z|^2.
  Vector prox(const Vector& z, double alpha) const;
  /// dist(g, subdifferential at t); +inf when t is outside the domain.
  double subdifferential_distance(const Vector& t, const Vector& g) const;
  /// Domain sampler used by every probe-based certificate.
  Vector sample_domain(Rng& rng) const;
  Vector sample_interior(Rng& rng) const;

 private:
  Kind kind_ = Kind::zero;
  Index dim_ = 0;
  double lambda_ = 0.0;
  SetDescriptor set_;
  Matrix hessian_;
  Vector linear_;
};

const char* to_string(ProxTerm::Kind kind);

// ----------------------------------------------------------- smooth coupling

/// Separable smooth part weight * sum_i log(1 + exp(t_i)); its Hessian lies
/// between 0 and weight/4 * I.
struct SeparableSmooth {
  enum class Kind { none, logistic };
  Kind kind = Kind::none;
  double weight = 0.0;

  double value(const Vector& t) const;
  Vector gradient(const Vector& t) const;
  double hessian_lower() const { return 0.0; }
  double hessian_upper() const {
    return kind == Kind::logistic ? 0.25 * weight : 0.0;
  }
};

/// The smooth coupled term phi(u, v) with its curvature envelope
/// Q <= W <= Q + Diag(D1, D2) and the cross-term constant eta.
struct SmoothCoupling {
  enum class Kind { zero, quadratic, projection_penalty };

  Kind kind = Kind::zero;
  Index u_dim = 0;
  Index v_dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  BlockCurvature q_lower;
  SelfAdjointOperator d1;
  SelfAdjointOperator d2;
  double eta = 1.0;

  // Data the builders used; kept for reporting and dense eta checks.
  Matrix qtilde;  ///< empty for the zero coupling
  SeparableSmooth f;
  SeparableSmooth g;
  double rho = 0.0;
  SetDescriptor k1;

  Index dim() const { return u_dim + v_dim; }
  bool is_quadratic_coupled() const {
    return kind == Kind::zero || kind == Kind::quadratic;
  }
  SelfAdjointOperator q() const { return q_lower.assembled(); }
  SelfAdjointOperator h() const { return block_diagonal(d1, d2); }
  SelfAdjointOperator q_plus_h() const { return q() + h(); }
};

SmoothCoupling make_zero_coupling(Index u_dim, Index v_dim);
/// 1/2 <w, Qt w> + f(u) + g(v), envelope Q = Qt + Diag(Sigma_f, Sigma_g),
/// H = Diag(hat Sigma_f - Sigma_f, hat Sigma_g - Sigma_g), eta = 0.
SmoothCoupling make_quadratic_coupling(const Matrix& qtilde, Index u_dim,
                                       SeparableSmooth f = {},
                                       SeparableSmooth g = {});
/// 1/2 <w, Qt w> + rho/2 dist^2(w, K1), envelope Q = Qt, H = rho I.
SmoothCoupling make_projection_penalty_coupling(const Matrix& qtilde,
                                                Index u_dim, double rho,
                                                SetDescriptor k1,
                                                double eta = 1.0);

/// phi(anchor) + <grad phi(anchor), w - anchor> + 1/2 |w - anchor|^2_{Q+H}.
double majorized_phi(const SmoothCoupling& phi, const Vector& w,
                     const Vector& anchor);

// ------------------------------------------------------------------ problem

struct CoupledProblem {
  ProxTerm p;
  ProxTerm q;
  SmoothCoupling phi;
  LinearMap a;  ///< X -> U
  LinearMap b;  ///< X -> V
  Vector c;

  Index u_dim() const { return p.dim(); }
  Index v_dim() const { return q.dim(); }
  Index x_dim() const { return c.size(); }

  /// Throws on any dimensional inconsistency.
  void validate() const;
  /// A^* u + B^* v - c.
  Vector residual(const Vector& u, const Vector& v) const;
};

Vector join(const Vector& u, const Vector& v);

/// p(u) + q(v) + phi(u, v); +inf if either nonsmooth term is.
double objective(const CoupledProblem& prob, const Vector& u, const Vector& v);

// -------------------------------------------------------- envelope validation

struct EnvelopeOptions {
  double sample_scale = 2.0;
  double rel_tol = 1e-8;
  int max_secant_points = 50;
};

struct EnvelopeReport {
  int samples = 0;
  int lower_failures = 0;
  int upper_failures = 0;
  /// max over pairs of the amount by which either sandwich side is violated
  /// (<= 0 means every check passed with slack).
  double worst_violation = -kInfinity;
  /// max |phi_hat(w; w') - phi(w)|; zero up to round-off for quadratics
  /// with H = 0.
  double max_majorization_gap = 0.0;

  bool cross_term_dense = false;  ///< true: exact check, false: sampled
  bool cross_term_ok = true;
  /// Smallest eigenvalue of [eta D1, -E; -E^*, eta D2] (dense check only).
  double cross_term_margin = 0.0;
  /// max |D1^{-1/2} (W12 - Q12) D2^{-1/2}|; +inf when a D block is
  /// singular and the cross block is not zero.
  double cross_term_ratio = 0.0;
  int cross_term_warnings = 0;
  std::vector<std::string> warnings;

  bool passed() const {
    return lower_failures == 0 && upper_failures == 0 && cross_term_ok;
  }
};

EnvelopeReport validate_envelope(const SmoothCoupling& phi,
                                 std::uint64_t sampler_seed, int n_samples,
                                 const EnvelopeOptions& options = {});

}  // namespace madmm
