#pragma once

#include "madmm/model.hpp"
#include "madmm/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace madmm {

enum class Family { analytic_tiny, quadratic_coupled, projection_penalty, separable_recovery };

const char* to_string(Family f);
Family family_from_string(const std::string& name);

/// Which nonsmooth term a generator attaches to a block.
enum class TermKind { zero, l1, box, nonneg };

const char* to_string(TermKind k);
TermKind term_kind_from_string(const std::string& name);

struct InstanceSpec {
  Family family = Family::analytic_tiny;
  Index u_dim = 1;
  Index v_dim = 1;
  Index x_dim = 1;
  std::uint64_t seed = 0;
  /// Exact condition number of Qt (largest / smallest eigenvalue).
  double conditioning = 10.0;
  /// Fraction of entries of A and B forced to zero.
  double sparsity = 0.0;

  TermKind p_kind = TermKind::zero;
  TermKind q_kind = TermKind::zero;
  double l1_lambda = 0.1;
  double box_lo = -1.0;
  double box_hi = 1.0;

  /// Logistic weights of f(u), g(v); 0 disables the separable smooth part.
  double f_weight = 0.0;
  double g_weight = 0.0;

  /// projection_penalty only. K2, K3 default to the box [box_lo, box_hi]
  /// and the nonnegative orthant; K1 defaults to a unit box around 0.
  std::optional<SetDescriptor> k1;
  std::optional<SetDescriptor> k2;
  std::optional<SetDescriptor> k3;
  double rho = 1.0;
  double eta = 1.0;

  /// Throws invalid_argument naming the offending field.
  void validate() const;
};

/// Everything needed to rebuild a problem; serialization works on this
/// record so a load/save round trip is exact.
struct InstanceData {
  Family family = Family::analytic_tiny;
  InstanceSpec spec;
  SmoothCoupling::Kind coupling = SmoothCoupling::Kind::zero;
  Matrix qtilde;  ///< (u+v) square; empty for the zero coupling
  Matrix a;       ///< u x x, the map X -> U
  Matrix b;       ///< v x x, the map X -> V
  Vector c;
  ProxTerm p = ProxTerm::zero(1);
  ProxTerm q = ProxTerm::zero(1);
  SeparableSmooth f;
  SeparableSmooth g;
  std::optional<SetDescriptor> k1;
  double rho = 0.0;
  double eta = 0.0;
  std::optional<ReferencePoint> solution;

  Index u_dim() const { return a.rows(); }
  Index v_dim() const { return b.rows(); }
  Index x_dim() const { return c.size(); }
};

CoupledProblem build_problem(const InstanceData& data);

InstanceData make_analytic_tiny();
InstanceData make_quadratic_coupled(const InstanceSpec& spec);
InstanceData make_projection_penalty(const InstanceSpec& spec);
InstanceData make_separable_recovery(const InstanceSpec& spec);
/// Dispatches on spec.family.
InstanceData generate(const InstanceSpec& spec);

/// Symmetric PSD matrix U diag(lambda) U^T with lambda log-spaced from 1 down
/// to 1/conditioning and U a seeded orthogonal matrix.
Matrix conditioned_psd(Index n, double conditioning, Rng& rng);
/// Seeded orthogonal matrix (QR of a Gaussian matrix, signs fixed).
Matrix random_orthogonal(Index n, Rng& rng);

}  // namespace madmm
