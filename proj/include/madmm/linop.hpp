#pragma once

#include "madmm/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace madmm {

inline constexpr Index kDefaultMaterializeCap = 2000;

/// A linear map M: X -> Y given by its action and the action of its adjoint.
/// Dense-backed maps keep the matrix so materialization is free.
class LinearMap {
 public:
  using Action = std::function<Vector(const Vector&)>;

  LinearMap(Index in_dim, Index out_dim, Action apply, Action apply_adjoint,
            std::string label = {});

  /// `m` has out_dim rows and in_dim columns.
  static LinearMap dense(Matrix m, std::string label = {});
  static LinearMap zero(Index in_dim, Index out_dim);
  static LinearMap identity(Index dim);

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  const std::string& label() const { return label_; }

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;
  LinearMap adjoint() const;

  /// Non-null exactly when the map was built from a matrix.
  const Matrix* dense_backing() const { return dense_.get(); }

 private:
  Index in_dim_;
  Index out_dim_;
  Action apply_;
  Action apply_adjoint_;
  std::shared_ptr<const Matrix> dense_;
  std::string label_;
};

/// A self-adjoint map G on a space of dimension `dim`.
class SelfAdjointOperator {
 public:
  using Action = std::function<Vector(const Vector&)>;

  SelfAdjointOperator(Index dim, Action apply, bool psd = true,
                      std::string label = {});

  /// Symmetric part of `m` is used; asymmetry beyond round-off is an error.
  static SelfAdjointOperator dense(Matrix m, bool psd = true,
                                   std::string label = {});
  static SelfAdjointOperator zero(Index dim);
  static SelfAdjointOperator identity(Index dim, double scale = 1.0);
  static SelfAdjointOperator diagonal(const Vector& d);
  /// scale * M M^*, a map on M's output space.
  static SelfAdjointOperator gram(const LinearMap& m, double scale = 1.0);

  Index dim() const { return dim_; }
  bool psd() const { return psd_; }
  const std::string& label() const { return label_; }
  Vector apply(const Vector& x) const;
  const Matrix* dense_backing() const { return dense_.get(); }

  SelfAdjointOperator scaled(double s) const;
  friend SelfAdjointOperator operator+(const SelfAdjointOperator& a,
                                       const SelfAdjointOperator& b);
  friend SelfAdjointOperator operator-(const SelfAdjointOperator& a,
                                       const SelfAdjointOperator& b);

 private:
  Index dim_;
  Action apply_;
  bool psd_;
  std::shared_ptr<const Matrix> dense_;
  std::string label_;
};

/// Diag(a, b) on the product space.
SelfAdjointOperator block_diagonal(const SelfAdjointOperator& a,
                                   const SelfAdjointOperator& b);

/// The 2x2 block operator [q11 q12; q12^* q22] on U x V.
struct BlockCurvature {
  SelfAdjointOperator q11;
  SelfAdjointOperator q22;
  LinearMap q12;  ///< V -> U

  Index u_dim() const { return q11.dim(); }
  Index v_dim() const { return q22.dim(); }
  SelfAdjointOperator assembled() const;
  static BlockCurvature from_dense(const Matrix& full, Index u_dim);
  static BlockCurvature zero(Index u_dim, Index v_dim);
};

/// ||x||_G^2 = <x, Gx>. Values in [-1e-12 ||x||^2, 0) are clamped to zero.
double seminorm_sq(const SelfAdjointOperator& g, const Vector& x);

Matrix materialize(const SelfAdjointOperator& op,
                   Index cap = kDefaultMaterializeCap);
Matrix materialize(const LinearMap& op, Index cap = kDefaultMaterializeCap);

struct SpectrumSummary {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Vector min_eigenvector;
};

/// Eigenvalue extremes of the symmetrized dense matrix.
SpectrumSummary spectrum(const Matrix& symmetric);
SpectrumSummary spectrum(const SelfAdjointOperator& op,
                         Index cap = kDefaultMaterializeCap);
double min_eigenvalue(const SelfAdjointOperator& op,
                      Index cap = kDefaultMaterializeCap);
double max_eigenvalue(const SelfAdjointOperator& op,
                      Index cap = kDefaultMaterializeCap);

/// Spectral norm (largest singular value).
double operator_norm(const LinearMap& m, Index cap = kDefaultMaterializeCap);
double operator_norm(const SelfAdjointOperator& g,
                     Index cap = kDefaultMaterializeCap);

/// Thresholds for definiteness verdicts, relative to max(1, lambda_max).
struct DefinitenessThresholds {
  double strict_rel = 1e-9;
  double semi_rel = 1e-9;
};

enum class Definiteness { strict_pd, psd, indefinite };

Definiteness classify(double lambda_min, double lambda_max,
                      const DefinitenessThresholds& t = {});

}  // namespace madmm
