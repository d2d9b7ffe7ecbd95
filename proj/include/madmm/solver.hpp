#pragma once

#include "madmm/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace madmm {

/// Upper end of the admissible step-length interval, (1 + sqrt 5) / 2.
inline const double kGoldenRatio = 0.5 * (1.0 + std::sqrt(5.0));

enum class Backend { automatic, prox_identity, linear_solve };

const char* to_string(Backend b);
Backend backend_from_string(const std::string& name);

struct SolverConfig {
  double sigma = 1.0;
  double tau = 1.0;
  std::optional<SelfAdjointOperator> s_op;  ///< nullopt means S = 0
  std::optional<SelfAdjointOperator> t_op;  ///< nullopt means T = 0
  Backend u_backend = Backend::automatic;
  Backend v_backend = Backend::automatic;
  int max_iters = 1000;
  /// Stop once sqrt(kkt bound_sq) <= kkt_tol.
  double kkt_tol = 1e-10;
  /// 0 selects 1 for total dimension <= 200 and 10 above.
  int record_every = 0;
  /// Run even when the convergence conditions do not verify.
  bool force = false;
  double divergence_cap = 1e12;
};

enum class Block { u, v };

/// S (or T) = alpha I - (sigma BB^* + Q_ii + D_i) with
/// alpha = lambda_max(sigma BB^* + Q_ii + D_i) + shift, which turns the block
/// subproblem into one prox evaluation.
SelfAdjointOperator prox_identity_semi_proximal(const CoupledProblem& prob,
                                                double sigma, Block block,
                                                double shift = 0.0);

/// One iterate. `x_tilde` is x^{k-1} + sigma r^k (equal to x at k = 0).
struct IterateState {
  int k = 0;
  Vector u;
  Vector v;
  Vector x;
  Vector residual;
  Vector grad;
  Vector x_tilde;

  Vector w() const { return join(u, v); }
};

/// A (typically high-accuracy) KKT point used by the Lyapunov diagnostics.
struct ReferencePoint {
  Vector u;
  Vector v;
  Vector x;
};

enum class RunStatus { converged, max_iters, diverged };
const char* to_string(RunStatus s);

struct HistoryRow {
  int k = 0;
  double feas = 0.0;          ///< |A^*u^k + B^*v^k - c|
  double kkt_bound_sq = 0.0;  ///< witness built from iterates k-1 and k
  double theta = 0.0;
  double xi = 0.0;
  double phi = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
  double objective = 0.0;
  /// Feasibility of the running mean of iterates 2..k; NaN at k = 1.
  double erg_feas = std::numeric_limits<double>::quiet_NaN();
};

/// Running sums of u^{i+1}, v^{i+1}, x~^{i+1} for i = 1..count.
class ErgodicAccumulator {
 public:
  ErgodicAccumulator() = default;
  ErgodicAccumulator(Index u_dim, Index v_dim, Index x_dim);

  /// Folds in an iterate with k >= 2; earlier iterates are ignored.
  void add(const IterateState& s);
  int count() const { return count_; }
  Vector u_mean() const;
  Vector v_mean() const;
  Vector x_mean() const;

 private:
  int count_ = 0;
  Vector su_, sv_, sx_;
};

struct RunHistory {
  int stride = 1;
  std::vector<HistoryRow> rows;
  /// Iterates 0, stride, 2 stride, ... and always the last one.
  std::vector<IterateState> states;
  bool has_reference = false;
};

struct RunResult {
  RunStatus status = RunStatus::max_iters;
  int iterations = 0;
  IterateState final_state;
  ErgodicAccumulator ergodic;
  RunHistory history;
  /// min over recorded k of kkt_bound_sq, tracked at every iterate.
  double min_bound_sq = kInfinity;
  /// Largest subproblem optimality residual divided by 1 + |block|.
  double max_u_step_residual = 0.0;
  double max_v_step_residual = 0.0;
  int diverged_at = -1;
  std::string message;
};

struct RunOptions {
  std::optional<ReferencePoint> reference;
  bool keep_states = true;
  /// When false the run always performs max_iters iterations.
  bool stop_on_tol = true;
};

/// The majorized ADMM iteration with exact block solves.
class Solver {
 public:
  /// Resolves the semi-proximal operators and backends. Throws a
  /// configuration error when a backend's precondition fails; a singular
  /// linear_solve system is reported by the first step instead.
  Solver(CoupledProblem prob, SolverConfig cfg);

  const CoupledProblem& problem() const { return prob_; }
  const SolverConfig& config() const { return cfg_; }
  double sigma() const { return cfg_.sigma; }
  double tau() const { return cfg_.tau; }
  const SelfAdjointOperator& s_op() const { return s_; }
  const SelfAdjointOperator& t_op() const { return t_; }
  Backend u_backend() const { return u_backend_; }
  Backend v_backend() const { return v_backend_; }
  /// sigma AA^* + Q11 + D1 + S and sigma BB^* + Q22 + D2 + T.
  const Matrix& m_u() const { return m_u_; }
  const Matrix& m_v() const { return m_v_; }

  IterateState make_state(int k, Vector u, Vector v, Vector x) const;
  IterateState zero_state() const;

  Vector u_step(const IterateState& s) const;
  Vector v_step(const IterateState& s, const Vector& u_next) const;
  /// x + tau sigma (A^*u_next + B^*v_next - c).
  Vector multiplier_step(const Vector& x, const Vector& u_next,
                         const Vector& v_next) const;
  IterateState step(const IterateState& s) const;

  /// dist(0, subproblem inclusion) / (1 + |u_next|).
  double u_step_residual(const IterateState& s, const Vector& u_next) const;
  double v_step_residual(const IterateState& s, const Vector& u_next,
                         const Vector& v_next) const;

  RunResult run(const IterateState& init, const RunOptions& options = {}) const;

 private:
  struct Factor;

  Vector u_gradient(const IterateState& s) const;
  Vector v_gradient(const IterateState& s, const Vector& u_next) const;
  int stride() const;

  CoupledProblem prob_;
  SolverConfig cfg_;
  SelfAdjointOperator s_;
  SelfAdjointOperator t_;
  Backend u_backend_ = Backend::automatic;
  Backend v_backend_ = Backend::automatic;
  Matrix m_u_;
  Matrix m_v_;
  double alpha_u_ = 0.0;
  double alpha_v_ = 0.0;
  std::shared_ptr<const Factor> u_factor_;
  std::shared_ptr<const Factor> v_factor_;
};

}  // namespace madmm
