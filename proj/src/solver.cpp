#include "madmm/solver.hpp"

#include "madmm/conditions.hpp"
#include "madmm/diagnostics.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace madmm {

const char* to_string(Backend b) {
  switch (b) {
    case Backend::automatic: return "auto";
    case Backend::prox_identity: return "prox_identity";
    case Backend::linear_solve: return "linear_solve";
  }
  return "?";
}

Backend backend_from_string(const std::string& name) {
  if (name == "auto") return Backend::automatic;
  if (name == "prox_identity") return Backend::prox_identity;
  if (name == "linear_solve") return Backend::linear_solve;
  throw Error(ErrorKind::schema, "unknown backend '" + name + "'");
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

namespace {

SelfAdjointOperator block_base(const CoupledProblem& prob, double sigma,
                               Block block) {
  if (block == Block::u) {
    return SelfAdjointOperator::gram(prob.a, sigma) + prob.phi.q_lower.q11 +
           prob.phi.d1;
  }
  return SelfAdjointOperator::gram(prob.b, sigma) + prob.phi.q_lower.q22 +
         prob.phi.d2;
}

void require_psd(const SelfAdjointOperator& op, const char* name) {
  const SpectrumSummary s = spectrum(op);
  if (classify(s.lambda_min, s.lambda_max) == Definiteness::indefinite) {
    std::ostringstream os;
    os << name << " must be positive semidefinite (lambda_min "
       << s.lambda_min << ")";
    throw Error(ErrorKind::configuration, os.str());
  }
}

// alpha when m = alpha I up to round-off, NaN otherwise.
double scaled_identity_factor(const Matrix& m) {
  const double alpha = m.diagonal().mean();
  const double scale = std::max(1.0, std::abs(alpha));
  const double off = (m - alpha * Matrix::Identity(m.rows(), m.cols()))
                         .cwiseAbs()
                         .maxCoeff();
  return off <= 1e-10 * scale ? alpha : std::numeric_limits<double>::quiet_NaN();
}

bool finite_and_bounded(const IterateState& s, double cap) {
  const double n2 = s.u.squaredNorm() + s.v.squaredNorm() + s.x.squaredNorm();
  return std::isfinite(n2) && std::sqrt(n2) <= cap && s.grad.allFinite();
}

}  // namespace

SelfAdjointOperator prox_identity_semi_proximal(const CoupledProblem& prob,
                                                double sigma, Block block,
                                                double shift) {
  if (!(shift >= 0.0))
    throw Error(ErrorKind::configuration, "prox-identity shift must be >= 0");
  const Matrix base = materialize(block_base(prob, sigma, block));
  const double alpha = spectrum(base).lambda_max + shift;
  Matrix s = alpha * Matrix::Identity(base.rows(), base.cols()) - base;
  return SelfAdjointOperator::dense(0.5 * (s + s.transpose()), true,
                                    block == Block::u ? "S:auto" : "T:auto");
}

// ------------------------------------------------------------------ ergodic

ErgodicAccumulator::ErgodicAccumulator(Index u_dim, Index v_dim, Index x_dim)
    : su_(Vector::Zero(u_dim)), sv_(Vector::Zero(v_dim)), sx_(Vector::Zero(x_dim)) {}

void ErgodicAccumulator::add(const IterateState& s) {
  if (s.k < 2) return;
  if (su_.size() == 0 && count_ == 0) {
    su_ = Vector::Zero(s.u.size());
    sv_ = Vector::Zero(s.v.size());
    sx_ = Vector::Zero(s.x.size());
  }
  su_ += s.u;
  sv_ += s.v;
  sx_ += s.x_tilde;
  ++count_;
}

Vector ErgodicAccumulator::u_mean() const {
  if (count_ == 0) throw Error(ErrorKind::usage, "ergodic average of an empty history");
  return su_ / count_;
}
Vector ErgodicAccumulator::v_mean() const {
  if (count_ == 0) throw Error(ErrorKind::usage, "ergodic average of an empty history");
  return sv_ / count_;
}
Vector ErgodicAccumulator::x_mean() const {
  if (count_ == 0) throw Error(ErrorKind::usage, "ergodic average of an empty history");
  return sx_ / count_;
}

// ------------------------------------------------------------------- solver

struct Solver::Factor {
  Eigen::LLT<Matrix> llt;
  Vector linear;  // b of the quadratic term; zero for p = 0
  // Non-empty when the system is singular; raised on first use so that the
  // condition checks can still inspect the configuration.
  std::string failure;

  Vector solve(const Vector& rhs) const {
    if (!failure.empty()) throw Error(ErrorKind::configuration, failure);
    return llt.solve(rhs - linear);
  }
};

Solver::Solver(CoupledProblem prob, SolverConfig cfg)
    : prob_(std::move(prob)),
      cfg_(std::move(cfg)),
      s_(cfg_.s_op ? *cfg_.s_op : SelfAdjointOperator::zero(prob_.u_dim())),
      t_(cfg_.t_op ? *cfg_.t_op : SelfAdjointOperator::zero(prob_.v_dim())) {
  prob_.validate();
  if (!(cfg_.sigma > 0.0) || !std::isfinite(cfg_.sigma))
    throw Error(ErrorKind::configuration, "sigma must be positive");
  if (!(cfg_.tau > 0.0 && cfg_.tau < kGoldenRatio))
    throw Error(ErrorKind::configuration, "tau must lie in (0, (1+sqrt5)/2)");
  if (cfg_.max_iters < 0)
    throw Error(ErrorKind::configuration, "max_iters must be >= 0");
  if (!(cfg_.kkt_tol >= 0.0))
    throw Error(ErrorKind::configuration, "kkt_tol must be >= 0");
  if (cfg_.record_every < 0)
    throw Error(ErrorKind::configuration, "record_every must be >= 0");
  require_dim(s_.dim(), prob_.u_dim(), "S dimension");
  require_dim(t_.dim(), prob_.v_dim(), "T dimension");
  require_psd(s_, "S");
  require_psd(t_, "T");

  m_u_ = materialize(block_base(prob_, cfg_.sigma, Block::u) + s_);
  m_v_ = materialize(block_base(prob_, cfg_.sigma, Block::v) + t_);

  auto resolve = [](Backend requested, const Matrix& m, const ProxTerm& term,
                    const char* block, double& alpha,
                    std::shared_ptr<const Factor>& factor) {
    const double a = scaled_identity_factor(m);
    Backend b = requested;
    if (b == Backend::automatic) {
      if (std::isfinite(a) && a > 0.0) {
        b = Backend::prox_identity;
      } else if (term.is_quadratic()) {
        b = Backend::linear_solve;
      } else {
        throw Error(ErrorKind::configuration,
                    std::string("no exact backend for the ") + block +
                        "-subproblem: operator is not a scaled identity and the "
                        "nonsmooth term is not quadratic");
      }
    }
    if (b == Backend::prox_identity) {
      if (!(std::isfinite(a) && a > 0.0))
        throw Error(ErrorKind::configuration,
                    std::string("prox_identity needs the ") + block +
                        "-subproblem operator to be a positive multiple of the identity");
      alpha = a;
    } else {
      if (!term.is_quadratic())
        throw Error(ErrorKind::configuration,
                    std::string("linear_solve needs a zero or quadratic ") +
                        (block[0] == 'u' ? "p" : "q"));
      auto f = std::make_shared<Factor>();
      Matrix lhs = m;
      if (term.kind() == ProxTerm::Kind::quadratic) lhs += term.hessian();
      f->llt.compute(lhs);
      if (f->llt.info() != Eigen::Success)
        f->failure = std::string("the ") + block + "-subproblem system is not positive definite";
      f->linear = term.kind() == ProxTerm::Kind::quadratic
                      ? term.linear()
                      : Vector(Vector::Zero(m.rows()));
      factor = std::move(f);
    }
    return b;
  };
  u_backend_ = resolve(cfg_.u_backend, m_u_, prob_.p, "u", alpha_u_, u_factor_);
  v_backend_ = resolve(cfg_.v_backend, m_v_, prob_.q, "v", alpha_v_, v_factor_);
}

IterateState Solver::make_state(int k, Vector u, Vector v, Vector x) const {
  require_dim(u.size(), prob_.u_dim(), "initial u");
  require_dim(v.size(), prob_.v_dim(), "initial v");
  require_dim(x.size(), prob_.x_dim(), "initial x");
  IterateState s;
  s.k = k;
  s.residual = prob_.residual(u, v);
  s.grad = prob_.phi.gradient(join(u, v));
  s.u = std::move(u);
  s.v = std::move(v);
  s.x_tilde = x;
  s.x = std::move(x);
  return s;
}

IterateState Solver::zero_state() const {
  return make_state(0, Vector::Zero(prob_.u_dim()), Vector::Zero(prob_.v_dim()),
                    Vector::Zero(prob_.x_dim()));
}

Vector Solver::u_gradient(const IterateState& s) const {
  const Vector r = prob_.residual(s.u, s.v);
  return s.grad.head(prob_.u_dim()) + prob_.a.apply(s.x) +
         cfg_.sigma * prob_.a.apply(r);
}

Vector Solver::v_gradient(const IterateState& s, const Vector& u_next) const {
  const Vector r_mid = prob_.residual(u_next, s.v);
  return s.grad.tail(prob_.v_dim()) + prob_.b.apply(s.x) +
         cfg_.sigma * prob_.b.apply(r_mid) +
         prob_.phi.q_lower.q12.apply_adjoint(u_next - s.u);
}

Vector Solver::u_step(const IterateState& s) const {
  const Vector g = u_gradient(s);
  if (u_backend_ == Backend::prox_identity)
    return prob_.p.prox(s.u - g / alpha_u_, alpha_u_);
  return u_factor_->solve(m_u_ * s.u - g);
}

Vector Solver::v_step(const IterateState& s, const Vector& u_next) const {
  const Vector g = v_gradient(s, u_next);
  if (v_backend_ == Backend::prox_identity)
    return prob_.q.prox(s.v - g / alpha_v_, alpha_v_);
  return v_factor_->solve(m_v_ * s.v - g);
}

Vector Solver::multiplier_step(const Vector& x, const Vector& u_next,
                               const Vector& v_next) const {
  return x + cfg_.tau * cfg_.sigma * prob_.residual(u_next, v_next);
}

IterateState Solver::step(const IterateState& s) const {
  IterateState n;
  n.k = s.k + 1;
  n.u = u_step(s);
  n.v = v_step(s, n.u);
  n.residual = prob_.residual(n.u, n.v);
  n.x = s.x + cfg_.tau * cfg_.sigma * n.residual;
  n.x_tilde = s.x + cfg_.sigma * n.residual;
  n.grad = prob_.phi.gradient(n.w());
  return n;
}

double Solver::u_step_residual(const IterateState& s, const Vector& u_next) const {
  const auto& phi = prob_.phi;
  const Vector du = u_next - s.u;
  const Vector rest = s.grad.head(prob_.u_dim()) + prob_.a.apply(s.x) +
                      cfg_.sigma * prob_.a.apply(prob_.residual(u_next, s.v)) +
                      phi.q_lower.q11.apply(du) + phi.d1.apply(du) + s_.apply(du);
  return prob_.p.subdifferential_distance(u_next, -rest) / (1.0 + u_next.norm());
}

double Solver::v_step_residual(const IterateState& s, const Vector& u_next,
                               const Vector& v_next) const {
  const auto& phi = prob_.phi;
  const Vector dv = v_next - s.v;
  const Vector rest = s.grad.tail(prob_.v_dim()) + prob_.b.apply(s.x) +
                      cfg_.sigma * prob_.b.apply(prob_.residual(u_next, v_next)) +
                      phi.q_lower.q22.apply(dv) + phi.d2.apply(dv) + t_.apply(dv) +
                      phi.q_lower.q12.apply_adjoint(u_next - s.u);
  return prob_.q.subdifferential_distance(v_next, -rest) / (1.0 + v_next.norm());
}

int Solver::stride() const {
  if (cfg_.record_every > 0) return cfg_.record_every;
  return prob_.u_dim() + prob_.v_dim() + prob_.x_dim() <= 200 ? 1 : 10;
}

RunResult Solver::run(const IterateState& init, const RunOptions& options) const {
  if (!cfg_.force) {
    const ConvergenceVerdict verdict = convergence_conditions(*this);
    if (!verdict.passed)
      throw Error(ErrorKind::conditions_failed,
                  "convergence conditions do not verify: " + verdict.summary +
                      " (set force to override)");
  }
  require_dim(init.u.size(), prob_.u_dim(), "initial u");
  require_dim(init.v.size(), prob_.v_dim(), "initial v");
  require_dim(init.x.size(), prob_.x_dim(), "initial x");

  RunResult out;
  out.history.stride = stride();
  out.history.has_reference = options.reference.has_value();
  out.ergodic = ErgodicAccumulator(prob_.u_dim(), prob_.v_dim(), prob_.x_dim());
  if (options.keep_states) out.history.states.push_back(init);
  const ReferencePoint* ref = options.reference ? &*options.reference : nullptr;

  IterateState curr = init;
  for (int it = 1; it <= cfg_.max_iters; ++it) {
    IterateState next = step(curr);
    if (!finite_and_bounded(next, cfg_.divergence_cap)) {
      out.status = RunStatus::diverged;
      out.diverged_at = next.k;
      std::ostringstream os;
      os << "iterate norm exceeded " << cfg_.divergence_cap
         << " or became non-finite at iteration " << next.k;
      out.message = os.str();
      break;
    }
    out.max_u_step_residual =
        std::max(out.max_u_step_residual, u_step_residual(curr, next.u));
    out.max_v_step_residual =
        std::max(out.max_v_step_residual, v_step_residual(curr, next.u, next.v));

    const KKTWitness witness = kkt_witness(*this, curr, next);
    out.min_bound_sq = std::min(out.min_bound_sq, witness.bound_sq);
    ++out.iterations;

    const bool last_possible = it == cfg_.max_iters;
    const bool done = options.stop_on_tol && std::sqrt(witness.bound_sq) <= cfg_.kkt_tol;
    const bool record = next.k % out.history.stride == 0 || last_possible || done;

    out.ergodic.add(next);
    if (record) {
      const LyapunovRecord lyap = lyapunov(*this, curr, next, ref);
      HistoryRow row;
      row.k = next.k;
      row.feas = next.residual.norm();
      row.kkt_bound_sq = witness.bound_sq;
      row.theta = lyap.theta;
      row.xi = lyap.xi;
      if (lyap.phi) row.phi = *lyap.phi;
      if (lyap.psi) row.psi = *lyap.psi;
      row.objective = objective(prob_, next.u, next.v);
      if (out.ergodic.count() > 0) {
        row.erg_feas =
            prob_.residual(out.ergodic.u_mean(), out.ergodic.v_mean()).norm();
      }
      out.history.rows.push_back(row);
      if (options.keep_states) out.history.states.push_back(next);
    }
    curr = std::move(next);
    if (done) {
      out.status = RunStatus::converged;
      break;
    }
  }
  if (out.status != RunStatus::diverged && out.status != RunStatus::converged)
    out.status = RunStatus::max_iters;
  out.final_state = curr;
  return out;
}

}  // namespace madmm
