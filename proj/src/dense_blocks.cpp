#include "dense_blocks.hpp"

#include <Eigen/Eigenvalues>

namespace madmm::detail {

DenseBlocks dense_blocks(const Solver& solver, Index cap) {
  const auto& prob = solver.problem();
  DenseBlocks b;
  b.n = prob.u_dim();
  b.m = prob.v_dim();
  b.q = materialize(prob.phi.q(), cap);
  b.q11 = b.q.topLeftCorner(b.n, b.n);
  b.q22 = b.q.bottomRightCorner(b.m, b.m);
  b.q12 = b.q.topRightCorner(b.n, b.m);
  b.d1 = materialize(prob.phi.d1, cap);
  b.d2 = materialize(prob.phi.d2, cap);
  b.s = materialize(solver.s_op(), cap);
  b.t = materialize(solver.t_op(), cap);
  const Matrix a = materialize(prob.a, cap);
  const Matrix bm = materialize(prob.b, cap);
  b.aa = a * a.transpose();
  b.bb = bm * bm.transpose();
  return b;
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Matrix psd_sqrt(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace madmm::detail
