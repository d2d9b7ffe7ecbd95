#pragma once

// Dense views of every operator entering the condition checks and the
// complexity constants. Desk-scale only: materialization honours the cap.

#include "madmm/solver.hpp"

namespace madmm::detail {

struct DenseBlocks {
  Index n = 0;
  Index m = 0;
  Matrix q, q11, q22, q12, d1, d2, s, t, aa, bb;
};

DenseBlocks dense_blocks(const Solver& solver, Index cap = kDefaultMaterializeCap);

Matrix block_diag(const Matrix& a, const Matrix& b);
Matrix psd_sqrt(const Matrix& g);
double spectral_norm(const Matrix& m);

}  // namespace madmm::detail
