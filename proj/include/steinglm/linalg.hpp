#ifndef STEINGLM_LINALG_HPP
#define STEINGLM_LINALG_HPP

#include <vector>

#include "steinglm/matrix.hpp"

namespace steinglm {

/// Eigendecomposition of a symmetric matrix. Eigenvalues sorted by
/// descending |lambda| (ties keep diagonal order); eigenvector j is
/// column j of `vectors`, sign-fixed so its largest-|entry| component
/// is non-negative.
struct EigenResult {
  std::vector<double> values;
  DenseMatrix vectors;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Input is symmetrized as (A + A^T)/2 before iterating; sweeps stop when
/// the off-diagonal Frobenius norm drops below 1e-12 * max(1, ||A||_F),
/// or after 100 sweeps.
EigenResult sym_eig(const DenseMatrix& a);

/// Orthonormal basis for the column span of g (d x k, d >= k), via
/// Householder QR. Columns follow the same sign convention as sym_eig.
/// Throws on d < k or (numerically) rank-deficient input.
DenseMatrix qr_orthonormal(const DenseMatrix& g);

/// Solve A x = b for symmetric positive-definite A (Cholesky).
/// Reports the smallest pivot on failure.
std::vector<double> solve_spd(const DenseMatrix& a, const std::vector<double>& b);

}  // namespace steinglm

#endif
