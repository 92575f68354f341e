#pragma once

#include "mfg/matrix.hpp"

namespace mfg {

struct LeastSquaresResult {
    Vector theta;
    double residual_norm = 0.0;  // ||A theta - b||_2
    double condition = 0.0;      // sigma_max / sigma_min of A
};

// Overdetermined solve via Householder QR (never normal equations: the data
// matrices here are ill-conditioned enough that squaring them costs digits).
// Throws RankDeficientError when the numerical rank of A falls short of the
// column count at the given relative tolerance.
LeastSquaresResult least_squares(const Matrix& a, const Vector& b, double rank_tol = 1e-8);

// Singular values by one-sided Jacobi (descending). Chosen over a
// Golub-Kahan bidiagonalization for simplicity, and over eigenvalues of A'A
// to avoid squaring the condition number.
Vector singular_values(const Matrix& a);

std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-8);
std::size_t numerical_rank(const Vector& singulars, double rel_tol);

double spectral_norm(const Matrix& a);  // sigma_max

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues ascending; vectors (columns of v) optional.
void sym_eig(const Matrix& a, Vector& eigenvalues, Matrix* v = nullptr);

}  // namespace mfg
