#pragma once

#include <complex>
#include <vector>

#include "mfg/matrix.hpp"

namespace mfg {

struct SpectralReport {
    std::vector<std::complex<double>> eigenvalues;
    double stability_margin = 0.0;  // max over eigenvalues of Re(lambda)
    bool hurwitz = false;           // stability_margin < shift - kHurwitzTol
};

// everything closer to the axis than this counts as "on" it
inline constexpr double kHurwitzTol = 1e-10;

// Eigenvalues of a general real square matrix (Hessenberg reduction followed
// by Francis double-shift QR). `shift` moves the Hurwitz test line: the report
// says hurwitz iff max Re(lambda) < shift - kHurwitzTol.
SpectralReport spectral(const Matrix& m, double shift = 0.0);

// Real Schur decomposition a = z t z' with t quasi-upper-triangular
// (1x1 blocks for real eigenvalues, 2x2 blocks for complex pairs)
// and z orthogonal.
struct SchurResult {
    Matrix t;
    Matrix z;
    std::vector<std::complex<double>> eigenvalues;  // in diagonal order
};

SchurResult real_schur(const Matrix& a);

// Reorder the Schur form so that eigenvalues flagged by `select` (indexed in
// current diagonal order; both members of a complex pair must agree) occupy
// the leading positions. Adjacent block swaps via the direct Sylvester-based
// method; eigenvalues list is refreshed.
void order_schur(SchurResult& s, const std::vector<bool>& select);

}  // namespace mfg
