#include "mfg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

// Householder QR in place: returns R in the upper triangle of `a`, applies the
// same reflections to `b`. Standard column-by-column elimination.
void qr_apply(Matrix& a, Vector& b) {
    const std::size_t m = a.rows(), n = a.cols();
    Vector v(m);
    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // column already zero below the diagonal
        const double alpha = a(k, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            v[i] = a(i, k);
            if (i == k) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (std::size_t i = k; i < m; ++i) a(i, j) -= s * v[i];
        }
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += v[i] * b[i];
        s *= beta;
        for (std::size_t i = k; i < m; ++i) b[i] -= s * v[i];
        a(k, k) = alpha;
        for (std::size_t i = k + 1; i < m; ++i) a(i, k) = 0.0;
    }
}

}  // namespace

LeastSquaresResult least_squares(const Matrix& a, const Vector& b, double rank_tol) {
    const std::size_t m = a.rows(), n = a.cols();
    if (b.size() != m) throw DimensionError("least_squares shape mismatch");
    if (m < n) throw DimensionError("least_squares: fewer rows than unknowns");

    const Vector sv = singular_values(a);
    const std::size_t rank = numerical_rank(sv, rank_tol);
    if (rank < n)
        throw RankDeficientError("least_squares: data matrix is rank deficient", rank, n);

    Matrix r = a;
    Vector qtb = b;
    qr_apply(r, qtb);

    LeastSquaresResult out;
    out.theta.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = qtb[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= r(ii, j) * out.theta[j];
        out.theta[ii] = s / r(ii, ii);
    }
    double res = 0.0;
    for (std::size_t i = n; i < m; ++i) res += qtb[i] * qtb[i];
    out.residual_norm = std::sqrt(res);
    out.condition = sv.back() > 0.0 ? sv.front() / sv.back() : std::numeric_limits<double>::infinity();
    return out;
}

Vector singular_values(const Matrix& a) {
    // one-sided Jacobi: orthogonalize column pairs of a working copy until all
    // inner products are negligible; singular values are the column norms
    const std::size_t m = a.rows(), n = a.cols();
    const bool tall = m >= n;
    Matrix w = tall ? a : a.transpose();
    const std::size_t rows = w.rows(), cols = w.cols();

    if (cols == 0) return {};
    if (w.max_abs() == 0.0) return Vector(cols, 0.0);

    const double tol = 1e-14;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
            }
        }
        if (!rotated) break;
        if (sweep == max_sweeps - 1) throw ConvergenceError("jacobi svd did not converge");
    }

    Vector sv(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += w(i, j) * w(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    if (!tall) sv.resize(std::min<std::size_t>(m, sv.size()));
    return sv;
}

std::size_t numerical_rank(const Vector& singulars, double rel_tol) {
    if (singulars.empty() || singulars.front() == 0.0) return 0;
    const double cutoff = rel_tol * singulars.front();
    std::size_t r = 0;
    for (double s : singulars)
        if (s > cutoff) ++r;
    return r;
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
    return numerical_rank(singular_values(a), rel_tol);
}

double spectral_norm(const Matrix& a) {
    const Vector sv = singular_values(a);
    return sv.empty() ? 0.0 : sv.front();
}

void sym_eig(const Matrix& a, Vector& eigenvalues, Matrix* v) {
    if (a.rows() != a.cols()) throw DimensionError("sym_eig of non-square matrix");
    const std::size_t n = a.rows();
    Matrix w = symmetrize(a);
    if (v) *v = Matrix::identity(n);

    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += w(i, j) * w(i, j);
        if (std::sqrt(off) <= 1e-15 * std::max(1.0, w.max_abs())) break;
        if (sweep == max_sweeps - 1) throw ConvergenceError("jacobi eigen iteration did not converge");

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (w(p, q) == 0.0) continue;
                const double zeta = (w(q, q) - w(p, p)) / (2.0 * w(p, q));
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wip = w(i, p), wiq = w(i, q);
                    w(i, p) = c * wip - s * wiq;
                    w(i, q) = s * wip + c * wiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double wpj = w(p, j), wqj = w(q, j);
                    w(p, j) = c * wpj - s * wqj;
                    w(q, j) = s * wpj + c * wqj;
                }
                if (v) {
                    for (std::size_t i = 0; i < n; ++i) {
                        const double vip = (*v)(i, p), viq = (*v)(i, q);
                        (*v)(i, p) = c * vip - s * viq;
                        (*v)(i, q) = s * vip + c * viq;
                    }
                }
            }
        }
    }

    eigenvalues.resize(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = w(i, i);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = diag[order[i]];
    if (v) {
        Matrix sorted(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) sorted(i, j) = (*v)(i, order[j]);
        *v = sorted;
    }
}

}  // namespace mfg
