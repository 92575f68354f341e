#include "mfg/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "mfg/errors.hpp"
#include "mfg/vectorize.hpp"

namespace mfg {

namespace {

// Householder reduction to upper Hessenberg form, accumulating the orthogonal
// similarity into z when requested.
void hessenberg(Matrix& h, Matrix* z) {
    const std::size_t n = h.rows();
    if (z) *z = Matrix::identity(n);
    if (n < 3) return;
    Vector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm += h(i, k) * h(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = h(k + 1, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = h(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // left: h = (I - beta v v') h
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
        }
        // right: h = h (I - beta v v')
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
        }
        if (z) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = k + 1; j < n; ++j) s += (*z)(i, j) * v[j];
                s *= beta;
                for (std::size_t j = k + 1; j < n; ++j) (*z)(i, j) -= s * v[j];
            }
        }
        h(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (the classic hqr2
// scheme with the usual exceptional shifts), deflating to real Schur form.
// Real 2x2 tails are split by a Givens rotation so only complex pairs remain
// as 2x2 diagonal blocks. Eigenvalues are reported in diagonal order.
void francis_qr(Matrix& h, Matrix* zmat, std::vector<std::complex<double>>& eig) {
    const int nn = static_cast<int>(h.rows());
    eig.assign(nn, {0.0, 0.0});
    if (nn == 0) return;
    const int low = 0, high = nn - 1;
    const double eps = std::numeric_limits<double>::epsilon();
    double exshift = 0.0;
    double p = 0, q = 0, r = 0, s = 0, z = 0, w, x, y;

    double norm = 0.0;
    for (int i = 0; i < nn; ++i)
        for (int j = std::max(i - 1, 0); j < nn; ++j) norm += std::abs(h(i, j));

    int n = nn - 1;
    int iter = 0;
    int total_iter = 0;
    while (n >= low) {
        // find a small subdiagonal element
        int l = n;
        while (l > low) {
            s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
            if (s == 0.0) s = norm;
            if (std::abs(h(l, l - 1)) < eps * s) break;
            --l;
        }

        if (l == n) {  // one root found
            if (n > low) h(n, n - 1) = 0.0;
            h(n, n) += exshift;
            eig[n] = {h(n, n), 0.0};
            --n;
            iter = 0;
        } else if (l == n - 1) {  // two roots found
            if (n - 1 > low) h(n - 1, n - 2) = 0.0;
            w = h(n, n - 1) * h(n - 1, n);
            p = (h(n - 1, n - 1) - h(n, n)) / 2.0;
            q = p * p + w;
            z = std::sqrt(std::abs(q));
            h(n, n) += exshift;
            h(n - 1, n - 1) += exshift;
            x = h(n, n);
            if (q >= 0) {  // real pair: split the block
                z = (p >= 0) ? p + z : p - z;
                eig[n - 1] = {x + z, 0.0};
                eig[n] = (z != 0.0) ? std::complex<double>(x - w / z, 0.0) : eig[n - 1];
                x = h(n, n - 1);
                s = std::abs(x) + std::abs(z);
                p = x / s;
                q = z / s;
                r = std::sqrt(p * p + q * q);
                p /= r;
                q /= r;
                for (int j = n - 1; j < nn; ++j) {
                    z = h(n - 1, j);
                    h(n - 1, j) = q * z + p * h(n, j);
                    h(n, j) = q * h(n, j) - p * z;
                }
                for (int i = 0; i <= n; ++i) {
                    z = h(i, n - 1);
                    h(i, n - 1) = q * z + p * h(i, n);
                    h(i, n) = q * h(i, n) - p * z;
                }
                if (zmat) {
                    for (int i = low; i <= high; ++i) {
                        z = (*zmat)(i, n - 1);
                        (*zmat)(i, n - 1) = q * z + p * (*zmat)(i, n);
                        (*zmat)(i, n) = q * (*zmat)(i, n) - p * z;
                    }
                }
                h(n, n - 1) = 0.0;
            } else {  // complex pair
                eig[n - 1] = {x + p, z};
                eig[n] = {x + p, -z};
            }
            n -= 2;
            iter = 0;
        } else {  // no convergence yet: do a QR step
            x = h(n, n);
            y = 0.0;
            w = 0.0;
            if (l < n) {
                y = h(n - 1, n - 1);
                w = h(n, n - 1) * h(n - 1, n);
            }
            if (iter == 10 || iter == 20) {  // Wilkinson's ad hoc shift
                exshift += x;
                for (int i = low; i <= n; ++i) h(i, i) -= x;
                s = std::abs(h(n, n - 1)) + std::abs(h(n - 1, n - 2));
                x = y = 0.75 * s;
                w = -0.4375 * s * s;
            }
            ++iter;
            if (++total_iter > 40 * nn) throw ConvergenceError("francis qr iteration did not converge");
            if (iter == 30) {
                s = (y - x) / 2.0;
                s = s * s + w;
                if (s > 0) {
                    s = std::sqrt(s);
                    if (y < x) s = -s;
                    s = x - w / ((y - x) / 2.0 + s);
                    for (int i = low; i <= n; ++i) h(i, i) -= s;
                    exshift += s;
                    x = y = w = 0.964;
                }
            }

            // look for two consecutive small subdiagonal elements
            int m = n - 2;
            while (m >= l) {
                z = h(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
                q = h(m + 1, m + 1) - z - r - s;
                r = h(m + 2, m + 1);
                s = std::abs(p) + std::abs(q) + std::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if (m == l) break;
                if (std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r)) <
                    eps * (std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) + std::abs(h(m + 1, m + 1)))))
                    break;
                --m;
            }
            for (int i = m + 2; i <= n; ++i) {
                h(i, i - 2) = 0.0;
                if (i > m + 2) h(i, i - 3) = 0.0;
            }

            // double QR step on rows l..n, columns m..n
            for (int k = m; k <= n - 1; ++k) {
                const bool notlast = (k != n - 1);
                if (k != m) {
                    p = h(k, k - 1);
                    q = h(k + 1, k - 1);
                    r = notlast ? h(k + 2, k - 1) : 0.0;
                    x = std::abs(p) + std::abs(q) + std::abs(r);
                    if (x == 0.0) continue;
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = std::sqrt(p * p + q * q + r * r);
                if (p < 0) s = -s;
                if (s != 0.0) {
                    if (k != m)
                        h(k, k - 1) = -s * x;
                    else if (l != m)
                        h(k, k - 1) = -h(k, k - 1);
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for (int j = k; j < nn; ++j) {  // row modification
                        p = h(k, j) + q * h(k + 1, j);
                        if (notlast) {
                            p += r * h(k + 2, j);
                            h(k + 2, j) -= p * z;
                        }
                        h(k, j) -= p * x;
                        h(k + 1, j) -= p * y;
                    }
                    for (int i = 0; i <= std::min(n, k + 3); ++i) {  // column modification
                        p = x * h(i, k) + y * h(i, k + 1);
                        if (notlast) {
                            p += z * h(i, k + 2);
                            h(i, k + 2) -= p * r;
                        }
                        h(i, k) -= p;
                        h(i, k + 1) -= p * q;
                    }
                    if (zmat) {
                        for (int i = low; i <= high; ++i) {
                            p = x * (*zmat)(i, k) + y * (*zmat)(i, k + 1);
                            if (notlast) {
                                p += z * (*zmat)(i, k + 2);
                                (*zmat)(i, k + 2) -= p * r;
                            }
                            (*zmat)(i, k) -= p;
                            (*zmat)(i, k + 1) -= p * q;
                        }
                    }
                }
            }
        }
    }

    // clean the strictly-lower part outside the retained 2x2 blocks
    for (int i = 2; i < nn; ++i)
        for (int j = 0; j <= i - 2; ++j) h(i, j) = 0.0;
}

std::complex<double> block2_eig(const Matrix& t, std::size_t i) {
    // upper eigenvalue of the 2x2 block at (i, i); blocks kept by francis_qr
    // always carry complex pairs
    const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
    const double re = (a + d) / 2.0;
    const double disc = (a - d) * (a - d) / 4.0 + b * c;
    const double im = std::sqrt(std::max(0.0, -disc));
    return {re, im};
}

void refresh_eigenvalues(SchurResult& s) {
    const std::size_t n = s.t.rows();
    s.eigenvalues.assign(n, {0.0, 0.0});
    for (std::size_t i = 0; i < n;) {
        if (i + 1 < n && s.t(i + 1, i) != 0.0) {
            const auto lam = block2_eig(s.t, i);
            s.eigenvalues[i] = lam;
            s.eigenvalues[i + 1] = std::conj(lam);
            i += 2;
        } else {
            s.eigenvalues[i] = {s.t(i, i), 0.0};
            i += 1;
        }
    }
}

// full QR of a (p+q) x q matrix, returning the square orthogonal factor
Matrix qr_full_q(const Matrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    Matrix r = m;
    Matrix qt = Matrix::identity(rows);  // accumulates the reflections applied to I
    Vector v(rows);
    for (std::size_t k = 0; k < cols; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < rows; ++i) norm += r(i, k) * r(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = r(k, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < rows; ++i) {
            v[i] = r(i, k);
            if (i == k) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        for (std::size_t j = k; j < cols; ++j) {
            double sum = 0.0;
            for (std::size_t i = k; i < rows; ++i) sum += v[i] * r(i, j);
            sum *= beta;
            for (std::size_t i = k; i < rows; ++i) r(i, j) -= sum * v[i];
        }
        for (std::size_t j = 0; j < rows; ++j) {
            double sum = 0.0;
            for (std::size_t i = k; i < rows; ++i) sum += v[i] * qt(i, j);
            sum *= beta;
            for (std::size_t i = k; i < rows; ++i) qt(i, j) -= sum * v[i];
        }
    }
    return qt.transpose();  // q = (product of reflections)' applied to identity
}

// swap the adjacent diagonal blocks at `i` (sizes p then q) of the Schur form
void swap_blocks(SchurResult& s, std::size_t i, std::size_t p, std::size_t q) {
    const std::size_t n = s.t.rows();
    const Matrix t11 = s.t.block(i, i, p, p);
    const Matrix t22 = s.t.block(i + p, i + p, q, q);
    const Matrix t12 = s.t.block(i, i + p, p, q);

    // solve t11 x - x t22 = t12  (spectra are disjoint across the swap)
    Matrix m = kron(Matrix::identity(q), t11) - kron(t22.transpose(), Matrix::identity(p));
    Vector xv;
    try {
        xv = solve_lu(m, col(t12));
    } catch (const SingularMatrixError&) {
        throw NotCSplittingError("schur reorder: eigenvalues too close to swap");
    }
    const Matrix x = uncol(xv, p, q);

    Matrix stacked(p + q, q);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < q; ++b) stacked(a, b) = -x(a, b);
    for (std::size_t b = 0; b < q; ++b) stacked(p + b, b) = 1.0;
    const Matrix qs = qr_full_q(stacked);

    Matrix u = Matrix::identity(n);
    u.set_block(i, i, qs);
    s.t = u.transpose() * s.t * u;
    s.z = s.z * u;
    // the (2,1) block of the swapped pair is zero in exact arithmetic
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < q; ++b) s.t(i + q + a, i + b) = 0.0;
}

}  // namespace

SchurResult real_schur(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("schur of non-square matrix");
    SchurResult s;
    s.t = a;
    hessenberg(s.t, &s.z);
    francis_qr(s.t, &s.z, s.eigenvalues);
    refresh_eigenvalues(s);  // diagonal order, from the final block structure
    return s;
}

void order_schur(SchurResult& s, const std::vector<bool>& select) {
    const std::size_t n = s.t.rows();
    if (select.size() != n) throw DimensionError("order_schur: selector length mismatch");

    // block structure: (start, size, selected)
    struct Block {
        std::size_t start, size;
        bool sel;
    };
    auto discover = [&](const std::vector<bool>& sel_by_index) {
        std::vector<Block> blocks;
        for (std::size_t i = 0; i < n;) {
            const std::size_t sz = (i + 1 < n && s.t(i + 1, i) != 0.0) ? 2 : 1;
            if (sz == 2 && sel_by_index[i] != sel_by_index[i + 1])
                throw DimensionError("order_schur: selector splits a complex pair");
            blocks.push_back({i, sz, sel_by_index[i]});
            i += sz;
        }
        return blocks;
    };

    std::vector<Block> blocks = discover(select);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t j = 0; j + 1 < blocks.size(); ++j) {
            if (!blocks[j].sel && blocks[j + 1].sel) {
                swap_blocks(s, blocks[j].start, blocks[j].size, blocks[j + 1].size);
                std::swap(blocks[j].sel, blocks[j + 1].sel);
                std::swap(blocks[j].size, blocks[j + 1].size);
                blocks[j + 1].start = blocks[j].start + blocks[j].size;
                changed = true;
            }
        }
    }
    refresh_eigenvalues(s);
}

SpectralReport spectral(const Matrix& m, double shift) {
    if (m.rows() != m.cols()) throw DimensionError("spectral of non-square matrix");
    Matrix h = m;
    hessenberg(h, nullptr);
    SpectralReport rep;
    francis_qr(h, nullptr, rep.eigenvalues);
    rep.stability_margin = -std::numeric_limits<double>::infinity();
    for (const auto& lam : rep.eigenvalues) rep.stability_margin = std::max(rep.stability_margin, lam.real());
    if (rep.eigenvalues.empty()) rep.stability_margin = 0.0;
    rep.hurwitz = rep.stability_margin < shift - kHurwitzTol;
    return rep;
}

}  // namespace mfg
