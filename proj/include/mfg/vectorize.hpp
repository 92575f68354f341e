#pragma once

// Vectorization calculus used by the regression builders.
//
// Conventions (0-based in code, matching the usual 1-based definitions):
//   kron(x, y)[i*dim(y)+j]        = x_i * y_j
//   col(M)[j*rows+i]              = M(i,j)            (column stacking)
//   colm(P)[pos(i,j)]             = P(i,i) on the diagonal, 2*P(i,j) for i<j,
//                                   upper triangle walked row-major
//   colv(x)[pos(i,j)]             = x_i * x_j
//   compress_pairs(w)[pos(i,j)]   = (W_ij + W_ji)/2 reading w as the row-major
//                                   n x n matrix W (i.e. w = kron(x, y) => W = x y')
//
// Identities relied on elsewhere: u'Mv = kron(v, u)'col(M);
// for symmetric P, kron(x, x)'col(P) = colv(x)'colm(P) and more generally
// row'col(P) = compress_pairs(row)'colm(P).

#include <cstddef>

#include "mfg/matrix.hpp"

namespace mfg {

inline std::size_t packed_size(std::size_t n) { return n * (n + 1) / 2; }

// position of (i,j), i <= j, in the row-major upper-triangle walk
inline std::size_t packed_index(std::size_t n, std::size_t i, std::size_t j) {
    return i * n - i * (i + 1) / 2 + j;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            if (aij == 0.0) continue;
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q)
                    k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
    return k;
}

inline void kron_into(const double* x, std::size_t nx, const double* y, std::size_t ny, double* out) {
    for (std::size_t i = 0; i < nx; ++i) {
        const double xi = x[i];
        double* o = out + i * ny;
        for (std::size_t j = 0; j < ny; ++j) o[j] = xi * y[j];
    }
}

inline Vector kron(const Vector& x, const Vector& y) {
    Vector v(x.size() * y.size());
    kron_into(x.data(), x.size(), y.data(), y.size(), v.data());
    return v;
}

inline Vector col(const Matrix& m) {
    Vector v(m.rows() * m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) v[j * m.rows() + i] = m(i, j);
    return v;
}

inline Matrix uncol(const Vector& v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) throw DimensionError("uncol size mismatch");
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[j * rows + i];
    return m;
}

inline Vector colm(const Matrix& p, double sym_tol = 1e-9) {
    return SymMatrix::from_matrix(p, sym_tol).packed;
}

inline Matrix uncolm(const Vector& v, std::size_t n) {
    if (v.size() != packed_size(n)) throw DimensionError("uncolm size mismatch");
    SymMatrix s;
    s.dim = n;
    s.packed = v;
    return s.to_matrix();
}

inline Vector colv(const Vector& x) {
    const std::size_t n = x.size();
    Vector v;
    v.reserve(packed_size(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) v.push_back(x[i] * x[j]);
    return v;
}

inline void compress_pairs_into(const double* w, std::size_t n, double* out) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out[k++] = w[i * n + i];
        for (std::size_t j = i + 1; j < n; ++j) out[k++] = 0.5 * (w[i * n + j] + w[j * n + i]);
    }
}

inline Vector compress_pairs(const Vector& w, std::size_t n) {
    if (w.size() != n * n) throw DimensionError("compress_pairs size mismatch");
    Vector v(packed_size(n));
    compress_pairs_into(w.data(), n, v.data());
    return v;
}

// row-compressed copy of an l x n^2 block (used for the rank checks and the
// value-difference columns): each row is compress_pairs of the original row
inline Matrix compress_columns(const Matrix& block, std::size_t n) {
    if (block.cols() != n * n) throw DimensionError("compress_columns: block is not l x n^2");
    Matrix out(block.rows(), packed_size(n));
    for (std::size_t r = 0; r < block.rows(); ++r) compress_pairs_into(block.row(r), n, out.row(r));
    return out;
}

// horizontal concatenation [a | b]
inline Matrix hcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("hcat row mismatch");
    Matrix c(a.rows(), a.cols() + b.cols());
    c.set_block(0, 0, a);
    c.set_block(0, a.cols(), b);
    return c;
}

}  // namespace mfg
