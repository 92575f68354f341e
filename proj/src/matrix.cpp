#include "mfg/matrix.hpp"

#include <cmath>
#include <cstdlib>

namespace mfg {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    a_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged initializer for Matrix");
        a_.insert(a_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix += shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix -= shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

double Matrix::norm_fro() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

Vector Matrix::col_vector(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_block(std::size_t i0, std::size_t j0, const Matrix& b) {
    if (i0 + b.rows() > rows_ || j0 + b.cols() > cols_) throw DimensionError("set_block out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
}

Matrix Matrix::block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
    if (i0 + r > rows_ || j0 + c > cols_) throw DimensionError("block out of range");
    Matrix b(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matrix * shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            double* crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw DimensionError("matrix * vector shape mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += arow[j] * x[j];
        y[i] = s;
    }
    return y;
}

SymMatrix SymMatrix::from_matrix(const Matrix& p, double sym_tol) {
    if (p.rows() != p.cols()) throw DimensionError("SymMatrix from non-square matrix");
    const double scale = std::max(1.0, p.max_abs());
    if (symmetry_defect(p) > sym_tol * scale) throw DimensionError("SymMatrix from non-symmetric matrix");
    const std::size_t n = p.rows();
    SymMatrix s;
    s.dim = n;
    s.packed.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        s.packed.push_back(p(i, i));
        for (std::size_t j = i + 1; j < n; ++j) s.packed.push_back(p(i, j) + p(j, i));
    }
    return s;
}

Matrix SymMatrix::to_matrix() const {
    Matrix p(dim, dim);
    std::size_t k = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        p(i, i) = packed[k++];
        for (std::size_t j = i + 1; j < dim; ++j) {
            p(i, j) = packed[k] / 2.0;
            p(j, i) = packed[k] / 2.0;
            ++k;
        }
    }
    return p;
}

namespace {

// in-place LU factorization with partial pivoting; returns the permutation
void lu_factor(Matrix& a, std::vector<std::size_t>& piv) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("LU of non-square matrix");
    piv.resize(n);
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;
    double scale = a.max_abs();
    if (scale == 0.0) throw SingularMatrixError("LU of zero matrix");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > best) {
                best = std::abs(a(i, k));
                p = i;
            }
        }
        if (best <= 1e-14 * scale) throw SingularMatrixError("singular matrix in LU solve");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(piv[k], piv[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            a(i, k) /= a(k, k);
            const double lik = a(i, k);
            if (lik == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= lik * a(k, j);
        }
    }
}

Vector lu_apply(const Matrix& lu, const std::vector<std::size_t>& piv, const Vector& b) {
    const std::size_t n = lu.rows();
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[piv[i]];
    for (std::size_t i = 1; i < n; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= lu(ii, j) * x[j];
        x[ii] = s / lu(ii, ii);
    }
    return x;
}

}  // namespace

Vector solve_lu(const Matrix& a, const Vector& b) {
    if (a.rows() != b.size()) throw DimensionError("solve_lu shape mismatch");
    Matrix lu = a;
    std::vector<std::size_t> piv;
    lu_factor(lu, piv);
    return lu_apply(lu, piv, b);
}

Matrix solve_lu(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("solve_lu shape mismatch");
    Matrix lu = a;
    std::vector<std::size_t> piv;
    lu_factor(lu, piv);
    Matrix x(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        Vector xj = lu_apply(lu, piv, b.col_vector(j));
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = xj[i];
    }
    return x;
}

Matrix invert(const Matrix& a) { return solve_lu(a, Matrix::identity(a.rows())); }

double symmetry_defect(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - a(j, i)));
    return m;
}

Matrix symmetrize(const Matrix& a) {
    Matrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace mfg
