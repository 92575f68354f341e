#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

using Vector = std::vector<double>;

// Dense row-major matrix. Small-n workloads (n <= 8 state dims, regression
// blocks with a few thousand rows), so no blocking/striding cleverness.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const Vector& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return a_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    double* row(std::size_t i) { return a_.data() + i * cols_; }
    const double* row(std::size_t i) const { return a_.data() + i * cols_; }

    Matrix transpose() const;
    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

    double norm_fro() const;
    double max_abs() const;

    Vector col_vector(std::size_t j) const;
    void set_block(std::size_t i0, std::size_t j0, const Matrix& b);
    Matrix block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    Vector a_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

// symmetric matrix packed in colm order: upper triangle row-major,
// off-diagonal entries doubled (see vectorize.hpp for the conventions)
struct SymMatrix {
    std::size_t dim = 0;
    Vector packed;  // length dim*(dim+1)/2

    static SymMatrix from_matrix(const Matrix& p, double sym_tol = 1e-9);
    Matrix to_matrix() const;
};

// LU with partial pivoting; these throw SingularMatrixError on tiny pivots.
Vector solve_lu(const Matrix& a, const Vector& b);
Matrix solve_lu(const Matrix& a, const Matrix& b);
Matrix invert(const Matrix& a);

// max |a_ij - a_ji|
double symmetry_defect(const Matrix& a);
Matrix symmetrize(const Matrix& a);  // (A + A')/2

double norm2(const Vector& v);
double norm_inf(const Vector& v);

}  // namespace mfg
