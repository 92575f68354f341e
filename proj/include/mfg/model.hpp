#pragma once

#include <utility>
#include <vector>

#include "mfg/matrix.hpp"

namespace mfg {

// Linear-quadratic mean-field game on an infinite horizon with discount rho:
//   dx_i = (A x_i + G x_(N) + B u_i) dt + D dw_i
//   J_i  = E int e^{-rho t} ( ||x_i - Gamma x_(N)||_Q^2 + ||u_i||_R^2 ) dt
// x_(N) is the population-average state. Initial states are uniform on the
// per-coordinate box `init_box` with mean `init_mean`.
struct LqgGameModel {
    Matrix A, G, B, D, Q, R, Gamma;
    double rho = 0.0;
    Vector init_mean;
    std::vector<std::pair<double, double>> init_box;

    std::size_t n() const { return A.rows(); }  // state dimension
    std::size_t m() const { return B.cols(); }  // input dimension
    std::size_t d() const { return D.cols(); }  // Brownian dimension

    // throws ValidationError naming the broken field
    void validate() const;
};

}  // namespace mfg
