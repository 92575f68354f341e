#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfg/matrix.hpp"
#include "mfg/population.hpp"

namespace mfg {

enum class QuadratureRule { rectangle, trapezoid, simpson };

const char* to_string(QuadratureRule r);
QuadratureRule quadrature_from_string(const std::string& s);

// Regression row layout: row k covers the window [t_k, t_k + T] with
// t_k = t1 + k*Ts, k = 0..l-1. quad_substep is the inner quadrature step; it
// must be a multiple of the path step, and windows may overlap (Ts < T).
struct SamplingPlan {
    double t1 = 0.0;
    std::size_t l = 1;
    double Ts = 0.1;
    double T = 0.1;
    double quad_substep = 1e-3;
    QuadratureRule rule = QuadratureRule::rectangle;

    double t_k(std::size_t k) const { return t1 + static_cast<double>(k) * Ts; }
    void validate() const;  // throws ValidationError naming the broken field
};

// Discounted windowed integral  int_t^{t+T} e^{-rho tau} x(tau) (x) y(tau) dtau
// as a dim_x*dim_y vector, evaluated from the sampled paths at quad_substep
// resolution. Kronecker index convention: entry i*dim_y + j is x_i y_j.
Vector discounted_outer_integral(const Path& x, const Path& y, const TimeGrid& grid, double t,
                                 double T, double rho, double quad_substep,
                                 QuadratureRule rule = QuadratureRule::rectangle);

// e^{-rho(t+T)} x(t+T) (x) y(t+T)  -  e^{-rho t} x(t) (x) y(t); symmetrized
// averages the two Kronecker orders (only meaningful when dim_x == dim_y).
Vector discounted_outer_difference(const Path& x, const Path& y, const TimeGrid& grid, double t,
                                   double T, double rho, bool symmetrized = false);

// Stacked data matrices for the error system x-tilde (one row per window).
// delta_colv carries the compressed n(n+1)/2 form of delta_xx.
struct ErrorBlock {
    Matrix delta_xx;   // l x n^2
    Matrix delta_colv; // l x n(n+1)/2
    Matrix int_xx;     // l x n^2
    Matrix int_xu;     // l x nm

    bool present() const { return !delta_xx.empty(); }
};

// Same quantities for the average system x-bar.
struct AverageBlock {
    Matrix delta_xx;
    Matrix delta_colv;
    Matrix int_xx;
    Matrix int_xu;

    bool present() const { return !delta_xx.empty(); }
};

// Cross products between the error and average systems (special-case solver).
// delta_hat is the compressed symmetrized difference of x-tilde (x) x-bar.
struct CrossBlock {
    Matrix delta_hat;  // l x n(n+1)/2
    Matrix int_xt_xb;  // l x n^2,  x-tilde (x) x-bar
    Matrix int_xb_xt;  // l x n^2
    Matrix int_xt_ub;  // l x nm,   x-tilde (x) u-bar
    Matrix int_xb_ut;  // l x nm

    bool present() const { return !delta_hat.empty(); }
};

struct RankReport {
    std::string label;
    std::size_t required = 0;
    std::size_t achieved = 0;
    double smallest_kept_sv = 0.0;
    double largest_discarded_sv = 0.0;
    bool satisfied = false;
};

struct RegressionData {
    SamplingPlan plan;
    double rho = 0.0;
    std::size_t n = 0;  // state dim
    std::size_t m = 0;  // input dim
    ErrorBlock error_block;
    AverageBlock average_block;
    CrossBlock cross_block;
    std::vector<RankReport> rank_reports;  // filled by check_assumptions
};

// Builds every block the supplied paths allow: error_block from (xt, ut),
// average_block from (xb, ub), cross_block additionally when include_cross.
// Rows are independent; `parallel` switches the OpenMP map over windows
// (results are identical either way — kept for the benchmark comparison).
RegressionData build_regression_data(const ExpectationPaths& paths, const SamplingPlan& plan,
                                     double rho, bool include_cross, bool parallel = true);

// Excitation (persistent-excitation) rank checks on the compressed blocks:
//   feedback:  [compressed int_xx | int_xu]           vs n(n+1)/2 + nm
//   average:   compressed int_xx (average block)      vs n(n+1)/2
//   cross:     [compressed (int_xt_xb + int_xb_xt) | int_xt_ub + int_xb_ut]
//                                                     vs n(n+1)/2 + nm
// Reports carry the boundary singular values; nothing throws here.
std::vector<RankReport> check_assumptions(const RegressionData& data, double rel_tol = 1e-8);

// One CSV per present block (error_block.csv, average_block.csv,
// cross_block.csv) in `dir`: a leading t column, then the block's matrices
// column by column. Returns the file names written.
std::vector<std::string> save_regression_csv(const RegressionData& data, const std::string& dir);

}  // namespace mfg
