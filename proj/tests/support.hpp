#pragma once

// Shared fixtures for the test suites: the bundled example setups, random
// stable systems, exact expectation paths (RK4 on the deterministic error and
// average dynamics), and the model-based recursion the special-case
// feedforward iteration must reproduce.

#include <cmath>
#include <cstdint>
#include <random>

#include "mfg/datapipe.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/linalg.hpp"
#include "mfg/model.hpp"
#include "mfg/ode.hpp"
#include "mfg/population.hpp"
#include "mfg/riccati.hpp"
#include "mfg/spectral.hpp"

namespace mfg::testing {

inline LqgGameModel example1_model() {
    LqgGameModel mod;
    mod.A = {{5.0, 3.0}, {10.0, 12.0}};
    mod.G = {{1.0, 2.0}, {3.0, 5.0}};
    mod.B = {{0.0}, {1.0}};
    mod.D = {{0.1, 0.1}, {0.1, 0.1}};
    mod.Q = Matrix::identity(2);
    mod.R = {{0.01}};
    mod.Gamma = {{1.0, 1.0}, {2.0, 1.0}};
    mod.rho = 0.01;
    mod.init_mean = {1.0, 1.0};
    mod.init_box = {{0.0, 2.0}, {-1.0, 3.0}};
    return mod;
}

// published solution of the first example, four decimals
inline Matrix example1_p11() { return {{4.1407, 0.7585}, {0.7585, 0.3843}}; }
inline Matrix example1_k1() { return {{75.8526, 38.4335}}; }
inline Matrix example1_p12() { return {{3.5326, 1.0085}, {0.5717, 0.4275}}; }
inline Matrix example1_k2() { return {{57.1654, 42.7522}}; }

inline LqgGameModel example2_model() {
    LqgGameModel mod;
    mod.A = {{-5.0, 1.0, 0.0, 1.0}, {2.0, -4.0, 1.5, 0.0}, {0.0, 0.0, -2.5, 1.0},
             {1.0, 0.0, 1.0, -5.0}};
    mod.G = Matrix::identity(4) * -0.9;
    mod.B = {{0.0}, {0.0}, {0.0}, {1.0}};
    mod.D = {{0.0}, {0.0}, {0.0}, {0.01}};
    mod.Q = Matrix::identity(4) * 50.0;
    mod.R = {{0.1}};
    mod.Gamma = Matrix::identity(4) * 0.9;
    mod.rho = 0.1;
    mod.init_mean = {5.0, 5.0, 5.0, 5.0};
    mod.init_box = {{0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}};
    return mod;
}

inline Matrix example2_k1() { return {{3.0216, 1.4260, 5.0912, 18.2251}}; }
inline Matrix example2_k2() { return {{0.6945, 0.2702, 1.1453, 3.6613}}; }

inline double max_elem_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

// Random discounted-stable system: A shifted so max Re(lambda) < rho/2 - 0.5,
// Q = I, R = I_m, rho = 0.1. special = true draws the scalar coupling the
// symmetric feedforward iteration requires (G = alpha I, Gamma = beta I);
// otherwise G and Gamma are small dense matrices.
inline LqgGameModel random_stable_system(std::uint64_t seed, std::size_t n, std::size_t m,
                                         bool special) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    LqgGameModel mod;
    mod.A = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mod.A(i, j) = unit(gen);
    mod.B = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) mod.B(i, j) = unit(gen);
    mod.rho = 0.1;
    const double margin = spectral(mod.A).stability_margin;
    const double target = mod.rho / 2.0 - 0.5;
    for (std::size_t i = 0; i < n; ++i) mod.A(i, i) -= margin - target;

    if (special) {
        std::uniform_real_distribution<double> alpha(-0.5, 0.0), beta(0.0, 0.9);
        mod.G = Matrix::identity(n) * alpha(gen);
        mod.Gamma = Matrix::identity(n) * beta(gen);
    } else {
        mod.G = Matrix(n, n);
        mod.Gamma = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                mod.G(i, j) = 0.2 * unit(gen);
                mod.Gamma(i, j) = 0.3 * unit(gen);
            }
    }
    mod.Q = Matrix::identity(n);
    mod.R = Matrix::identity(m);
    mod.D = Matrix(n, 1);  // zero columns: deterministic suites only
    mod.init_mean = Vector(n, 1.0);
    mod.init_box.assign(n, {0.0, 2.0});
    return mod;
}

// Exact expectation paths for behavior gain k0 (deterministic, D = 0): the
// error path solves dx~ = ((A - B k0) x~ + B (l_1 - l_2)) dt from 0, the
// average path solves dxbar = ((A + G - B k0) xbar + B lbar) dt from the
// population mean. RK4 at the grid step stands in for the closed form.
inline ExpectationPaths exact_expectation_paths(const LqgGameModel& mod, const Matrix& k0,
                                                const TimeGrid& grid, std::uint64_t seed,
                                                std::size_t j_count = 12,
                                                std::pair<double, double> amp = {0.5, 2.0},
                                                std::pair<double, double> freq = {0.5, 8.0}) {
    const std::size_t n = mod.n(), m = mod.m();
    const auto pair_specs = sample_noise_specs(2, m, j_count, amp, freq, false, seed);
    const auto avg_specs = sample_noise_specs(1, m, j_count, amp, freq, true, seed);

    ExpectationPaths paths;
    paths.grid = grid;

    auto input_path = [&](const Path& x, const std::function<Vector(double)>& ell) {
        Path u(m, grid.count);
        for (std::size_t k = 0; k < grid.count; ++k) {
            Vector l = ell(grid.time(k));
            const double* xs = x.frame(k);
            for (std::size_t c = 0; c < m; ++c) {
                double kx = 0.0;
                for (std::size_t j = 0; j < n; ++j) kx += k0(c, j) * xs[j];
                u.frame(k)[c] = l[c] - kx;
            }
        }
        return u;
    };

    auto ell_diff = [&](double t) {
        Vector l = exploration_noise(pair_specs[0], t);
        const Vector l2 = exploration_noise(pair_specs[1], t);
        for (std::size_t c = 0; c < m; ++c) l[c] -= l2[c];
        return l;
    };
    paths.xt = integrate_linear_ode(
        mod.A - mod.B * k0, [&](double t) { return mod.B * ell_diff(t); }, Vector(n, 0.0), grid);
    paths.ut = input_path(paths.xt, ell_diff);

    auto ell_bar = [&](double t) { return exploration_noise(avg_specs[0], t); };
    paths.xb = integrate_linear_ode(
        mod.A + mod.G - mod.B * k0, [&](double t) { return mod.B * ell_bar(t); }, mod.init_mean,
        grid);
    paths.ub = input_path(paths.xb, ell_bar);
    return paths;
}

// Model-based recursion for the scalar-coupling feedforward pair: solve
//   rho P = (A - B K')' P + P (A + G - B K') + K'' R K' + Q - Q Gamma
// for P, then K = R^-1 B' P, with the same stop logic as the data-driven
// iterations.
inline IterationHistory feedforward_recursion(const LqgGameModel& mod, const Matrix& k2_0,
                                              const SolverConfig& cfg = {}) {
    IterationHistory hist;
    const std::size_t n = mod.n();
    const Matrix eye = Matrix::identity(n);
    Matrix k = k2_0;
    Matrix p_prev(n, n);
    double first_norm = 0.0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const Matrix f = (mod.A - mod.B * k).transpose() - mod.rho * eye;
        const Matrix g = mod.A + mod.G - mod.B * k;
        const Matrix h = k.transpose() * mod.R * k + mod.Q - mod.Q * mod.Gamma;
        const Matrix p = solve_sylvester(f, g, h);
        const Matrix k_next = solve_lu(mod.R, mod.B.transpose() * p);
        hist.iterates.push_back({p, k_next, 0.0});
        if (it == 1) first_norm = std::max(1.0, p.norm_fro());
        if (p.norm_fro() > kDivergenceFactor * first_norm) {
            hist.stop_reason = StopReason::divergence;
            return hist;
        }
        if ((p - p_prev).norm_fro() < cfg.xi) {
            hist.converged = true;
            hist.stop_reason = StopReason::criterion_met;
            return hist;
        }
        p_prev = p;
        k = k_next;
    }
    hist.stop_reason = StopReason::max_iter;
    return hist;
}

// default sampling plan for the deterministic suites: l windows of length T
// starting at multiples of Ts, Simpson quadrature on the path grid
inline SamplingPlan dense_plan(std::size_t l, double substep, double Ts = 0.1, double T = 0.1) {
    SamplingPlan plan;
    plan.t1 = 0.0;
    plan.l = l;
    plan.Ts = Ts;
    plan.T = T;
    plan.quad_substep = substep;
    plan.rule = QuadratureRule::simpson;
    return plan;
}

}  // namespace mfg::testing
