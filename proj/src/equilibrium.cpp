#include "mfg/equilibrium.hpp"

#include <cmath>
#include <string>

#include "mfg/linalg.hpp"
#include "mfg/ode.hpp"
#include "mfg/population.hpp"
#include "mfg/spectral.hpp"
#include "mfg/vectorize.hpp"

namespace mfg {

namespace {

struct BlockDims {
    std::size_t n, m, l;
};

BlockDims dims_of(const Matrix& int_xx, const Matrix& int_xu) {
    BlockDims d;
    d.l = int_xx.rows();
    d.n = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(int_xx.cols()))));
    if (d.n * d.n != int_xx.cols()) throw DimensionError("state block is not n^2 wide");
    if (d.n == 0 || int_xu.cols() % d.n != 0) throw DimensionError("input block is not n*m wide");
    d.m = int_xu.cols() / d.n;
    return d;
}

// shared by the two data-driven iterations: one least-squares pass in the
// unknowns (colm(P), col(K))
struct LsIterate {
    Matrix p, k;
    double residual;
};

LsIterate solve_joint_ls(const Matrix& delta_compressed, const Matrix& int_xx_like,
                         const Matrix& int_xu_like, const Matrix& k_prev, const Matrix& q_term,
                         const Matrix& r, double scale, const SolverConfig& cfg,
                         std::size_t n, std::size_t m) {
    // scale = 1 for the error block. For the cross block the int_* arguments are
    // sums over both kron orderings while the value-difference columns are the
    // average, so scale = 0.5 keeps all three consistent: there the two gain
    // terms are distinct and each appears once (no factor 2 as in the error
    // case, where they coincide).
    const Matrix eye_n = Matrix::identity(n);
    const Matrix gain_cols = int_xx_like * kron(eye_n, k_prev.transpose() * r) * (2.0 * scale) +
                             int_xu_like * kron(eye_n, r) * (2.0 * scale);
    Matrix psi = hcat(delta_compressed, -1.0 * gain_cols);

    const Matrix cost = k_prev.transpose() * r * k_prev + q_term;
    Vector xi = int_xx_like * col(cost);
    for (double& v : xi) v *= -scale;

    const LeastSquaresResult ls = least_squares(psi, xi, cfg.rank_tol);
    const std::size_t nc = packed_size(n);
    Vector packed(ls.theta.begin(), ls.theta.begin() + nc);
    Vector kcol(ls.theta.begin() + nc, ls.theta.end());
    return {uncolm(packed, n), uncol(kcol, m, n), ls.residual_norm};
}

// common stopping logic, mirroring the model-based iteration exactly
template <typename Step>
IterationHistory iterate_to_convergence(Step step, const SolverConfig& cfg) {
    IterationHistory hist;
    Matrix p_prev;
    double first_norm = 0.0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const Matrix k_prev = hist.iterates.empty() ? Matrix() : hist.iterates.back().k;
        LsIterate next = step(it, k_prev);
        hist.iterates.push_back({next.p, next.k, next.residual});

        if (it == 1) {
            first_norm = std::max(1.0, next.p.norm_fro());
            p_prev = Matrix(next.p.rows(), next.p.cols());
        }
        if (next.p.norm_fro() > kDivergenceFactor * first_norm) {
            hist.stop_reason = StopReason::divergence;
            return hist;
        }
        if ((next.p - p_prev).norm_fro() < cfg.xi) {
            hist.converged = true;
            hist.stop_reason = StopReason::criterion_met;
            return hist;
        }
        p_prev = next.p;
    }
    hist.stop_reason = StopReason::max_iter;
    return hist;
}

}  // namespace

IterationHistory opi_feedback(const ErrorBlock& data, const Matrix& k1_0, const Matrix& q,
                              const Matrix& r, const SolverConfig& cfg) {
    if (!data.present()) throw DimensionError("opi_feedback: error block is empty");
    const BlockDims d = dims_of(data.int_xx, data.int_xu);
    if (k1_0.rows() != d.m || k1_0.cols() != d.n)
        throw DimensionError("opi_feedback: initial gain must be m x n");

    return iterate_to_convergence(
        [&](int, const Matrix& k_hist) {
            const Matrix& k_prev = k_hist.empty() ? k1_0 : k_hist;
            return solve_joint_ls(data.delta_colv, data.int_xx, data.int_xu, k_prev, q, r, 1.0,
                                  cfg, d.n, d.m);
        },
        cfg);
}

Matrix recover_b(const Matrix& p11, const Matrix& k1, const Matrix& r) {
    return solve_lu(p11, k1.transpose() * r);
}

namespace {

Matrix identify_rows(const Matrix& delta_xx, const Matrix& int_xx, const Matrix& int_xu,
                     const Matrix& p11, const Matrix& k1, const Matrix& r, double rho,
                     double rank_tol) {
    const BlockDims d = dims_of(int_xx, int_xu);
    const Matrix b_hat = recover_b(p11, k1, r);  // row i of this is (B' e_i)'

    Matrix out(d.n, d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        Matrix psi(d.l, d.n);
        for (std::size_t row = 0; row < d.l; ++row)
            for (std::size_t c = 0; c < d.n; ++c) psi(row, c) = 2.0 * int_xx(row, c * d.n + i);

        Vector xi(d.l);
        const std::size_t diag = i * d.n + i;
        for (std::size_t row = 0; row < d.l; ++row) {
            double v = delta_xx(row, diag) + rho * int_xx(row, diag);
            for (std::size_t c = 0; c < d.m; ++c)
                v -= 2.0 * int_xu(row, i * d.m + c) * b_hat(i, c);
            xi[row] = v;
        }

        const LeastSquaresResult ls = least_squares(psi, xi, rank_tol);
        for (std::size_t c = 0; c < d.n; ++c) out(i, c) = ls.theta[c];
    }
    return out;
}

}  // namespace

Matrix identify_a(const ErrorBlock& data, const Matrix& p11, const Matrix& k1, const Matrix& r,
                  double rho) {
    if (!data.present()) throw DimensionError("identify_a: error block is empty");
    return identify_rows(data.delta_xx, data.int_xx, data.int_xu, p11, k1, r, rho, 1e-8);
}

Matrix identify_a_plus_g(const AverageBlock& data, const Matrix& p11, const Matrix& k1,
                         const Matrix& r, double rho) {
    if (!data.present()) throw DimensionError("identify_a_plus_g: average block is empty");
    return identify_rows(data.delta_xx, data.int_xx, data.int_xu, p11, k1, r, rho, 1e-8);
}

FeedforwardResult certainty_equivalence_feedforward(const Matrix& a_hat, const Matrix& ag_hat,
                                                    const Matrix& b_hat, const Matrix& q,
                                                    const Matrix& r, const Matrix& gamma,
                                                    double rho) {
    const Matrix g_hat = ag_hat - a_hat;
    const Matrix h2 = hamiltonian_h2(a_hat, g_hat, b_hat, q, gamma, r, rho);
    FeedforwardResult out;
    out.p12 = stable_graph_solution(h2);
    out.k2 = solve_lu(r, b_hat.transpose() * out.p12);
    if (!spectral(ag_hat - b_hat * out.k2, rho / 2.0).hurwitz)
        throw NotStabilizingError(
            "certainty_equivalence_feedforward: coupled closed loop is not rho/2-shifted stable");
    return out;
}

Path mean_field_trajectory(const Matrix& ag, const Matrix& b, const Matrix& k2,
                           const Vector& xbar0, const TimeGrid& grid) {
    const std::size_t n = ag.rows();
    const Matrix closed = ag - b * k2;
    Path out(n, grid.count);

    // exact per-step propagation: x(t_{k+1}) = e^{M dt} x(t_k)
    Vector x = grid.t0 == 0.0 ? xbar0 : expm(closed * grid.t0) * xbar0;
    const Matrix step = expm(closed * grid.dt);
    for (std::size_t k = 0; k < grid.count; ++k) {
        std::copy(x.begin(), x.end(), out.frame(k));
        if (k + 1 < grid.count) x = step * x;
    }
    return out;
}

IterationHistory opi_feedforward_special(const CrossBlock& data, const Matrix& k2_0,
                                         const Matrix& q, const Matrix& r, const Matrix& gamma,
                                         double /*rho: discount is already folded into delta_hat*/,
                                         const SolverConfig& cfg) {
    if (!data.present()) throw DimensionError("opi_feedforward_special: cross block is empty");
    const Matrix sum_xx = data.int_xt_xb + data.int_xb_xt;
    const Matrix sum_xu = data.int_xt_ub + data.int_xb_ut;
    const BlockDims d = dims_of(sum_xx, sum_xu);
    if (k2_0.rows() != d.m || k2_0.cols() != d.n)
        throw DimensionError("opi_feedforward_special: initial gain must be m x n");

    const Matrix q_term = q - q * gamma;
    if (symmetry_defect(q_term) > 1e-9 * (1.0 + q_term.max_abs()))
        throw DimensionError(
            "opi_feedforward_special: Q - Q Gamma is not symmetric (needs the scalar-coupling "
            "special case)");

    return iterate_to_convergence(
        [&](int, const Matrix& k_hist) {
            const Matrix& k_prev = k_hist.empty() ? k2_0 : k_hist;
            return solve_joint_ls(data.delta_hat, sum_xx, sum_xu, k_prev, q_term, r, 0.5, cfg,
                                  d.n, d.m);
        },
        cfg);
}

namespace {

void require_satisfied(const std::vector<RankReport>& reports, const std::string& label) {
    for (const auto& rep : reports)
        if (rep.label == label) {
            if (!rep.satisfied)
                throw RankDeficientError("excitation check '" + label + "' failed (rank " +
                                             std::to_string(rep.achieved) + " of " +
                                             std::to_string(rep.required) + ")",
                                         rep.achieved, rep.required);
            return;
        }
    throw DimensionError("excitation check '" + label + "' was never computed");
}

void require_converged(const IterationHistory& hist, const std::string& stage) {
    if (!hist.converged)
        throw ConvergenceError(stage + " iteration stopped: " + to_string(hist.stop_reason));
}

}  // namespace

EquilibriumSolution run_algorithm1(const ExpectationPaths& paths, const SamplingPlan& plan,
                                   const Matrix& q, const Matrix& r, const Matrix& gamma,
                                   double rho, const Matrix& k1_0, const Vector& xbar0,
                                   const TimeGrid& mf_grid, const SolverConfig& cfg) {
    RegressionData data = build_regression_data(paths, plan, rho, false);
    if (!data.average_block.present())
        throw DimensionError("run_algorithm1: average paths are required for identification");
    data.rank_reports = check_assumptions(data, cfg.rank_tol);
    require_satisfied(data.rank_reports, "feedback_excitation");
    require_satisfied(data.rank_reports, "average_excitation");

    EquilibriumSolution sol;
    sol.assumptions = data.rank_reports;

    sol.feedback_history = opi_feedback(data.error_block, k1_0, q, r, cfg);
    require_converged(sol.feedback_history, "feedback");
    sol.p11 = sol.feedback_history.final().p;
    sol.k1 = sol.feedback_history.final().k;

    sol.b_hat = recover_b(sol.p11, sol.k1, r);
    sol.a_hat = identify_a(data.error_block, sol.p11, sol.k1, r, rho);
    sol.ag_hat = identify_a_plus_g(data.average_block, sol.p11, sol.k1, r, rho);
    sol.g_hat = sol.ag_hat - sol.a_hat;

    if (!spectral(sol.a_hat - sol.b_hat * sol.k1, rho / 2.0).hurwitz)
        throw NotStabilizingError(
            "run_algorithm1: identified feedback closed loop is not rho/2-shifted stable");

    const FeedforwardResult ff =
        certainty_equivalence_feedforward(sol.a_hat, sol.ag_hat, sol.b_hat, q, r, gamma, rho);
    sol.p12 = ff.p12;
    sol.k2 = ff.k2;

    sol.mean_field = mean_field_trajectory(sol.ag_hat, sol.b_hat, sol.k2, xbar0, mf_grid);
    sol.mean_field_grid = mf_grid;
    return sol;
}

EquilibriumSolution run_algorithm1(const EnsembleTrajectories& pair_ens,
                                   const EnsembleTrajectories& avg_ens, const SamplingPlan& plan,
                                   const Matrix& q, const Matrix& r, const Matrix& gamma,
                                   double rho, const Matrix& k1_0, const Vector& xbar0,
                                   const TimeGrid& mf_grid, const SolverConfig& cfg) {
    const ExpectationPaths paths = merge_expectation_paths(
        expectation_paths(pair_ens, ExpectationMode::pair_difference, 0, 1),
        expectation_paths(avg_ens, ExpectationMode::population_average));
    return run_algorithm1(paths, plan, q, r, gamma, rho, k1_0, xbar0, mf_grid, cfg);
}

EquilibriumSolution run_algorithm2(const ExpectationPaths& paths, const SamplingPlan& plan,
                                   const Matrix& q, const Matrix& r, const Matrix& gamma,
                                   double rho, const Matrix& k1_0, const Matrix& k2_0,
                                   const MeanFieldEnvironment& environment,
                                   const SolverConfig& cfg) {
    RegressionData data = build_regression_data(paths, plan, rho, true);
    data.rank_reports = check_assumptions(data, cfg.rank_tol);
    require_satisfied(data.rank_reports, "feedback_excitation");
    require_satisfied(data.rank_reports, "cross_excitation");

    EquilibriumSolution sol;
    sol.assumptions = data.rank_reports;

    sol.feedback_history = opi_feedback(data.error_block, k1_0, q, r, cfg);
    require_converged(sol.feedback_history, "feedback");
    sol.p11 = sol.feedback_history.final().p;
    sol.k1 = sol.feedback_history.final().k;

    sol.feedforward_history = opi_feedforward_special(data.cross_block, k2_0, q, r, gamma, rho, cfg);
    require_converged(sol.feedforward_history, "feedforward");
    sol.p12 = sol.feedforward_history.final().p;
    sol.k2 = sol.feedforward_history.final().k;

    if (environment) {
        auto [grid, path] = environment(sol.k2);
        sol.mean_field = std::move(path);
        sol.mean_field_grid = grid;
    }
    return sol;
}

ConsistencyReport consistency_check(const EnsembleTrajectories& rollout, const Path& mean_field) {
    const Path xn = population_average_state(rollout);
    if (xn.dim != mean_field.dim || xn.frames() != mean_field.frames())
        throw GridMismatchError("consistency_check: rollout and mean field are not aligned");

    ConsistencyReport rep;
    double sum = 0.0;
    for (std::size_t k = 0; k < xn.frames(); ++k) {
        double g = 0.0;
        for (std::size_t c = 0; c < xn.dim; ++c) {
            const double diff = xn.frame(k)[c] - mean_field.frame(k)[c];
            g += diff * diff;
        }
        g = std::sqrt(g);
        rep.max_gap = std::max(rep.max_gap, g);
        sum += g;
    }
    rep.time_avg_gap = sum / static_cast<double>(xn.frames());
    return rep;
}

EquilibriumSolution solve_equilibrium_oracle(const LqgGameModel& model, const TimeGrid& mf_grid) {
    model.validate();
    EquilibriumSolution sol;
    sol.p11 = stable_graph_solution(hamiltonian(model, Ham::H1));
    sol.k1 = solve_lu(model.R, model.B.transpose() * sol.p11);
    sol.p12 = stable_graph_solution(hamiltonian(model, Ham::H2));
    sol.k2 = solve_lu(model.R, model.B.transpose() * sol.p12);
    sol.mean_field =
        mean_field_trajectory(model.A + model.G, model.B, sol.k2, model.init_mean, mf_grid);
    sol.mean_field_grid = mf_grid;
    return sol;
}

}  // namespace mfg
