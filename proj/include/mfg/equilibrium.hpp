#pragma once

#include <functional>
#include <vector>

#include "mfg/datapipe.hpp"
#include "mfg/grid.hpp"
#include "mfg/matrix.hpp"
#include "mfg/model.hpp"
#include "mfg/riccati.hpp"

namespace mfg {

// Everything a run produces. Identified matrices are empty unless the
// identification pipeline ran; mean_field sits on mean_field_grid.
struct EquilibriumSolution {
    Matrix p11, k1;  // feedback block
    Matrix p12, k2;  // feedforward block
    Matrix a_hat, b_hat, ag_hat, g_hat;
    Path mean_field;
    TimeGrid mean_field_grid;
    IterationHistory feedback_history;
    IterationHistory feedforward_history;
    std::vector<RankReport> assumptions;
};

// Data-driven policy iteration for the feedback pair (P11, K1). Each pass
// solves one least-squares system in the unknowns (colm(P11), col(K1)); the
// behavior data stays fixed (off-policy). k1_0 must make the rho/2-shifted
// closed loop stable — unverifiable from data alone, so a divergent iterate
// sequence is the detection mechanism (reported via stop_reason).
// Throws RankDeficientError when the regressor loses column rank.
IterationHistory opi_feedback(const ErrorBlock& data, const Matrix& k1_0, const Matrix& q,
                              const Matrix& r, const SolverConfig& cfg = {});

// B from the feedback fixed point: P11^-1 K1' R.
Matrix recover_b(const Matrix& p11, const Matrix& k1, const Matrix& r);

// Row-wise identification of the drift matrix from the error-system data
// (uses the recovered B implicitly through P11 and K1).
Matrix identify_a(const ErrorBlock& data, const Matrix& p11, const Matrix& k1, const Matrix& r,
                  double rho);

// Same regression on the average-system data; returns A+G.
Matrix identify_a_plus_g(const AverageBlock& data, const Matrix& p11, const Matrix& k1,
                         const Matrix& r, double rho);

// Feedforward pair from identified matrices via the stable graph subspace of
// the coupled-equation block matrix; checks the rho/2-shifted closed loop.
struct FeedforwardResult {
    Matrix p12, k2;
};
FeedforwardResult certainty_equivalence_feedforward(const Matrix& a_hat, const Matrix& ag_hat,
                                                    const Matrix& b_hat, const Matrix& q,
                                                    const Matrix& r, const Matrix& gamma,
                                                    double rho);

// x-bar*(t_k) = exp((AG - B K2) t_k) xbar0 on the grid, propagated by a
// single per-step matrix exponential.
Path mean_field_trajectory(const Matrix& ag, const Matrix& b, const Matrix& k2,
                           const Vector& xbar0, const TimeGrid& grid);

// Data-driven iteration for the feedforward pair (P12, K2) in the special
// case where the coupled equation stays symmetric (G and Gamma scalar
// multiples of I). P12 is parameterized in colm coordinates, so every iterate
// is symmetric by construction.
IterationHistory opi_feedforward_special(const CrossBlock& data, const Matrix& k2_0,
                                         const Matrix& q, const Matrix& r, const Matrix& gamma,
                                         double rho, const SolverConfig& cfg = {});

// Full identification pipeline on prepared expectation paths:
// regression data -> excitation checks -> feedback iteration -> B recovery ->
// drift identification -> certainty-equivalence feedforward -> mean field.
// xbar0 is the (known) initial population mean; the mean field is emitted on
// mf_grid. Throws RankDeficientError when an excitation check fails and
// ConvergenceError when an iteration stalls or diverges.
EquilibriumSolution run_algorithm1(const ExpectationPaths& paths, const SamplingPlan& plan,
                                   const Matrix& q, const Matrix& r, const Matrix& gamma,
                                   double rho, const Matrix& k1_0, const Vector& xbar0,
                                   const TimeGrid& mf_grid, const SolverConfig& cfg = {});

// Convenience overload: Monte-Carlo ensembles in, expectation paths computed
// here (pair ensemble must record agents 0 and 1; average ensemble the
// population means).
EquilibriumSolution run_algorithm1(const EnsembleTrajectories& pair_ens,
                                   const EnsembleTrajectories& avg_ens, const SamplingPlan& plan,
                                   const Matrix& q, const Matrix& r, const Matrix& gamma,
                                   double rho, const Matrix& k1_0, const Vector& xbar0,
                                   const TimeGrid& mf_grid, const SolverConfig& cfg = {});

// Pure-iteration pipeline for the special case: feedback iteration, then the
// symmetric feedforward iteration, then a mean-field estimate obtained by
// handing the final gain to `environment` (which plays u = -K2 x on the
// population and returns the measured average state path with its grid).
// environment may be null, in which case the mean field is left empty.
using MeanFieldEnvironment = std::function<std::pair<TimeGrid, Path>(const Matrix& k2)>;

EquilibriumSolution run_algorithm2(const ExpectationPaths& paths, const SamplingPlan& plan,
                                   const Matrix& q, const Matrix& r, const Matrix& gamma,
                                   double rho, const Matrix& k1_0, const Matrix& k2_0,
                                   const MeanFieldEnvironment& environment,
                                   const SolverConfig& cfg = {});

// Gap between the realized population average and the mean-field trajectory.
struct ConsistencyReport {
    double max_gap = 0.0;       // max_t ||x_(N)(t) - xbar*(t)||_2
    double time_avg_gap = 0.0;  // mean over grid points
};
ConsistencyReport consistency_check(const EnsembleTrajectories& rollout, const Path& mean_field);

// Model-based reference: both blocks solved from the stable graph subspaces
// of the block matrices, mean field propagated with the true matrices.
EquilibriumSolution solve_equilibrium_oracle(const LqgGameModel& model, const TimeGrid& mf_grid);

}  // namespace mfg
