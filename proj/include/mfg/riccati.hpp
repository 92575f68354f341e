#pragma once

#include <string>
#include <vector>

#include "mfg/matrix.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Shared knobs for the iterative solvers (model-based and data-driven alike).
struct SolverConfig {
    double xi = 1e-6;        // stop when ||P^k - P^{k-1}||_F < xi
    int max_iter = 50;
    double rank_tol = 1e-8;  // relative singular-value cutoff in the LS solves
};

// a P^k iterate blows up past this multiple of the first iterate -> divergence
inline constexpr double kDivergenceFactor = 1e3;

enum class StopReason { criterion_met, max_iter, rank_deficient, divergence };
const char* to_string(StopReason r);

struct Iterate {
    Matrix p;
    Matrix k;
    double residual = 0.0;  // Frobenius residual of the target equation
};

struct IterationHistory {
    std::vector<Iterate> iterates;
    bool converged = false;
    StopReason stop_reason = StopReason::max_iter;

    const Iterate& final() const;
};

// f x + x g + h = 0 via Kronecker vectorization (fine for the n <= 8 regime;
// throws SingularPencilError when spec(f) and -spec(g) intersect)
Matrix solve_sylvester(const Matrix& f, const Matrix& g, const Matrix& h);

// Frobenius residual of  rho p = p a + a' p - p b r^-1 b' p + q
double are_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, double rho,
                    const Matrix& p);
// Frobenius residual of  rho p = p (a+g) + a' p - p b r^-1 b' p + q - q gamma
double are_residual_coupled(const Matrix& a, const Matrix& g, const Matrix& b, const Matrix& q,
                            const Matrix& gamma, const Matrix& r, double rho, const Matrix& p);

// Policy iteration for the discounted ARE
//   rho p = p a + a' p - p b r^-1 b' p + q,
// seeded with a gain k0 making a - rho/2 I - b k0 Hurwitz (checked; throws
// NotStabilizingError otherwise). Each pass solves the Lyapunov equation of
// the current gain exactly and re-derives k = r^-1 b' p. Quadratic near the
// fixed point; residual per iterate is the ARE defect.
IterationHistory kleinman_solve(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                                double rho, const Matrix& k0, const SolverConfig& cfg = {});

enum class Ham { H1, H2 };

// The 2n x 2n block matrices whose stable invariant subspaces carry the ARE
// solutions: H1 for the feedback equation, H2 for the coupled one.
Matrix hamiltonian(const LqgGameModel& model, Ham which);
Matrix hamiltonian_h1(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, double rho);
Matrix hamiltonian_h2(const Matrix& a, const Matrix& g, const Matrix& b, const Matrix& q,
                      const Matrix& gamma, const Matrix& r, double rho);

// Stabilizing solution p = z2 z1^-1 from the n-dimensional stable invariant
// subspace [z1; z2] of a 2n x 2n block matrix. Throws NotCSplittingError when
// the spectrum does not split n/n across the imaginary axis and
// NotGraphSubspaceError when z1 is singular.
Matrix stable_graph_solution(const Matrix& h);

}  // namespace mfg
