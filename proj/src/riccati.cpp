#include "mfg/riccati.hpp"

#include <cmath>

#include "mfg/errors.hpp"
#include "mfg/linalg.hpp"
#include "mfg/spectral.hpp"
#include "mfg/vectorize.hpp"

namespace mfg {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::criterion_met: return "criterion_met";
        case StopReason::max_iter: return "max_iter";
        case StopReason::rank_deficient: return "rank_deficient";
        case StopReason::divergence: return "divergence";
    }
    return "unknown";
}

const Iterate& IterationHistory::final() const {
    if (iterates.empty()) throw Error("empty iteration history");
    return iterates.back();
}

Matrix solve_sylvester(const Matrix& f, const Matrix& g, const Matrix& h) {
    if (f.rows() != f.cols() || g.rows() != g.cols()) throw DimensionError("solve_sylvester: f, g must be square");
    if (h.rows() != f.rows() || h.cols() != g.rows()) throw DimensionError("solve_sylvester: h shape mismatch");
    const std::size_t p = f.rows(), q = g.rows();
    Matrix m = kron(Matrix::identity(q), f) + kron(g.transpose(), Matrix::identity(p));
    Vector rhs = col(h);
    for (double& v : rhs) v = -v;
    Vector x;
    try {
        x = solve_lu(m, rhs);
    } catch (const SingularMatrixError&) {
        throw SingularPencilError("solve_sylvester: singular pencil (spec(f) meets -spec(g))");
    }
    return uncol(x, p, q);
}

double are_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, double rho,
                    const Matrix& p) {
    const Matrix brb = b * solve_lu(r, b.transpose());
    const Matrix res = p * a + a.transpose() * p - p * brb * p + q - rho * p;
    return res.norm_fro();
}

double are_residual_coupled(const Matrix& a, const Matrix& g, const Matrix& b, const Matrix& q,
                            const Matrix& gamma, const Matrix& r, double rho, const Matrix& p) {
    const Matrix brb = b * solve_lu(r, b.transpose());
    const Matrix res = p * (a + g) + a.transpose() * p - p * brb * p + q - q * gamma - rho * p;
    return res.norm_fro();
}

IterationHistory kleinman_solve(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                                double rho, const Matrix& k0, const SolverConfig& cfg) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n || k0.rows() != b.cols() || k0.cols() != n)
        throw DimensionError("kleinman_solve: shape mismatch");

    const Matrix eye = Matrix::identity(n);
    {
        const SpectralReport rep = spectral(a - b * k0, rho / 2.0);
        if (!rep.hurwitz)
            throw NotStabilizingError("kleinman_solve: initial gain does not make a - rho/2 I - b k0 Hurwitz");
    }

    IterationHistory hist;
    Matrix k = k0;
    Matrix p_prev(n, n);
    double first_norm = 0.0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const Matrix acl = a - b * k - (rho / 2.0) * eye;
        const Matrix cost = k.transpose() * r * k + q;
        Matrix p = symmetrize(solve_sylvester(acl.transpose(), acl, cost));
        const Matrix k_next = solve_lu(r, b.transpose() * p);
        hist.iterates.push_back({p, k_next, are_residual(a, b, q, r, rho, p)});

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

Matrix hamiltonian_h1(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, double rho) {
    const std::size_t n = a.rows();
    const Matrix eye = Matrix::identity(n);
    Matrix h(2 * n, 2 * n);
    h.set_block(0, 0, a - (rho / 2.0) * eye);
    h.set_block(0, n, -1.0 * (b * solve_lu(r, b.transpose())));
    h.set_block(n, 0, -1.0 * q);
    h.set_block(n, n, -1.0 * a.transpose() + (rho / 2.0) * eye);
    return h;
}

Matrix hamiltonian_h2(const Matrix& a, const Matrix& g, const Matrix& b, const Matrix& q,
                      const Matrix& gamma, const Matrix& r, double rho) {
    const std::size_t n = a.rows();
    const Matrix eye = Matrix::identity(n);
    Matrix h(2 * n, 2 * n);
    h.set_block(0, 0, a + g - (rho / 2.0) * eye);
    h.set_block(0, n, -1.0 * (b * solve_lu(r, b.transpose())));
    h.set_block(n, 0, q * gamma - q);
    h.set_block(n, n, -1.0 * a.transpose() + (rho / 2.0) * eye);
    return h;
}

Matrix hamiltonian(const LqgGameModel& model, Ham which) {
    return which == Ham::H1 ? hamiltonian_h1(model.A, model.B, model.Q, model.R, model.rho)
                            : hamiltonian_h2(model.A, model.G, model.B, model.Q, model.Gamma, model.R, model.rho);
}

Matrix stable_graph_solution(const Matrix& h) {
    if (h.rows() != h.cols() || h.rows() % 2 != 0) throw DimensionError("stable_graph_solution: need 2n x 2n");
    const std::size_t n = h.rows() / 2;

    SchurResult s = real_schur(h);
    std::vector<bool> select(2 * n);
    std::size_t stable = 0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        select[i] = s.eigenvalues[i].real() < 0.0;
        if (select[i]) ++stable;
    }
    if (stable != n)
        throw NotCSplittingError("stable_graph_solution: spectrum does not split n stable / n antistable");
    order_schur(s, select);

    const Matrix z1 = s.z.block(0, 0, n, n);
    const Matrix z2 = s.z.block(n, 0, n, n);
    // the basis is orthonormal, so z1's singular values live in [0, 1]; a
    // numerically zero one means the subspace has no graph representation
    // (LU alone would divide by a rounding-level pivot and return garbage)
    if (singular_values(z1).back() < 1e-10)
        throw NotGraphSubspaceError("stable_graph_solution: stable subspace is not a graph over the state block");
    try {
        // p z1 = z2  <=>  z1' p' = z2'
        return solve_lu(z1.transpose(), z2.transpose()).transpose();
    } catch (const SingularMatrixError&) {
        throw NotGraphSubspaceError("stable_graph_solution: stable subspace is not a graph over the state block");
    }
}

}  // namespace mfg
