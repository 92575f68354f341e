#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "mfg/linalg.hpp"
#include "mfg/matrix.hpp"
#include "mfg/ode.hpp"
#include "mfg/riccati.hpp"
#include "mfg/spectral.hpp"
#include "mfg/vectorize.hpp"
#include "support.hpp"

using namespace mfg;
using namespace mfg::testing;

namespace {

Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = unit(gen);
    return m;
}

Matrix random_symmetric(std::mt19937_64& gen, std::size_t n) {
    Matrix m = random_matrix(gen, n, n);
    return 0.5 * (m + m.transpose());
}

double min_sym_eig(const Matrix& a) {
    Vector ev;
    sym_eig(a, ev);
    return ev.front();
}

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("vectorization duality") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t n = 1; n <= 6; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            const Matrix p = random_symmetric(gen, n);
            Vector x(n), y(n);
            for (auto& v : x) v = unit(gen);
            for (auto& v : y) v = unit(gen);

            // colv(x)'colm(P) = x'Px
            double quad = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) quad += x[i] * p(i, j) * x[j];
            CHECK(std::abs(dot(colv(x), colm(p)) - quad) < 1e-12 * (1.0 + std::abs(quad)));

            // u'Mv = kron(v, u)'col(M) for a general rectangular M
            const Matrix m = random_matrix(gen, n, 3);
            Vector v3(3);
            for (auto& v : v3) v = unit(gen);
            double bil = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < 3; ++j) bil += x[i] * m(i, j) * v3[j];
            CHECK(std::abs(dot(kron(v3, x), col(m)) - bil) < 1e-12 * (1.0 + std::abs(bil)));

            // row'col(P) = compress_pairs(row)'colm(P) for symmetric P
            const Vector row = kron(x, y);
            CHECK(std::abs(dot(row, col(p)) - dot(compress_pairs(row, n), colm(p))) < 1e-12);

            // round trips
            CHECK(max_elem_diff(uncol(col(m), n, 3), m) == 0.0);
            CHECK(max_elem_diff(uncolm(colm(p), n), p) < 1e-15);
        }
    }
}

TEST_CASE("kron matrix identity") {
    std::mt19937_64 gen(8);
    const Matrix a = random_matrix(gen, 3, 2), b = random_matrix(gen, 2, 4);
    const Matrix x = random_matrix(gen, 2, 4);
    // col(a x b') = kron(b, a) col(x)
    const Vector lhs = col(a * x * b.transpose());
    const Vector rhs = kron(b, a) * col(x);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}

TEST_CASE("least squares recovers a planted solution") {
    std::mt19937_64 gen(9);
    const Matrix a = random_matrix(gen, 40, 7);
    Vector theta(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& v : theta) v = unit(gen);
    const Vector b = a * theta;
    const LeastSquaresResult ls = least_squares(a, b);
    for (std::size_t i = 0; i < 7; ++i) CHECK(ls.theta[i] == doctest::Approx(theta[i]).epsilon(1e-10));
    CHECK(ls.residual_norm < 1e-10);
    CHECK(ls.condition >= 1.0);
}

TEST_CASE("least squares inconsistent system residual") {
    Matrix a(2, 1);
    a(0, 0) = 1.0;
    a(1, 0) = 1.0;
    const LeastSquaresResult ls = least_squares(a, Vector{1.0, 0.0});
    CHECK(ls.theta[0] == doctest::Approx(0.5));
    CHECK(ls.residual_norm == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("least squares rank deficiency is an error") {
    std::mt19937_64 gen(10);
    Matrix a = random_matrix(gen, 20, 4);
    for (std::size_t i = 0; i < 20; ++i) a(i, 3) = 2.0 * a(i, 1);  // dependent column
    const Vector b(20, 1.0);
    CHECK_THROWS_AS(least_squares(a, b), RankDeficientError);
    try {
        least_squares(a, b);
    } catch (const RankDeficientError& e) {
        CHECK(e.achieved == 3);
        CHECK(e.required == 4);
    }
}

TEST_CASE("singular values and spectral norm") {
    Matrix a(2, 3);
    a(0, 0) = 3.0;
    a(1, 1) = -2.0;
    const Vector sv = singular_values(a);
    REQUIRE(sv.size() == 2);
    CHECK(sv[0] == doctest::Approx(3.0));
    CHECK(sv[1] == doctest::Approx(2.0));
    CHECK(spectral_norm(a) == doctest::Approx(3.0));
    CHECK(numerical_rank(a) == 2);

    std::mt19937_64 gen(11);
    const Matrix q = random_matrix(gen, 5, 5);
    CHECK(spectral_norm(q.transpose() * q) ==
          doctest::Approx(spectral_norm(q) * spectral_norm(q)).epsilon(1e-9));
}

TEST_CASE("symmetric eigensolver") {
    const Matrix a{{2.0, 1.0}, {1.0, 2.0}};
    Vector ev;
    Matrix v;
    sym_eig(a, ev, &v);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0] == doctest::Approx(1.0));
    CHECK(ev[1] == doctest::Approx(3.0));
    // columns orthonormal, a v = v diag(ev)
    const Matrix vtv = v.transpose() * v;
    CHECK(max_elem_diff(vtv, Matrix::identity(2)) < 1e-12);
    const Matrix av = a * v;
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < 2; ++i) CHECK(av(i, j) == doctest::Approx(ev[j] * v(i, j)));
}

TEST_CASE("sylvester solve") {
    std::mt19937_64 gen(12);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 1 + rep % 4;
        Matrix f = random_matrix(gen, n, n);
        Matrix g = random_matrix(gen, n, n);
        for (std::size_t i = 0; i < n; ++i) {
            f(i, i) -= 3.0;  // keep spec(f) and -spec(g) apart
            g(i, i) -= 3.0;
        }
        const Matrix planted = random_matrix(gen, n, n);
        const Matrix h = -1.0 * (f * planted + planted * g);
        CHECK(max_elem_diff(solve_sylvester(f, g, h), planted) < 1e-9);
    }
    const Matrix zero(1, 1);
    CHECK_THROWS_AS(solve_sylvester(zero, zero, Matrix::identity(1)), SingularPencilError);
}

TEST_CASE("matrix exponential closed forms") {
    CHECK(max_elem_diff(expm(Matrix(3, 3)), Matrix::identity(3)) == 0.0);

    const double th = 0.7;
    const Matrix rot{{0.0, -th}, {th, 0.0}};
    const Matrix e = expm(rot);
    CHECK(e(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-13));
    CHECK(e(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-13));

    std::mt19937_64 gen(13);
    const Matrix a = random_matrix(gen, 4, 4);
    CHECK(max_elem_diff(expm(a) * expm(-1.0 * a), Matrix::identity(4)) < 1e-12);

    // large-norm input exercises scaling and squaring
    const Matrix big = a * 40.0;
    const Matrix half = expm(big * 0.5);
    CHECK(max_elem_diff(expm(big), half * half) < 1e-6 * (1.0 + expm(big).max_abs()));
}

TEST_CASE("linear ode integrator against the exponential") {
    std::mt19937_64 gen(14);
    Matrix f = random_matrix(gen, 3, 3);
    for (std::size_t i = 0; i < 3; ++i) f(i, i) -= 1.0;
    const Vector x0{1.0, -0.5, 2.0};
    const TimeGrid grid{0.0, 1e-3, 1001};
    const Path path = integrate_linear_ode(f, nullptr, x0, grid);
    const Vector ref = expm(f * grid.t_end()) * x0;
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(path.frame(grid.count - 1)[i] == doctest::Approx(ref[i]).epsilon(1e-10));

    // pure forcing: dx = cos t -> sin t
    const TimeGrid g2{0.0, 1e-3, 2001};
    const Path forced = integrate_linear_ode(
        Matrix(1, 1), [](double t) { return Vector{std::cos(t)}; }, Vector{0.0}, g2);
    CHECK(forced.frame(g2.count - 1)[0] == doctest::Approx(std::sin(g2.t_end())).epsilon(1e-12));
}

TEST_CASE("general eigenvalues and hurwitz test") {
    const Matrix tri{{-1.0, 5.0, 0.0}, {0.0, -2.5, 1.0}, {0.0, 0.0, 0.04}};
    const SpectralReport rep = spectral(tri);
    CHECK(rep.stability_margin == doctest::Approx(0.04));
    CHECK_FALSE(rep.hurwitz);
    CHECK(spectral(tri, 0.05).hurwitz);

    // complex pair: eigenvalues of a rotation-plus-decay block
    const Matrix spiral{{-0.5, -2.0}, {2.0, -0.5}};
    const SpectralReport rep2 = spectral(spiral);
    CHECK(rep2.stability_margin == doctest::Approx(-0.5));
    CHECK(rep2.hurwitz);
    bool found = false;
    for (const auto& ev : rep2.eigenvalues)
        if (std::abs(ev - std::complex<double>(-0.5, 2.0)) < 1e-10) found = true;
    CHECK(found);
}

TEST_CASE("real schur factorization and ordering") {
    std::mt19937_64 gen(15);
    const Matrix a = random_matrix(gen, 5, 5);
    SchurResult s = real_schur(a);
    CHECK(max_elem_diff(s.z * s.t * s.z.transpose(), a) < 1e-10 * (1.0 + a.max_abs()));
    CHECK(max_elem_diff(s.z.transpose() * s.z, Matrix::identity(5)) < 1e-12);
    // quasi-triangular: nothing below the first subdiagonal
    for (std::size_t i = 2; i < 5; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) CHECK(std::abs(s.t(i, j)) < 1e-12);

    std::vector<bool> select(s.eigenvalues.size());
    std::size_t stable = 0;
    for (std::size_t i = 0; i < select.size(); ++i) {
        select[i] = s.eigenvalues[i].real() < 0.0;
        stable += select[i];
    }
    order_schur(s, select);
    CHECK(max_elem_diff(s.z * s.t * s.z.transpose(), a) < 1e-9 * (1.0 + a.max_abs()));
    for (std::size_t i = 0; i < stable; ++i) CHECK(s.eigenvalues[i].real() < 0.0);
}

TEST_CASE("stable graph solution on scalar blocks") {
    // scalar feedback block: rho p = 2 a p - p^2 b^2/r + q
    const double a = -1.0, b = 1.0, q = 1.0, r = 1.0, rho = 0.1;
    const Matrix h1 = hamiltonian_h1(Matrix{{a}}, Matrix{{b}}, Matrix{{q}}, Matrix{{r}}, rho);
    const double p = stable_graph_solution(h1)(0, 0);
    const double twoa = 2.0 * a - rho;
    const double root = (twoa + std::sqrt(twoa * twoa + 4.0 * q * b * b / r)) / (2.0 * b * b / r);
    CHECK(p == doctest::Approx(root).epsilon(1e-12));
    CHECK(are_residual(Matrix{{a}}, Matrix{{b}}, Matrix{{q}}, Matrix{{r}}, rho, Matrix{{p}}) <
          1e-12);

    // scalar coupled block picks the stabilizing root as well
    const double g = -0.5, gamma = 0.5;
    const Matrix h2 = hamiltonian_h2(Matrix{{a}}, Matrix{{g}}, Matrix{{b}}, Matrix{{q}},
                                     Matrix{{gamma}}, Matrix{{r}}, rho);
    const double p12 = stable_graph_solution(h2)(0, 0);
    CHECK(are_residual_coupled(Matrix{{a}}, Matrix{{g}}, Matrix{{b}}, Matrix{{q}},
                               Matrix{{gamma}}, Matrix{{r}}, rho, Matrix{{p12}}) < 1e-12);
    CHECK(a + g - b * b / r * p12 < rho / 2.0);  // closed loop stable
}

TEST_CASE("stable graph solution failure modes") {
    const Matrix no_split{{0.0, 1.0}, {-1.0, 0.0}};  // +-i, nothing stable
    CHECK_THROWS_AS(stable_graph_solution(no_split), NotCSplittingError);
    const Matrix bad_graph{{1.0, 0.0}, {5.0, -1.0}};  // stable eigvec (0, 1)
    CHECK_THROWS_AS(stable_graph_solution(bad_graph), NotGraphSubspaceError);
}

TEST_CASE("hamiltonian helpers agree with the model overload") {
    const LqgGameModel mod = example1_model();
    CHECK(max_elem_diff(hamiltonian(mod, Ham::H1),
                        hamiltonian_h1(mod.A, mod.B, mod.Q, mod.R, mod.rho)) == 0.0);
    CHECK(max_elem_diff(hamiltonian(mod, Ham::H2),
                        hamiltonian_h2(mod.A, mod.G, mod.B, mod.Q, mod.Gamma, mod.R, mod.rho)) ==
          0.0);
}

TEST_CASE("policy iteration reproduces the published feedback solution") {
    const LqgGameModel mod = example1_model();
    const Matrix k0{{35.0, 25.0}};
    const IterationHistory hist = kleinman_solve(mod.A, mod.B, mod.Q, mod.R, mod.rho, k0);
    REQUIRE(hist.converged);
    CHECK(hist.stop_reason == StopReason::criterion_met);
    CHECK(max_elem_diff(hist.final().p, example1_p11()) < 1e-3);
    CHECK(max_elem_diff(hist.final().k, example1_k1()) < 1e-3);
    CHECK(are_residual(mod.A, mod.B, mod.Q, mod.R, mod.rho, hist.final().p) <
          1e-8 * (1.0 + hist.final().p.norm_fro()));

    // graph-subspace route lands on the same solution
    const Matrix p_graph = stable_graph_solution(hamiltonian(mod, Ham::H1));
    CHECK(max_elem_diff(hist.final().p, p_graph) < 1e-8);
}

TEST_CASE("policy iteration agrees with the graph subspace on random systems") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const std::size_t n = 1 + s % 4, m = 1 + s % 2;
        const LqgGameModel mod = random_stable_system(1000 + s, n, m, false);
        const IterationHistory hist =
            kleinman_solve(mod.A, mod.B, mod.Q, mod.R, mod.rho, Matrix(m, n));
        REQUIRE(hist.converged);
        const Matrix p_graph =
            stable_graph_solution(hamiltonian_h1(mod.A, mod.B, mod.Q, mod.R, mod.rho));
        CHECK(max_elem_diff(hist.final().p, p_graph) < 1e-8);
        CHECK(are_residual(mod.A, mod.B, mod.Q, mod.R, mod.rho, hist.final().p) <
              1e-8 * (1.0 + hist.final().p.norm_fro()));
        // closed loop is shifted-Hurwitz
        const Matrix acl = mod.A - mod.B * hist.final().k;
        CHECK(spectral(acl, mod.rho / 2.0).hurwitz);
    }
}

TEST_CASE("policy iteration monotonicity and quadratic convergence") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const std::size_t n = 2 + s % 3;
        const LqgGameModel mod = random_stable_system(2000 + s, n, 1, false);
        SolverConfig cfg;
        cfg.xi = 1e-12;
        const IterationHistory hist =
            kleinman_solve(mod.A, mod.B, mod.Q, mod.R, mod.rho, Matrix(1, n), cfg);
        REQUIRE(hist.converged);
        const Matrix p_star = hist.final().p;
        // P^k decreasing (after the first stabilizing sweep) and above P*
        for (std::size_t k = 1; k + 1 < hist.iterates.size(); ++k) {
            CHECK(min_sym_eig(hist.iterates[k].p - hist.iterates[k + 1].p) > -1e-8);
            CHECK(min_sym_eig(hist.iterates[k].p - p_star) > -1e-8);
        }
        // fitted quadratic-rate constant stays bounded over the tail
        Vector errs;
        for (const auto& it : hist.iterates) errs.push_back((it.p - p_star).norm_fro());
        Vector cs;
        for (std::size_t k = 0; k + 1 < errs.size(); ++k)
            if (errs[k] > 1e-12 && errs[k + 1] > 1e-15) cs.push_back(errs[k + 1] / (errs[k] * errs[k]));
        for (std::size_t i = cs.size() >= 3 ? cs.size() - 3 : 0; i + 1 < cs.size(); ++i)
            CHECK(cs[i + 1] < 10.0 * cs[i] + 1e-12);
    }
}

TEST_CASE("policy iteration stop semantics") {
    const LqgGameModel mod = example1_model();
    // non-stabilizing start is rejected up front
    CHECK_THROWS_AS(kleinman_solve(mod.A, mod.B, mod.Q, mod.R, mod.rho, Matrix(1, 2)),
                    NotStabilizingError);
    // iteration budget of one ends with max_iter
    SolverConfig tight;
    tight.max_iter = 1;
    tight.xi = 1e-300;
    const IterationHistory hist =
        kleinman_solve(mod.A, mod.B, mod.Q, mod.R, mod.rho, Matrix{{35.0, 25.0}}, tight);
    CHECK_FALSE(hist.converged);
    CHECK(hist.stop_reason == StopReason::max_iter);
    CHECK(hist.iterates.size() == 1);
}

TEST_CASE("coupled-block oracle reproduces the published feedforward solution") {
    const LqgGameModel mod = example1_model();
    const Matrix p12 = stable_graph_solution(hamiltonian(mod, Ham::H2));
    CHECK(max_elem_diff(p12, example1_p12()) < 1e-3);
    const Matrix k2 = solve_lu(mod.R, mod.B.transpose() * p12);
    CHECK(max_elem_diff(k2, example1_k2()) < 1e-3);
    CHECK(are_residual_coupled(mod.A, mod.G, mod.B, mod.Q, mod.Gamma, mod.R, mod.rho, p12) <
          1e-8 * (1.0 + p12.norm_fro()));
    CHECK(spectral(mod.A + mod.G - mod.B * k2, mod.rho / 2.0).hurwitz);
}
