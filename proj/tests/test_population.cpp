#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfg/ode.hpp"
#include "mfg/population.hpp"
#include "support.hpp"

using namespace mfg;
using namespace mfg::testing;

namespace {

bool same_bits(const Path& a, const Path& b) {
    return a.dim == b.dim && a.data == b.data;
}

bool same_bits(const EnsembleTrajectories& a, const EnsembleTrajectories& b) {
    if (a.realizations.size() != b.realizations.size()) return false;
    for (std::size_t r = 0; r < a.realizations.size(); ++r) {
        const auto& ra = a.realizations[r];
        const auto& rb = b.realizations[r];
        if (ra.agent_states.size() != rb.agent_states.size()) return false;
        for (std::size_t i = 0; i < ra.agent_states.size(); ++i)
            if (!same_bits(ra.agent_states[i], rb.agent_states[i]) ||
                !same_bits(ra.agent_inputs[i], rb.agent_inputs[i]))
                return false;
        if (!same_bits(ra.pop_avg_state, rb.pop_avg_state) ||
            !same_bits(ra.pop_avg_input, rb.pop_avg_input))
            return false;
    }
    return true;
}

LqgGameModel point_init(LqgGameModel mod) {
    for (std::size_t i = 0; i < mod.n(); ++i)
        mod.init_box[i] = {mod.init_mean[i], mod.init_mean[i]};
    return mod;
}

LqgGameModel noiseless(LqgGameModel mod) {
    mod.D = Matrix(mod.n(), mod.d());
    return mod;
}

}  // namespace

TEST_CASE("exploration noise closed form") {
    NoiseSpec spec;
    spec.amplitude = {2.0, 0.5};
    spec.frequencies = {1.0, 3.0, -2.0, 0.5};  // channel-major, two per channel
    spec.j_count = 2;
    for (double t : {0.0, 0.3, 1.7}) {
        const Vector l = exploration_noise(spec, t);
        REQUIRE(l.size() == 2);
        CHECK(l[0] == doctest::Approx(2.0 * (std::sin(1.0 * t) + std::sin(3.0 * t))));
        CHECK(l[1] == doctest::Approx(0.5 * (std::sin(-2.0 * t) + std::sin(0.5 * t))));
    }
}

TEST_CASE("noise spec sampling ranges and sharing") {
    const auto specs = sample_noise_specs(5, 2, 10, {1.0, 10.0}, {-100.0, 100.0}, false, 42);
    REQUIRE(specs.size() == 5);
    for (const auto& s : specs) {
        REQUIRE(s.amplitude.size() == 2);
        REQUIRE(s.frequencies.size() == 20);
        CHECK_FALSE(s.shared);
        for (double a : s.amplitude) {
            CHECK(a >= 1.0);
            CHECK(a <= 10.0);
        }
        for (double w : s.frequencies) {
            CHECK(w >= -100.0);
            CHECK(w <= 100.0);
        }
    }
    // distinct draws per agent
    CHECK(specs[0].frequencies != specs[1].frequencies);
    // determinism
    const auto again = sample_noise_specs(5, 2, 10, {1.0, 10.0}, {-100.0, 100.0}, false, 42);
    CHECK(specs[2].frequencies == again[2].frequencies);

    const auto shared = sample_noise_specs(5, 2, 10, {1.0, 10.0}, {-100.0, 100.0}, true, 42);
    for (const auto& s : shared) {
        CHECK(s.shared);
        CHECK(s.frequencies == shared[0].frequencies);
        CHECK(s.amplitude == shared[0].amplitude);
    }
    // the common draw is not agent 0's individual draw
    CHECK(shared[0].frequencies != specs[0].frequencies);
}

TEST_CASE("simulation is deterministic and schedule independent") {
    const LqgGameModel mod = example1_model();
    SimulationOptions opt;
    opt.n_agents = 6;
    opt.horizon = 0.5;
    opt.dt = 1e-3;
    opt.seed = 3;
    opt.m_realizations = 8;
    opt.recorded_agents = {0, 1};
    opt.record_averages = true;
    const auto specs = sample_noise_specs(6, 1, 20, {1.0, 5.0}, {-50.0, 50.0}, false, 3);
    const Matrix k0{{35.0, 25.0}};

    const EnsembleTrajectories a = simulate_population(mod, k0, nullptr, specs, opt);
    CHECK(a.grid.count == 501);
    CHECK(a.n_agents == 6);
    REQUIRE(a.realizations.size() == 8);
    REQUIRE(a.realizations[0].agent_states.size() == 2);

    const EnsembleTrajectories b = simulate_population(mod, k0, nullptr, specs, opt);
    CHECK(same_bits(a, b));

    SimulationOptions serial = opt;
    serial.parallel = false;
    const EnsembleTrajectories c = simulate_population(mod, k0, nullptr, specs, serial);
    CHECK(same_bits(a, c));
}

namespace {

// max deviation of the simulated pair-difference / population-average paths
// from fourth-order integrations of the deterministic systems they satisfy
// when D = 0
double reduction_error(double dt, double amp_scale) {
    LqgGameModel mod = noiseless(example1_model());
    mod.init_mean = {amp_scale, amp_scale};
    mod.init_box = {{amp_scale, amp_scale}, {amp_scale, amp_scale}};
    const Matrix k0{{35.0, 25.0}};
    SimulationOptions opt;
    opt.n_agents = 4;
    opt.horizon = 5.0;
    opt.dt = dt;
    opt.seed = 11;
    opt.m_realizations = 1;
    opt.recorded_agents = {0, 1};
    opt.record_averages = true;
    const auto specs =
        sample_noise_specs(4, 1, 20, {amp_scale, 5.0 * amp_scale}, {-10.0, 10.0}, false, 11);
    const EnsembleTrajectories ens = simulate_population(mod, k0, nullptr, specs, opt);

    const ExpectationPaths pair = expectation_paths(ens, ExpectationMode::pair_difference, 0, 1);
    const ExpectationPaths avg = expectation_paths(ens, ExpectationMode::population_average);

    auto ell = [&](std::size_t i, double t) { return exploration_noise(specs[i], t); };
    const Path ref_pair = integrate_linear_ode(
        mod.A - mod.B * k0,
        [&](double t) {
            Vector l = ell(0, t);
            const Vector l2 = ell(1, t);
            for (std::size_t c = 0; c < l.size(); ++c) l[c] -= l2[c];
            return mod.B * l;
        },
        Vector(2, 0.0), ens.grid);
    const Path ref_avg = integrate_linear_ode(
        mod.A + mod.G - mod.B * k0,
        [&](double t) {
            Vector l(1, 0.0);
            for (std::size_t i = 0; i < 4; ++i) {
                const Vector li = ell(i, t);
                for (std::size_t c = 0; c < l.size(); ++c) l[c] += li[c] / 4.0;
            }
            return mod.B * l;
        },
        mod.init_mean, ens.grid);

    double worst = 0.0;
    for (std::size_t k = 0; k < ens.grid.count; ++k)
        for (std::size_t i = 0; i < 2; ++i) {
            worst = std::max(worst, std::abs(pair.xt.frame(k)[i] - ref_pair.frame(k)[i]));
            worst = std::max(worst, std::abs(avg.xb.frame(k)[i] - ref_avg.frame(k)[i]));
        }
    return worst;
}

}  // namespace

TEST_CASE("noise-free paths reduce to the deterministic systems") {
    // truncation is one-step Euler: absolute bound at gentle signal scales...
    const double dt = 1e-3;
    CHECK(reduction_error(dt, 0.05) < 10.0 * dt);
    // ...and first-order in dt at full scale (halving dt halves the error)
    const double ratio = reduction_error(1e-3, 1.0) / reduction_error(5e-4, 1.0);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("shared noise with degenerate inits collapses the population") {
    // indistinguishable agents: same exploration, no diffusion, point inits.
    // two agents keep the average exact in floating point ((x + x)/2 = x)
    const LqgGameModel mod = noiseless(point_init(example1_model()));
    SimulationOptions opt;
    opt.n_agents = 2;
    opt.horizon = 0.4;
    opt.dt = 1e-3;
    opt.seed = 7;
    opt.m_realizations = 2;
    opt.recorded_agents = {0, 1};
    opt.record_averages = true;
    const auto specs = sample_noise_specs(2, 1, 20, {1.0, 5.0}, {-50.0, 50.0}, true, 7);
    const EnsembleTrajectories ens =
        simulate_population(mod, Matrix{{35.0, 25.0}}, nullptr, specs, opt);
    for (const auto& rec : ens.realizations) {
        CHECK(same_bits(rec.pop_avg_input, rec.agent_inputs[0]));
        CHECK(same_bits(rec.pop_avg_state, rec.agent_states[0]));
        CHECK(same_bits(rec.agent_states[0], rec.agent_states[1]));
    }
    // and the pair difference is exactly zero
    const ExpectationPaths pair = expectation_paths(ens, ExpectationMode::pair_difference, 0, 1);
    for (double v : pair.xt.data) CHECK(v == 0.0);
    for (double v : pair.ut.data) CHECK(v == 0.0);
}

TEST_CASE("shared noise keeps expectations aligned under randomness") {
    // with diffusion and random inits the paths differ agent to agent, but
    // the average input still estimates the common signal minus K xbar
    const LqgGameModel mod = example1_model();
    SimulationOptions opt;
    opt.n_agents = 50;
    opt.horizon = 0.2;
    opt.dt = 1e-3;
    opt.seed = 19;
    opt.m_realizations = 40;
    opt.recorded_agents = {0};
    opt.record_averages = true;
    const Matrix k0{{35.0, 25.0}};
    const auto specs = sample_noise_specs(50, 1, 20, {1.0, 5.0}, {-50.0, 50.0}, true, 19);
    const EnsembleTrajectories ens = simulate_population(mod, k0, nullptr, specs, opt);
    const ExpectationPaths avg = expectation_paths(ens, ExpectationMode::population_average);
    const std::size_t last = ens.grid.count - 1;
    const double t = ens.grid.time(last);
    const Vector l = exploration_noise(specs[0], t);
    double kx = 0.0;
    for (std::size_t j = 0; j < 2; ++j) kx += k0(0, j) * avg.xb.frame(last)[j];
    CHECK(avg.ub.frame(last)[0] == doctest::Approx(l[0] - kx).epsilon(1e-10));
}

TEST_CASE("monte carlo error shrinks like one over m") {
    const LqgGameModel mod = example1_model();
    const Matrix k0{{35.0, 25.0}};
    const auto specs = sample_noise_specs(2, 1, 20, {1.0, 5.0}, {-50.0, 50.0}, false, 23);

    // sample variance of the pair-difference estimate at the horizon across
    // independent batches, for growing realization counts
    const std::vector<std::size_t> ms{100, 1000, 10000};
    const std::size_t batches = 16;
    Vector logm, logv;
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
        Vector samples;
        for (std::size_t b = 0; b < batches; ++b) {
            SimulationOptions opt;
            opt.n_agents = 2;
            opt.horizon = 0.25;
            opt.dt = 1e-3;
            opt.seed = 1000 * (mi + 1) + b;
            opt.m_realizations = ms[mi];
            opt.recorded_agents = {0, 1};
            opt.record_averages = false;
            const EnsembleTrajectories ens = simulate_population(mod, k0, nullptr, specs, opt);
            const ExpectationPaths pair =
                expectation_paths(ens, ExpectationMode::pair_difference, 0, 1);
            samples.push_back(pair.xt.frame(ens.grid.count - 1)[0]);
        }
        double mean = 0.0;
        for (double v : samples) mean += v / samples.size();
        double var = 0.0;
        for (double v : samples) var += (v - mean) * (v - mean) / (samples.size() - 1);
        logm.push_back(std::log10(static_cast<double>(ms[mi])));
        logv.push_back(std::log10(var));
    }
    // least-squares slope of log var against log m
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        mx += logm[i] / 3.0;
        my += logv[i] / 3.0;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        num += (logm[i] - mx) * (logv[i] - my);
        den += (logm[i] - mx) * (logm[i] - mx);
    }
    const double slope = num / den;
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.2));
}

TEST_CASE("diverging state is reported with its time") {
    LqgGameModel mod;
    mod.A = {{100.0}};
    mod.G = {{0.0}};
    mod.B = {{1.0}};
    mod.D = Matrix(1, 1);
    mod.Q = Matrix::identity(1);
    mod.R = Matrix::identity(1);
    mod.Gamma = {{0.0}};
    mod.rho = 0.1;
    mod.init_mean = {1.0};
    mod.init_box = {{1.0, 1.0}};
    SimulationOptions opt;
    opt.n_agents = 1;
    opt.horizon = 300.0;
    opt.dt = 1.0;
    opt.m_realizations = 1;
    opt.recorded_agents = {0};
    CHECK_THROWS_AS(simulate_population(mod, Matrix(1, 1), nullptr, {}, opt),
                    NonfiniteStateError);
}

TEST_CASE("equilibrium rollout plays the stated control law") {
    const LqgGameModel mod = noiseless(point_init(example1_model()));
    const Matrix k1 = example1_k1(), k2 = example1_k2();
    SimulationOptions opt;
    opt.n_agents = 3;
    opt.horizon = 0.3;
    opt.dt = 1e-3;
    opt.seed = 5;
    opt.m_realizations = 1;
    opt.recorded_agents = {0};
    opt.record_averages = true;

    // hand it an arbitrary smooth mean-field path
    Path mf(2, 301);
    for (std::size_t k = 0; k < 301; ++k) {
        const double t = 1e-3 * static_cast<double>(k);
        mf.frame(k)[0] = std::cos(t);
        mf.frame(k)[1] = 0.5 * std::sin(3.0 * t);
    }
    const EnsembleTrajectories ens = rollout_equilibrium(mod, k1, k2, mf, opt);
    const auto& rec = ens.realizations[0];
    for (std::size_t k = 0; k < ens.grid.count; ++k) {
        double u = 0.0;
        for (std::size_t j = 0; j < 2; ++j)
            u -= k1(0, j) * rec.agent_states[0].frame(k)[j] +
                 (k2(0, j) - k1(0, j)) * mf.frame(k)[j];
        CHECK(rec.agent_inputs[0].frame(k)[0] == doctest::Approx(u).epsilon(1e-12));
    }
}

TEST_CASE("population average helpers") {
    const LqgGameModel mod = example1_model();
    SimulationOptions opt;
    opt.n_agents = 3;
    opt.horizon = 0.1;
    opt.dt = 1e-2;
    opt.seed = 2;
    opt.m_realizations = 4;
    opt.recorded_agents = {0, 1};
    opt.record_averages = true;
    const auto specs = sample_noise_specs(3, 1, 5, {1.0, 2.0}, {-10.0, 10.0}, false, 2);
    const EnsembleTrajectories ens =
        simulate_population(mod, Matrix{{35.0, 25.0}}, nullptr, specs, opt);

    const Path avg = population_average_state(ens);
    for (std::size_t k = 0; k < ens.grid.count; ++k)
        for (std::size_t i = 0; i < 2; ++i) {
            double acc = 0.0;
            for (const auto& rec : ens.realizations) acc += rec.pop_avg_state.frame(k)[i];
            CHECK(avg.frame(k)[i] == doctest::Approx(acc / 4.0).epsilon(1e-14));
        }

    const ExpectationPaths pair = expectation_paths(ens, ExpectationMode::pair_difference, 0, 1);
    for (std::size_t k = 0; k < ens.grid.count; ++k)
        for (std::size_t i = 0; i < 2; ++i) {
            double acc = 0.0;
            for (const auto& rec : ens.realizations)
                acc += rec.agent_states[0].frame(k)[i] - rec.agent_states[1].frame(k)[i];
            CHECK(pair.xt.frame(k)[i] == doctest::Approx(acc / 4.0).epsilon(1e-14));
        }

    // merging is grid-checked
    ExpectationPaths avg_paths = expectation_paths(ens, ExpectationMode::population_average);
    ExpectationPaths merged = merge_expectation_paths(pair, avg_paths);
    CHECK(merged.xt.data == pair.xt.data);
    CHECK(merged.xb.data == avg_paths.xb.data);
    ExpectationPaths other = avg_paths;
    other.grid.dt *= 2.0;
    CHECK_THROWS_AS(merge_expectation_paths(pair, other), GridMismatchError);
}
