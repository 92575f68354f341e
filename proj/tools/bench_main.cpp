#include <chrono>
#include <cstdio>

#include "mfg/datapipe.hpp"
#include "mfg/parallel.hpp"
#include "mfg/population.hpp"

namespace {

using namespace mfg;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

LqgGameModel bench_model() {
    LqgGameModel m;
    m.A = Matrix(4, 4);
    const double a[4][4] = {{-3.0, 0.5, 0.0, 0.2},
                            {0.4, -2.5, 0.3, 0.0},
                            {0.0, 0.1, -2.0, 0.5},
                            {0.3, 0.0, 0.2, -3.5}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m.A(i, j) = a[i][j];
    m.G = Matrix(4, 4);
    for (int i = 0; i < 4; ++i) m.G(i, i) = -0.2;
    m.B = Matrix(4, 1);
    m.B(3, 0) = 1.0;
    m.D = Matrix(4, 1);
    m.D(3, 0) = 0.01;
    m.Q = Matrix(4, 4);
    for (int i = 0; i < 4; ++i) m.Q(i, i) = 1.0;
    m.R = Matrix(1, 1);
    m.R(0, 0) = 1.0;
    m.Gamma = Matrix(4, 4);
    for (int i = 0; i < 4; ++i) m.Gamma(i, i) = 0.5;
    m.rho = 0.1;
    m.init_mean = Vector(4, 1.0);
    m.init_box.assign(4, {0.0, 2.0});
    return m;
}

bool same_bits(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

bool same_bits(const EnsembleTrajectories& a, const EnsembleTrajectories& b) {
    if (a.m_realizations() != b.m_realizations()) return false;
    for (std::size_t r = 0; r < a.m_realizations(); ++r) {
        const auto& ra = a.realizations[r];
        const auto& rb = b.realizations[r];
        for (std::size_t i = 0; i < ra.agent_states.size(); ++i)
            if (!same_bits(ra.agent_states[i].data, rb.agent_states[i].data) ||
                !same_bits(ra.agent_inputs[i].data, rb.agent_inputs[i].data))
                return false;
        if (!same_bits(ra.pop_avg_state.data, rb.pop_avg_state.data) ||
            !same_bits(ra.pop_avg_input.data, rb.pop_avg_input.data))
            return false;
    }
    return true;
}

bool same_bits(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

}  // namespace

int main() {
    const LqgGameModel model = bench_model();
    const Matrix k0(1, 4);  // zero behavior gain; the bench model is open-loop stable

    SimulationOptions opt;
    opt.n_agents = 50;
    opt.horizon = 2.0;
    opt.dt = 1e-3;
    opt.seed = 42;
    opt.m_realizations = 24;
    opt.recorded_agents = {0, 1};
    opt.record_averages = true;
    auto specs = sample_noise_specs(opt.n_agents, model.m(), 40, {1.0, 10.0}, {-100.0, 100.0},
                                    false, opt.seed);

    std::printf("threads available: %d\n", thread_limit());

    opt.parallel = false;
    auto t0 = std::chrono::steady_clock::now();
    EnsembleTrajectories serial_ens = simulate_population(model, k0, nullptr, specs, opt);
    const double t_sim_serial = seconds_since(t0);

    opt.parallel = true;
    t0 = std::chrono::steady_clock::now();
    EnsembleTrajectories parallel_ens = simulate_population(model, k0, nullptr, specs, opt);
    const double t_sim_parallel = seconds_since(t0);

    const bool sim_match = same_bits(serial_ens, parallel_ens);
    std::printf("simulate_population  serial %.3fs  parallel %.3fs  bitwise %s\n", t_sim_serial,
                t_sim_parallel, sim_match ? "equal" : "DIFFERENT");

    ExpectationPaths paths = merge_expectation_paths(
        expectation_paths(serial_ens, ExpectationMode::pair_difference, 0, 1),
        expectation_paths(serial_ens, ExpectationMode::population_average));

    SamplingPlan plan;
    plan.t1 = 0.0;
    plan.l = 18;
    plan.Ts = 0.1;
    plan.T = 0.1;
    plan.quad_substep = 1e-3;

    t0 = std::chrono::steady_clock::now();
    RegressionData serial_data = build_regression_data(paths, plan, model.rho, true, false);
    const double t_reg_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    RegressionData parallel_data = build_regression_data(paths, plan, model.rho, true, true);
    const double t_reg_parallel = seconds_since(t0);

    const bool reg_match = same_bits(serial_data.error_block.int_xx, parallel_data.error_block.int_xx) &&
                           same_bits(serial_data.error_block.delta_colv, parallel_data.error_block.delta_colv) &&
                           same_bits(serial_data.average_block.int_xx, parallel_data.average_block.int_xx) &&
                           same_bits(serial_data.cross_block.delta_hat, parallel_data.cross_block.delta_hat) &&
                           same_bits(serial_data.cross_block.int_xt_xb, parallel_data.cross_block.int_xt_xb);
    std::printf("build_regression_data  serial %.3fs  parallel %.3fs  bitwise %s\n", t_reg_serial,
                t_reg_parallel, reg_match ? "equal" : "DIFFERENT");

    return (sim_match && reg_match) ? 0 : 1;
}
