#include "mfg/population.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>

#include "mfg/linalg.hpp"
#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError(field + ": " + what, field);
}

}  // namespace

void LqgGameModel::validate() const {
    const std::size_t nn = A.rows();
    require(nn > 0 && A.cols() == nn, "model.A", "must be square and non-empty");
    require(G.rows() == nn && G.cols() == nn, "model.G", "must be n x n");
    require(B.rows() == nn && B.cols() >= 1, "model.B", "must be n x m with m >= 1");
    require(D.empty() || D.rows() == nn, "model.D", "must be n x d");
    require(Q.rows() == nn && Q.cols() == nn, "model.Q", "must be n x n");
    require(Gamma.rows() == nn && Gamma.cols() == nn, "model.Gamma", "must be n x n");
    const std::size_t mm = B.cols();
    require(R.rows() == mm && R.cols() == mm, "model.R", "must be m x m");
    require(rho > 0.0, "model.rho", "must be positive");
    require(init_mean.size() == nn, "model.init_mean", "must have n entries");
    require(init_box.size() == nn, "model.init_box", "must have n coordinate ranges");
    for (const auto& [lo, hi] : init_box)
        require(lo <= hi, "model.init_box", "ranges must have lo <= hi");

    const double q_scale = 1.0 + Q.max_abs();
    require(symmetry_defect(Q) <= 1e-9 * q_scale, "model.Q", "must be symmetric");
    Vector q_eig;
    sym_eig(Q, q_eig);
    require(q_eig.front() >= -1e-9 * q_scale, "model.Q", "must be positive semidefinite");

    const double r_scale = 1.0 + R.max_abs();
    require(symmetry_defect(R) <= 1e-9 * r_scale, "model.R", "must be symmetric");
    Vector r_eig;
    sym_eig(R, r_eig);
    require(r_eig.front() > 1e-12 * r_scale, "model.R", "must be positive definite");
}

Vector exploration_noise(const NoiseSpec& spec, double t) {
    Vector out(spec.channels(), 0.0);
    for (std::size_t c = 0; c < spec.channels(); ++c) {
        double s = 0.0;
        const double* w = spec.frequencies.data() + c * spec.j_count;
        for (std::size_t j = 0; j < spec.j_count; ++j) s += std::sin(w[j] * t);
        out[c] = spec.amplitude[c] * s;
    }
    return out;
}

std::vector<NoiseSpec> sample_noise_specs(std::size_t n_agents, std::size_t channels,
                                          std::size_t j_count,
                                          std::pair<double, double> amplitude_range,
                                          std::pair<double, double> frequency_range, bool shared,
                                          std::uint64_t seed) {
    const std::uint64_t shared_key = ~0ULL;  // never collides with an agent index
    auto draw_one = [&](std::uint64_t agent_key) {
        NoiseSpec spec;
        spec.j_count = j_count;
        spec.amplitude_range = amplitude_range;
        spec.frequency_range = frequency_range;
        spec.shared = shared;
        spec.amplitude.resize(channels);
        spec.frequencies.resize(channels * j_count);
        for (std::size_t c = 0; c < channels; ++c) {
            spec.amplitude[c] = rng::uniform_in(amplitude_range.first, amplitude_range.second,
                                                seed, rng::Purpose::noise_amplitude, agent_key, c,
                                                0, 0);
            for (std::size_t j = 0; j < j_count; ++j)
                spec.frequencies[c * j_count + j] =
                    rng::uniform_in(frequency_range.first, frequency_range.second, seed,
                                    rng::Purpose::noise_frequency, agent_key, c, j, 0);
        }
        return spec;
    };

    std::vector<NoiseSpec> specs;
    specs.reserve(n_agents);
    if (shared) {
        NoiseSpec common = draw_one(shared_key);
        specs.assign(n_agents, common);
    } else {
        for (std::size_t i = 0; i < n_agents; ++i) specs.push_back(draw_one(i));
    }
    return specs;
}

namespace {

// out += scale * M x, raw pointers so the stepping loop does not allocate
inline void matvec_acc(const Matrix& m, const double* x, double scale, double* out) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * x[j];
        out[i] += scale * s;
    }
}

// Tabulated l_i over the grid, one path per agent; shared specs are
// evaluated once and aliased.
std::vector<const Path*> build_noise_tables(const std::vector<NoiseSpec>& specs,
                                            const TimeGrid& grid, std::size_t n_agents,
                                            std::vector<Path>& storage) {
    std::vector<const Path*> ptrs(n_agents, nullptr);
    if (specs.empty()) return ptrs;
    if (specs.size() != n_agents)
        throw DimensionError("noise specs must match the agent count (or be empty)");

    auto tabulate = [&](const NoiseSpec& spec) {
        Path table(spec.channels(), grid.count);
        for (std::size_t k = 0; k < grid.count; ++k) {
            Vector l = exploration_noise(spec, grid.time(k));
            std::copy(l.begin(), l.end(), table.frame(k));
        }
        return table;
    };

    if (specs[0].shared) {
        storage.push_back(tabulate(specs[0]));
        for (std::size_t i = 0; i < n_agents; ++i) ptrs[i] = &storage[0];
    } else {
        storage.resize(n_agents);
        for (std::size_t i = 0; i < n_agents; ++i) storage[i] = tabulate(specs[i]);
        for (std::size_t i = 0; i < n_agents; ++i) ptrs[i] = &storage[i];
    }
    return ptrs;
}

RealizationRecord simulate_one(const LqgGameModel& model, const Matrix& k,
                               const std::vector<const Path*>& noise, const Path* feedforward,
                               const TimeGrid& grid, const SimulationOptions& opt,
                               std::size_t realization) {
    const std::size_t n = model.n(), m = model.m(), d = model.D.empty() ? 0 : model.d();
    const std::size_t n_agents = opt.n_agents;
    const double dt = grid.dt, sqrt_dt = std::sqrt(dt);

    RealizationRecord rec;
    rec.agent_states.reserve(opt.recorded_agents.size());
    rec.agent_inputs.reserve(opt.recorded_agents.size());
    for (std::size_t a = 0; a < opt.recorded_agents.size(); ++a) {
        rec.agent_states.emplace_back(n, grid.count);
        rec.agent_inputs.emplace_back(m, grid.count);
    }
    if (opt.record_averages) {
        rec.pop_avg_state = Path(n, grid.count);
        rec.pop_avg_input = Path(m, grid.count);
    }

    // initial states, uniform per coordinate
    Vector states(n_agents * n);
    for (std::size_t i = 0; i < n_agents; ++i)
        for (std::size_t c = 0; c < n; ++c) {
            const auto& [lo, hi] = model.init_box[c];
            states[i * n + c] =
                rng::uniform_in(lo, hi, opt.seed, rng::Purpose::init_state, realization, i, c, 0);
        }

    Vector xbar(n), g_xbar(n), u(m), usum(m), dx(n), dw(d);

    for (std::size_t s = 0; s < grid.count; ++s) {
        const bool advance = s + 1 < grid.count;

        std::fill(xbar.begin(), xbar.end(), 0.0);
        for (std::size_t i = 0; i < n_agents; ++i)
            for (std::size_t c = 0; c < n; ++c) xbar[c] += states[i * n + c];
        for (std::size_t c = 0; c < n; ++c) {
            xbar[c] /= static_cast<double>(n_agents);
            if (!std::isfinite(xbar[c]))
                throw NonfiniteStateError("population state became nonfinite", grid.time(s));
        }
        std::fill(g_xbar.begin(), g_xbar.end(), 0.0);
        matvec_acc(model.G, xbar.data(), 1.0, g_xbar.data());

        if (opt.record_averages) std::copy(xbar.begin(), xbar.end(), rec.pop_avg_state.frame(s));
        std::fill(usum.begin(), usum.end(), 0.0);

        for (std::size_t i = 0; i < n_agents; ++i) {
            double* x = states.data() + i * n;

            std::fill(u.begin(), u.end(), 0.0);
            if (noise[i] != nullptr) {
                const double* l = noise[i]->frame(s);
                std::copy(l, l + m, u.begin());
            }
            if (feedforward != nullptr) {
                const double* f = feedforward->frame(s);
                for (std::size_t c = 0; c < m; ++c) u[c] += f[c];
            }
            matvec_acc(k, x, -1.0, u.data());

            for (std::size_t c = 0; c < m; ++c) usum[c] += u[c];
            for (std::size_t a = 0; a < opt.recorded_agents.size(); ++a)
                if (opt.recorded_agents[a] == i) {
                    std::copy(x, x + n, rec.agent_states[a].frame(s));
                    std::copy(u.begin(), u.end(), rec.agent_inputs[a].frame(s));
                }

            if (!advance) continue;
            std::copy(g_xbar.begin(), g_xbar.end(), dx.begin());
            matvec_acc(model.A, x, 1.0, dx.data());
            matvec_acc(model.B, u.data(), 1.0, dx.data());
            for (std::size_t c = 0; c < n; ++c) x[c] += dt * dx[c];
            if (d > 0) {
                std::size_t c = 0;
                for (; c + 1 < d; c += 2) {
                    double g0, g1;
                    rng::gaussian_pair(opt.seed, rng::Purpose::brownian, realization, i, s, c / 2,
                                       g0, g1);
                    dw[c] = sqrt_dt * g0;
                    dw[c + 1] = sqrt_dt * g1;
                }
                if (c < d)
                    dw[c] = sqrt_dt * rng::gaussian(opt.seed, rng::Purpose::brownian, realization,
                                                    i, s, c / 2);
                matvec_acc(model.D, dw.data(), 1.0, x);
            }
        }

        if (opt.record_averages) {
            for (std::size_t c = 0; c < m; ++c) usum[c] /= static_cast<double>(n_agents);
            std::copy(usum.begin(), usum.end(), rec.pop_avg_input.frame(s));
        }
    }
    return rec;
}

EnsembleTrajectories run_ensemble(const LqgGameModel& model, const Matrix& k,
                                  const std::vector<NoiseSpec>& specs, const Path* feedforward,
                                  const SimulationOptions& opt) {
    model.validate();
    const std::size_t n = model.n(), m = model.m();
    if (k.rows() != m || k.cols() != n) throw DimensionError("feedback gain must be m x n");
    if (opt.dt <= 0.0 || opt.horizon <= 0.0) throw DimensionError("dt and horizon must be positive");
    if (opt.n_agents < 1 || opt.m_realizations < 1)
        throw DimensionError("need at least one agent and one realization");
    for (std::size_t a : opt.recorded_agents)
        if (a >= opt.n_agents) throw DimensionError("recorded agent index out of range");

    TimeGrid grid{0.0, opt.dt, static_cast<std::size_t>(std::llround(opt.horizon / opt.dt)) + 1};
    if (feedforward != nullptr &&
        (feedforward->dim != m || feedforward->frames() != grid.count))
        throw GridMismatchError("feedforward path must be m-dim on the simulation grid");

    std::vector<Path> noise_storage;
    auto noise = build_noise_tables(specs, grid, opt.n_agents, noise_storage);

    EnsembleTrajectories ens;
    ens.grid = grid;
    ens.n_agents = opt.n_agents;
    ens.recorded_agents = opt.recorded_agents;
    ens.has_averages = opt.record_averages;
    ens.realizations.resize(opt.m_realizations);

    // Realizations are mutually independent (counter-keyed noise), so each
    // writes its own slot and the schedule cannot change the result.
    std::exception_ptr first_error;
    std::size_t first_error_at = opt.m_realizations;
    if (opt.parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_limit())
        for (long long r = 0; r < static_cast<long long>(opt.m_realizations); ++r) {
            try {
                ens.realizations[r] =
                    simulate_one(model, k, noise, feedforward, grid, opt, static_cast<std::size_t>(r));
            } catch (...) {
#pragma omp critical
                if (static_cast<std::size_t>(r) < first_error_at) {
                    first_error = std::current_exception();
                    first_error_at = static_cast<std::size_t>(r);
                }
            }
        }
    } else {
        for (std::size_t r = 0; r < opt.m_realizations && !first_error; ++r) {
            try {
                ens.realizations[r] = simulate_one(model, k, noise, feedforward, grid, opt, r);
            } catch (...) {
                first_error = std::current_exception();
                first_error_at = r;
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return ens;
}

}  // namespace

EnsembleTrajectories simulate_population(const LqgGameModel& model, const Matrix& feedback_gain,
                                         const Path* feedforward,
                                         const std::vector<NoiseSpec>& specs,
                                         const SimulationOptions& options) {
    return run_ensemble(model, feedback_gain, specs, feedforward, options);
}

EnsembleTrajectories rollout_equilibrium(const LqgGameModel& model, const Matrix& k1,
                                         const Matrix& k2, const Path& mean_field,
                                         const SimulationOptions& options) {
    const std::size_t n = model.n(), m = model.m();
    TimeGrid grid{0.0, options.dt,
                  static_cast<std::size_t>(std::llround(options.horizon / options.dt)) + 1};
    if (mean_field.dim != n || mean_field.frames() != grid.count)
        throw GridMismatchError("mean-field path must be n-dim on the simulation grid");

    // u_i = -K1 x_i - (K2 - K1) xbar*(t): the second term is a shared
    // feedforward input.
    const Matrix k_diff = k2 - k1;
    Path ff(m, grid.count);
    for (std::size_t s = 0; s < grid.count; ++s) {
        matvec_acc(k_diff, mean_field.frame(s), -1.0, ff.frame(s));
    }
    SimulationOptions opt = options;
    opt.record_averages = true;
    return run_ensemble(model, k1, {}, &ff, opt);
}

Path population_average_state(const EnsembleTrajectories& ens) {
    if (!ens.has_averages) throw DimensionError("ensemble was recorded without averages");
    const std::size_t count = ens.grid.count;
    const std::size_t n = ens.realizations.front().pop_avg_state.dim;
    Path out(n, count);
    for (const auto& rec : ens.realizations)
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += rec.pop_avg_state.data[i];
    const double inv = 1.0 / static_cast<double>(ens.m_realizations());
    for (double& v : out.data) v *= inv;
    return out;
}

namespace {

std::size_t recorded_slot(const EnsembleTrajectories& ens, std::size_t agent) {
    for (std::size_t a = 0; a < ens.recorded_agents.size(); ++a)
        if (ens.recorded_agents[a] == agent) return a;
    throw DimensionError("agent " + std::to_string(agent) + " was not recorded");
}

}  // namespace

ExpectationPaths expectation_paths(const EnsembleTrajectories& ens, ExpectationMode mode,
                                   std::size_t agent_i, std::size_t agent_j) {
    if (ens.realizations.empty()) throw DimensionError("ensemble holds no realizations");
    ExpectationPaths out;
    out.grid = ens.grid;
    const double inv = 1.0 / static_cast<double>(ens.m_realizations());

    if (mode == ExpectationMode::pair_difference) {
        if (agent_i == agent_j) throw DimensionError("pair mode needs two distinct agents");
        const std::size_t si = recorded_slot(ens, agent_i);
        const std::size_t sj = recorded_slot(ens, agent_j);
        const std::size_t n = ens.realizations.front().agent_states[si].dim;
        const std::size_t m = ens.realizations.front().agent_inputs[si].dim;
        out.xt = Path(n, ens.grid.count);
        out.ut = Path(m, ens.grid.count);
        for (const auto& rec : ens.realizations) {
            for (std::size_t i = 0; i < out.xt.data.size(); ++i)
                out.xt.data[i] += rec.agent_states[si].data[i] - rec.agent_states[sj].data[i];
            for (std::size_t i = 0; i < out.ut.data.size(); ++i)
                out.ut.data[i] += rec.agent_inputs[si].data[i] - rec.agent_inputs[sj].data[i];
        }
        for (double& v : out.xt.data) v *= inv;
        for (double& v : out.ut.data) v *= inv;
    } else {
        if (!ens.has_averages) throw DimensionError("ensemble was recorded without averages");
        const std::size_t n = ens.realizations.front().pop_avg_state.dim;
        const std::size_t m = ens.realizations.front().pop_avg_input.dim;
        out.xb = Path(n, ens.grid.count);
        out.ub = Path(m, ens.grid.count);
        for (const auto& rec : ens.realizations) {
            for (std::size_t i = 0; i < out.xb.data.size(); ++i)
                out.xb.data[i] += rec.pop_avg_state.data[i];
            for (std::size_t i = 0; i < out.ub.data.size(); ++i)
                out.ub.data[i] += rec.pop_avg_input.data[i];
        }
        for (double& v : out.xb.data) v *= inv;
        for (double& v : out.ub.data) v *= inv;
    }
    return out;
}

ExpectationPaths merge_expectation_paths(const ExpectationPaths& pair_part,
                                         const ExpectationPaths& average_part) {
    if (!(pair_part.grid == average_part.grid))
        throw GridMismatchError("expectation paths sit on different grids");
    ExpectationPaths out;
    out.grid = pair_part.grid;
    out.xt = pair_part.xt.data.empty() ? average_part.xt : pair_part.xt;
    out.ut = pair_part.ut.data.empty() ? average_part.ut : pair_part.ut;
    out.xb = average_part.xb.data.empty() ? pair_part.xb : average_part.xb;
    out.ub = average_part.ub.data.empty() ? pair_part.ub : average_part.ub;
    return out;
}

}  // namespace mfg
