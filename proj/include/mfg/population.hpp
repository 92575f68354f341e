#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/matrix.hpp"
#include "mfg/model.hpp"

namespace mfg {

// Exploration signal for one agent: per input channel c,
//   l_c(t) = amplitude[c] * sum_j sin(frequencies[c*j_count + j] * t).
// Amplitudes and frequencies are drawn once per run from the stated ranges.
struct NoiseSpec {
    Vector amplitude;    // one per input channel
    Vector frequencies;  // channel-major, j_count per channel
    std::size_t j_count = 0;
    std::pair<double, double> amplitude_range{1.0, 10.0};
    std::pair<double, double> frequency_range{-100.0, 100.0};
    bool shared = false;  // all agents carry one common draw

    std::size_t channels() const { return amplitude.size(); }
};

// l(t) for one agent; deterministic given the spec
Vector exploration_noise(const NoiseSpec& spec, double t);

// One spec per agent. shared = true draws a single signal (from a reserved
// key, so it never coincides with agent 0's individual draw) and hands it to
// every agent.
std::vector<NoiseSpec> sample_noise_specs(std::size_t n_agents, std::size_t channels,
                                          std::size_t j_count,
                                          std::pair<double, double> amplitude_range,
                                          std::pair<double, double> frequency_range, bool shared,
                                          std::uint64_t seed);

// Per-realization record. Only the agents listed in
// EnsembleTrajectories::recorded_agents keep full paths (plus the population
// averages when requested) — storing all N agents for every realization would
// be hundreds of MB and nothing downstream reads them.
struct RealizationRecord {
    std::vector<Path> agent_states;  // aligned with recorded_agents; n-dim frames
    std::vector<Path> agent_inputs;  // m-dim frames
    Path pop_avg_state;              // empty unless averages were recorded
    Path pop_avg_input;
};

struct EnsembleTrajectories {
    TimeGrid grid;
    std::size_t n_agents = 0;
    std::vector<std::size_t> recorded_agents;
    bool has_averages = false;
    std::vector<RealizationRecord> realizations;

    std::size_t m_realizations() const { return realizations.size(); }
};

struct SimulationOptions {
    std::size_t n_agents = 1;
    double horizon = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    std::size_t m_realizations = 1;
    std::vector<std::size_t> recorded_agents{};
    bool record_averages = true;
    bool parallel = true;  // OpenMP over realizations; false = serial reference
};

// Euler-Maruyama simulation of the coupled population
//   dx_i = (A x_i + G x_(N) + B u_i) dt + D dw_i,
//   u_i(t) = -K x_i(t) + l_i(t) + feedforward(t),
// with x_(N) recomputed every step as the within-realization agent average.
// Initial states are uniform on model.init_box, independent across agents and
// realizations. specs may be empty (no exploration); feedforward may be null.
// Fully reproducible from the seed, bitwise-identically so in both the serial
// and parallel schedules.
EnsembleTrajectories simulate_population(const LqgGameModel& model, const Matrix& feedback_gain,
                                         const Path* feedforward,
                                         const std::vector<NoiseSpec>& specs,
                                         const SimulationOptions& options);

// Closed-loop equilibrium rollout: u_i = -K1 x_i - (K2 - K1) xbar(t), with the
// supplied mean-field path on the simulation grid. Records the population
// average so the consistency condition can be checked.
EnsembleTrajectories rollout_equilibrium(const LqgGameModel& model, const Matrix& k1,
                                         const Matrix& k2, const Path& mean_field,
                                         const SimulationOptions& options);

// Average of the recorded population-average state over realizations.
Path population_average_state(const EnsembleTrajectories& ens);

enum class ExpectationMode { pair_difference, population_average };

// Monte-Carlo expectation paths of the transformed deterministic systems:
// xt/ut estimate E[x_i - x_j], E[u_i - u_j]; xb/ub estimate the population
// averages. Each mode fills its own pair of paths and leaves the others empty.
struct ExpectationPaths {
    TimeGrid grid;
    Path xt;  // x-tilde
    Path ut;  // u-tilde
    Path xb;  // x-bar
    Path ub;  // u-bar
};

ExpectationPaths expectation_paths(const EnsembleTrajectories& ens, ExpectationMode mode,
                                   std::size_t agent_i = 0, std::size_t agent_j = 1);

// Combine a pair_difference result with a population_average result taken on
// the same grid.
ExpectationPaths merge_expectation_paths(const ExpectationPaths& pair_part,
                                         const ExpectationPaths& average_part);

}  // namespace mfg
