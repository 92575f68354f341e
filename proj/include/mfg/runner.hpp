#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfg/datapipe.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/model.hpp"
#include "mfg/population.hpp"
#include "mfg/riccati.hpp"

namespace mfg {

enum class AlgorithmChoice { alg1, alg2, oracle_only };
const char* to_string(AlgorithmChoice a);

struct NoiseConfig {
    std::size_t j_count = 100;
    std::pair<double, double> amplitude_range{1.0, 10.0};
    std::pair<double, double> frequency_range{-100.0, 100.0};
};

// Data-collection run (behavior policy + exploration noise).
struct SimulationConfig {
    std::size_t n_agents = 100;
    std::size_t m_realizations = 100;
    double dt = 1e-3;
    double horizon = 5.0;
};

// Closed-loop verification run with the solved gains.
struct RolloutConfig {
    double horizon = 5.0;
    double dt = 1e-3;
    std::size_t n_agents = 100;
    std::size_t m_realizations = 1;
    std::vector<std::size_t> plotted_agents{0, 1};
};

struct ExperimentConfig {
    LqgGameModel model;
    SamplingPlan plan;
    NoiseConfig noise;
    SolverConfig solver;
    Matrix k1_0;  // behavior gain for data collection and first iterate
    Matrix k2_0;  // feedforward initial gain (special-case iteration)
    AlgorithmChoice algorithm = AlgorithmChoice::alg1;
    std::vector<std::uint64_t> seeds{0};
    SimulationConfig simulation;
    RolloutConfig rollout;
    std::string output_dir = "out";
};

// JSON config loader; fills defaults (xi = 1e-6, rank_tol = 1e-8, zero
// initial gains) and validates every field. Throws ParseError for bad JSON
// and ValidationError (with the dotted field path) for bad content.
ExperimentConfig load_config(const std::string& path);

struct SeedResult {
    std::uint64_t seed = 0;
    EquilibriumSolution solution;
    // spectral-norm gaps against the oracle truth, in a fixed row order
    std::vector<std::pair<std::string, double>> error_table;
    ConsistencyReport consistency;
    Path rollout_average;               // x_(N) under the solved equilibrium policy
    std::vector<Path> rollout_agents;   // plotted agents' states
    double elapsed_seconds = 0.0;       // informational only, never written to files
};

struct RunReport {
    ExperimentConfig config;
    EquilibriumSolution truth;  // model-based oracle
    std::vector<SeedResult> seeds;
};

// Oracle truth + the configured algorithm per seed. Timing goes to stdout;
// output files are written separately by emit_outputs.
RunReport run(const ExperimentConfig& config);

// One seed of the configured algorithm (exposed for tests).
SeedResult run_seed(const ExperimentConfig& config, const EquilibriumSolution& truth,
                    std::uint64_t seed);

// Writes per-seed subdirectories (convergence.csv, trajectories.csv,
// errors.csv, solution.json) plus manifest.json at the root; returns the
// relative paths written. Identical report -> byte-identical files.
std::vector<std::string> emit_outputs(const RunReport& report, const std::string& output_dir);

}  // namespace mfg
