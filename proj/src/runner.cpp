#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mfg/csv.hpp"
#include "mfg/linalg.hpp"
#include "mfg/runner.hpp"

namespace mfg {

namespace {

using ojson = nlohmann::ordered_json;

TimeGrid rollout_grid(const ExperimentConfig& cfg) {
    return {0.0, cfg.rollout.dt,
            static_cast<std::size_t>(std::llround(cfg.rollout.horizon / cfg.rollout.dt)) + 1};
}

double gap(const Matrix& truth, const Matrix& estimate) {
    return spectral_norm(truth - estimate);
}

// the two data-collection ensembles: per-agent noise for the pair difference,
// one shared signal for the population average
std::pair<EnsembleTrajectories, EnsembleTrajectories> collect_data(const ExperimentConfig& cfg,
                                                                   std::uint64_t seed) {
    SimulationOptions opt;
    opt.n_agents = cfg.simulation.n_agents;
    opt.horizon = cfg.simulation.horizon;
    opt.dt = cfg.simulation.dt;
    opt.seed = seed;
    opt.m_realizations = cfg.simulation.m_realizations;

    // the pair difference x_i - x_j cancels the coupling term pathwise, so the
    // recorded pair does not depend on how many other agents are simulated;
    // run just the two recorded agents and keep the full population for the
    // average ensemble below
    SimulationOptions pair_opt = opt;
    pair_opt.n_agents = 2;
    pair_opt.recorded_agents = {0, 1};
    pair_opt.record_averages = false;
    auto pair_specs = sample_noise_specs(pair_opt.n_agents, cfg.model.m(), cfg.noise.j_count,
                                         cfg.noise.amplitude_range, cfg.noise.frequency_range,
                                         false, seed);
    EnsembleTrajectories pair_ens =
        simulate_population(cfg.model, cfg.k1_0, nullptr, pair_specs, pair_opt);

    SimulationOptions avg_opt = opt;
    avg_opt.record_averages = true;
    auto avg_specs = sample_noise_specs(opt.n_agents, cfg.model.m(), cfg.noise.j_count,
                                        cfg.noise.amplitude_range, cfg.noise.frequency_range,
                                        true, seed);
    EnsembleTrajectories avg_ens =
        simulate_population(cfg.model, cfg.k1_0, nullptr, avg_specs, avg_opt);
    return {std::move(pair_ens), std::move(avg_ens)};
}

std::vector<std::pair<std::string, double>> make_error_table(const ExperimentConfig& cfg,
                                                             const EquilibriumSolution& truth,
                                                             const EquilibriumSolution& sol) {
    std::vector<std::pair<std::string, double>> table;
    table.emplace_back("P11", gap(truth.p11, sol.p11));
    table.emplace_back("K1", gap(truth.k1, sol.k1));
    if (!sol.b_hat.empty()) {
        table.emplace_back("B", gap(cfg.model.B, sol.b_hat));
        table.emplace_back("A", gap(cfg.model.A, sol.a_hat));
        table.emplace_back("A_plus_G", gap(cfg.model.A + cfg.model.G, sol.ag_hat));
        table.emplace_back("G", gap(cfg.model.G, sol.g_hat));
    }
    table.emplace_back("P12", gap(truth.p12, sol.p12));
    table.emplace_back("K2", gap(truth.k2, sol.k2));
    return table;
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& cfg, const EquilibriumSolution& truth,
                    std::uint64_t seed) {
    const auto t_start = std::chrono::steady_clock::now();
    const TimeGrid mf_grid = rollout_grid(cfg);

    SeedResult res;
    res.seed = seed;

    switch (cfg.algorithm) {
        case AlgorithmChoice::oracle_only:
            res.solution = truth;
            break;
        case AlgorithmChoice::alg1: {
            auto [pair_ens, avg_ens] = collect_data(cfg, seed);
            res.solution = run_algorithm1(pair_ens, avg_ens, cfg.plan, cfg.model.Q, cfg.model.R,
                                          cfg.model.Gamma, cfg.model.rho, cfg.k1_0,
                                          cfg.model.init_mean, mf_grid, cfg.solver);
            break;
        }
        case AlgorithmChoice::alg2: {
            auto [pair_ens, avg_ens] = collect_data(cfg, seed);
            const ExpectationPaths paths = merge_expectation_paths(
                expectation_paths(pair_ens, ExpectationMode::pair_difference, 0, 1),
                expectation_paths(avg_ens, ExpectationMode::population_average));

            // the mean field is estimated by playing the solved gain on the
            // population and averaging
            MeanFieldEnvironment environment = [&](const Matrix& k2) {
                SimulationOptions opt;
                opt.n_agents = cfg.rollout.n_agents;
                opt.horizon = cfg.rollout.horizon;
                opt.dt = cfg.rollout.dt;
                opt.seed = seed;
                opt.m_realizations = cfg.rollout.m_realizations;
                opt.record_averages = true;
                EnsembleTrajectories ens =
                    simulate_population(cfg.model, k2, nullptr, {}, opt);
                return std::make_pair(ens.grid, population_average_state(ens));
            };
            res.solution = run_algorithm2(paths, cfg.plan, cfg.model.Q, cfg.model.R,
                                          cfg.model.Gamma, cfg.model.rho, cfg.k1_0, cfg.k2_0,
                                          environment, cfg.solver);
            break;
        }
    }

    res.error_table = make_error_table(cfg, truth, res.solution);

    // closed-loop verification rollout under the solved equilibrium policy
    SimulationOptions roll_opt;
    roll_opt.n_agents = cfg.rollout.n_agents;
    roll_opt.horizon = cfg.rollout.horizon;
    roll_opt.dt = cfg.rollout.dt;
    roll_opt.seed = seed;
    roll_opt.m_realizations = cfg.rollout.m_realizations;
    roll_opt.recorded_agents = cfg.rollout.plotted_agents;
    EnsembleTrajectories rollout = rollout_equilibrium(cfg.model, res.solution.k1, res.solution.k2,
                                                       res.solution.mean_field, roll_opt);
    res.consistency = consistency_check(rollout, res.solution.mean_field);
    res.rollout_average = population_average_state(rollout);
    for (std::size_t a = 0; a < cfg.rollout.plotted_agents.size(); ++a)
        res.rollout_agents.push_back(rollout.realizations.front().agent_states[a]);

    res.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

RunReport run(const ExperimentConfig& cfg) {
    RunReport report;
    report.config = cfg;
    report.truth = solve_equilibrium_oracle(cfg.model, rollout_grid(cfg));

    for (std::uint64_t seed : cfg.seeds) {
        report.seeds.push_back(run_seed(cfg, report.truth, seed));
        std::printf("[timing] %s seed %llu: %.2f s\n", to_string(cfg.algorithm),
                    static_cast<unsigned long long>(seed), report.seeds.back().elapsed_seconds);
        std::fflush(stdout);
    }
    return report;
}

namespace {

ojson matrix_json(const Matrix& m) {
    ojson rows = ojson::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ojson history_json(const IterationHistory& h) {
    ojson out;
    out["converged"] = h.converged;
    out["stop_reason"] = to_string(h.stop_reason);
    ojson iters = ojson::array();
    for (const auto& it : h.iterates) {
        ojson rec;
        rec["P"] = matrix_json(it.p);
        rec["K"] = matrix_json(it.k);
        rec["residual"] = it.residual;
        iters.push_back(std::move(rec));
    }
    out["iterates"] = std::move(iters);
    return out;
}

ojson solution_json(const EquilibriumSolution& sol) {
    ojson out;
    out["P11"] = matrix_json(sol.p11);
    out["K1"] = matrix_json(sol.k1);
    out["P12"] = matrix_json(sol.p12);
    out["K2"] = matrix_json(sol.k2);
    if (!sol.a_hat.empty()) {
        out["A_hat"] = matrix_json(sol.a_hat);
        out["B_hat"] = matrix_json(sol.b_hat);
        out["AG_hat"] = matrix_json(sol.ag_hat);
        out["G_hat"] = matrix_json(sol.g_hat);
    }
    ojson checks = ojson::array();
    for (const auto& rep : sol.assumptions) {
        ojson r;
        r["label"] = rep.label;
        r["required"] = rep.required;
        r["achieved"] = rep.achieved;
        r["smallest_kept_sv"] = rep.smallest_kept_sv;
        r["largest_discarded_sv"] = rep.largest_discarded_sv;
        r["satisfied"] = rep.satisfied;
        checks.push_back(std::move(r));
    }
    out["excitation_checks"] = std::move(checks);
    out["feedback_history"] = history_json(sol.feedback_history);
    out["feedforward_history"] = history_json(sol.feedforward_history);
    return out;
}

void write_convergence_csv(const std::string& path, const EquilibriumSolution& sol,
                           const EquilibriumSolution& truth) {
    CsvWriter csv(path);
    csv.header({"block", "iteration", "p_gap_fro", "k_gap_fro", "step_residual"});
    auto emit = [&](const char* block, const IterationHistory& h, const Matrix& p_true,
                    const Matrix& k_true) {
        for (std::size_t i = 0; i < h.iterates.size(); ++i) {
            const auto& it = h.iterates[i];
            csv.row_mixed({block, std::to_string(i + 1),
                           CsvWriter::format((it.p - p_true).norm_fro()),
                           CsvWriter::format((it.k - k_true).norm_fro()),
                           CsvWriter::format(it.residual)});
        }
    };
    emit("feedback", sol.feedback_history, truth.p11, truth.k1);
    emit("feedforward", sol.feedforward_history, truth.p12, truth.k2);
}

void write_trajectories_csv(const std::string& path, const SeedResult& res) {
    CsvWriter csv(path);
    const Path& mf = res.solution.mean_field;
    const std::size_t n = mf.dim;
    std::vector<std::string> names{"t"};
    for (std::size_t c = 0; c < n; ++c) names.push_back("mean_field_" + std::to_string(c));
    for (std::size_t c = 0; c < n; ++c) names.push_back("pop_avg_" + std::to_string(c));
    for (std::size_t a = 0; a < res.rollout_agents.size(); ++a)
        for (std::size_t c = 0; c < n; ++c)
            names.push_back("agent" + std::to_string(a) + "_" + std::to_string(c));
    csv.header(names);

    const TimeGrid& grid = res.solution.mean_field_grid;
    for (std::size_t k = 0; k < grid.count; ++k) {
        std::vector<double> row{grid.time(k)};
        for (std::size_t c = 0; c < n; ++c) row.push_back(mf.frame(k)[c]);
        for (std::size_t c = 0; c < n; ++c) row.push_back(res.rollout_average.frame(k)[c]);
        for (const Path& agent : res.rollout_agents)
            for (std::size_t c = 0; c < n; ++c) row.push_back(agent.frame(k)[c]);
        csv.row(row);
    }
}

void write_errors_csv(const std::string& path, const SeedResult& res) {
    CsvWriter csv(path);
    csv.header({"quantity", "spectral_norm_error"});
    for (const auto& [name, value] : res.error_table)
        csv.row_mixed({name, CsvWriter::format(value)});
}

}  // namespace

std::vector<std::string> emit_outputs(const RunReport& report, const std::string& output_dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;

    for (const SeedResult& res : report.seeds) {
        const std::string sub = "seed_" + std::to_string(res.seed);
        fs::create_directories(fs::path(output_dir) / sub);
        auto rel = [&](const char* name) { return sub + "/" + name; };
        auto abs = [&](const char* name) { return (fs::path(output_dir) / sub / name).string(); };

        write_convergence_csv(abs("convergence.csv"), res.solution, report.truth);
        written.push_back(rel("convergence.csv"));
        write_trajectories_csv(abs("trajectories.csv"), res);
        written.push_back(rel("trajectories.csv"));
        write_errors_csv(abs("errors.csv"), res);
        written.push_back(rel("errors.csv"));

        ojson doc;
        doc["algorithm"] = to_string(report.config.algorithm);
        doc["seed"] = res.seed;
        doc["solution"] = solution_json(res.solution);
        doc["truth"] = solution_json(report.truth);
        ojson errors = ojson::array();
        for (const auto& [name, value] : res.error_table) {
            ojson e;
            e["quantity"] = name;
            e["error"] = value;
            errors.push_back(std::move(e));
        }
        doc["error_table"] = std::move(errors);
        doc["consistency"] = {{"max_gap", res.consistency.max_gap},
                              {"time_avg_gap", res.consistency.time_avg_gap}};
        std::ofstream out(abs("solution.json"), std::ios::binary);
        out << doc.dump(2) << "\n";
        written.push_back(rel("solution.json"));
    }

    ojson manifest = ojson::array();
    for (const std::string& name : written) {
        ojson entry;
        entry["path"] = name;
        entry["bytes"] = fs::file_size(fs::path(output_dir) / name);
        manifest.push_back(std::move(entry));
    }
    std::ofstream mout((fs::path(output_dir) / "manifest.json").string(), std::ios::binary);
    mout << manifest.dump(2) << "\n";
    written.push_back("manifest.json");
    return written;
}

}  // namespace mfg
