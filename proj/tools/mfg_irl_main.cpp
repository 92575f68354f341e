#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfg/errors.hpp"
#include "mfg/runner.hpp"

namespace {

nlohmann::ordered_json matrix_json(const mfg::Matrix& m) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven mean-field LQG equilibrium experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::uint64_t> seed_override;
    std::string out_override;
    double substep_override = 0.0;

    CLI::App* cmd_run =
        app.add_subcommand("run", "collect data, run the configured algorithm, write outputs");
    cmd_run->add_option("config", config_path, "experiment config (JSON)")->required();
    cmd_run->add_option("--seed", seed_override, "run only these seeds instead of the config list");
    cmd_run->add_option("--out", out_override, "output directory override");
    cmd_run->add_option("--substep", substep_override, "quadrature substep override");

    CLI::App* cmd_oracle =
        app.add_subcommand("oracle", "print the model-based equilibrium solution");
    cmd_oracle->add_option("config", config_path, "experiment config (JSON)")->required();

    CLI::App* cmd_validate = app.add_subcommand("validate", "parse and validate a config");
    cmd_validate->add_option("config", config_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        mfg::ExperimentConfig cfg = mfg::load_config(config_path);
        if (!seed_override.empty()) cfg.seeds = seed_override;
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (substep_override > 0.0) cfg.plan.quad_substep = substep_override;

        if (cmd_validate->parsed()) {
            std::printf("ok: n=%zu m=%zu algorithm=%s seeds=%zu windows=%zu\n", cfg.model.n(),
                        cfg.model.m(), mfg::to_string(cfg.algorithm), cfg.seeds.size(),
                        static_cast<std::size_t>(cfg.plan.l));
            return 0;
        }

        if (cmd_oracle->parsed()) {
            const mfg::TimeGrid grid{0.0, cfg.rollout.dt,
                                     static_cast<std::size_t>(
                                         std::llround(cfg.rollout.horizon / cfg.rollout.dt)) +
                                         1};
            const mfg::EquilibriumSolution truth = mfg::solve_equilibrium_oracle(cfg.model, grid);
            nlohmann::ordered_json doc;
            doc["P11"] = matrix_json(truth.p11);
            doc["K1"] = matrix_json(truth.k1);
            doc["P12"] = matrix_json(truth.p12);
            doc["K2"] = matrix_json(truth.k2);
            std::printf("%s\n", doc.dump(2).c_str());
            return 0;
        }

        mfg::RunReport report = mfg::run(cfg);
        const std::vector<std::string> files = mfg::emit_outputs(report, cfg.output_dir);
        for (const std::string& f : files) std::printf("wrote %s/%s\n", cfg.output_dir.c_str(), f.c_str());
        return 0;
    } catch (const mfg::RankDeficientError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const mfg::ConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mfg::NotStabilizingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mfg::NotCSplittingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
