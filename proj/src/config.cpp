#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "mfg/runner.hpp"

namespace mfg {

using nlohmann::json;

const char* to_string(AlgorithmChoice a) {
    switch (a) {
        case AlgorithmChoice::alg1: return "alg1";
        case AlgorithmChoice::alg2: return "alg2";
        case AlgorithmChoice::oracle_only: return "oracle_only";
    }
    return "?";
}

namespace {

const json& require_field(const json& j, const std::string& path, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end())
        throw ValidationError("missing required field " + path, path);
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path + " must be a number", path);
    return j.get<double>();
}

std::size_t as_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ValidationError(path + " must be a non-negative integer", path);
    return j.get<std::size_t>();
}

Vector as_vector(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + " must be an array of numbers", path);
    Vector v;
    v.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_number()) throw ValidationError(path + " must contain only numbers", path);
        v.push_back(e.get<double>());
    }
    return v;
}

Matrix as_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw ValidationError(path + " must be an array of rows", path);
    const std::size_t rows = j.size(), cols = j.front().size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != cols)
            throw ValidationError(path + " rows must all have the same length", path);
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number())
                throw ValidationError(path + " must contain only numbers", path);
            m(i, c) = row[c].get<double>();
        }
    }
    return m;
}

std::pair<double, double> as_range(const json& j, const std::string& path) {
    Vector v = as_vector(j, path);
    if (v.size() != 2 || v[0] > v[1])
        throw ValidationError(path + " must be [lo, hi] with lo <= hi", path);
    return {v[0], v[1]};
}

LqgGameModel parse_model(const json& j) {
    LqgGameModel m;
    m.A = as_matrix(require_field(j, "model.A", "A"), "model.A");
    m.G = as_matrix(require_field(j, "model.G", "G"), "model.G");
    m.B = as_matrix(require_field(j, "model.B", "B"), "model.B");
    m.D = as_matrix(require_field(j, "model.D", "D"), "model.D");
    m.Q = as_matrix(require_field(j, "model.Q", "Q"), "model.Q");
    m.R = as_matrix(require_field(j, "model.R", "R"), "model.R");
    m.Gamma = as_matrix(require_field(j, "model.Gamma", "Gamma"), "model.Gamma");
    m.rho = as_number(require_field(j, "model.rho", "rho"), "model.rho");
    m.init_mean = as_vector(require_field(j, "model.init_mean", "init_mean"), "model.init_mean");
    const json& box = require_field(j, "model.init_box", "init_box");
    if (!box.is_array()) throw ValidationError("model.init_box must be an array", "model.init_box");
    for (const auto& e : box) m.init_box.push_back(as_range(e, "model.init_box"));
    m.validate();
    return m;
}

SamplingPlan parse_plan(const json& j) {
    SamplingPlan p;
    p.t1 = as_number(require_field(j, "plan.t1", "t1"), "plan.t1");
    p.l = as_count(require_field(j, "plan.l", "l"), "plan.l");
    p.Ts = as_number(require_field(j, "plan.Ts", "Ts"), "plan.Ts");
    p.T = as_number(require_field(j, "plan.T", "T"), "plan.T");
    if (j.contains("quad_substep"))
        p.quad_substep = as_number(j["quad_substep"], "plan.quad_substep");
    else
        p.quad_substep = std::min(p.Ts, 1e-3);
    if (j.contains("quadrature")) {
        if (!j["quadrature"].is_string())
            throw ValidationError("plan.quadrature must be a string", "plan.quadrature");
        p.rule = quadrature_from_string(j["quadrature"].get<std::string>());
    }
    p.validate();
    return p;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config is not valid JSON: " + std::string(e.what()));
    }

    ExperimentConfig cfg;
    cfg.model = parse_model(require_field(root, "model", "model"));
    cfg.plan = parse_plan(require_field(root, "plan", "plan"));
    const std::size_t n = cfg.model.n(), m = cfg.model.m();

    if (root.contains("noise")) {
        const json& j = root["noise"];
        if (j.contains("j_count")) cfg.noise.j_count = as_count(j["j_count"], "noise.j_count");
        if (j.contains("amplitude_range"))
            cfg.noise.amplitude_range = as_range(j["amplitude_range"], "noise.amplitude_range");
        if (j.contains("frequency_range"))
            cfg.noise.frequency_range = as_range(j["frequency_range"], "noise.frequency_range");
        if (cfg.noise.j_count < 1)
            throw ValidationError("noise.j_count must be at least 1", "noise.j_count");
    }

    if (root.contains("solver")) {
        const json& j = root["solver"];
        if (j.contains("xi")) cfg.solver.xi = as_number(j["xi"], "solver.xi");
        if (j.contains("max_iter"))
            cfg.solver.max_iter = static_cast<int>(as_count(j["max_iter"], "solver.max_iter"));
        if (j.contains("rank_tol")) cfg.solver.rank_tol = as_number(j["rank_tol"], "solver.rank_tol");
        if (j.contains("K1_0")) cfg.k1_0 = as_matrix(j["K1_0"], "solver.K1_0");
        if (j.contains("K2_0")) cfg.k2_0 = as_matrix(j["K2_0"], "solver.K2_0");
        if (cfg.solver.xi <= 0.0) throw ValidationError("solver.xi must be positive", "solver.xi");
        if (cfg.solver.max_iter < 1)
            throw ValidationError("solver.max_iter must be at least 1", "solver.max_iter");
    }
    if (cfg.k1_0.empty()) cfg.k1_0 = Matrix(m, n);
    if (cfg.k2_0.empty()) cfg.k2_0 = Matrix(m, n);
    if (cfg.k1_0.rows() != m || cfg.k1_0.cols() != n)
        throw ValidationError("solver.K1_0 must be m x n", "solver.K1_0");
    if (cfg.k2_0.rows() != m || cfg.k2_0.cols() != n)
        throw ValidationError("solver.K2_0 must be m x n", "solver.K2_0");

    if (root.contains("algorithm")) {
        const json& j = root["algorithm"];
        if (!j.is_string()) throw ValidationError("algorithm must be a string", "algorithm");
        const std::string s = j.get<std::string>();
        if (s == "alg1") cfg.algorithm = AlgorithmChoice::alg1;
        else if (s == "alg2") cfg.algorithm = AlgorithmChoice::alg2;
        else if (s == "oracle_only") cfg.algorithm = AlgorithmChoice::oracle_only;
        else throw ValidationError("algorithm must be alg1, alg2, or oracle_only", "algorithm");
    }

    if (root.contains("seeds")) {
        const json& j = root["seeds"];
        if (!j.is_array() || j.empty())
            throw ValidationError("seeds must be a non-empty array", "seeds");
        cfg.seeds.clear();
        for (const auto& e : j) cfg.seeds.push_back(static_cast<std::uint64_t>(as_count(e, "seeds")));
    }

    if (root.contains("simulation")) {
        const json& j = root["simulation"];
        if (j.contains("n_agents"))
            cfg.simulation.n_agents = as_count(j["n_agents"], "simulation.n_agents");
        if (j.contains("m_realizations"))
            cfg.simulation.m_realizations = as_count(j["m_realizations"], "simulation.m_realizations");
        if (j.contains("dt")) cfg.simulation.dt = as_number(j["dt"], "simulation.dt");
        if (j.contains("horizon")) cfg.simulation.horizon = as_number(j["horizon"], "simulation.horizon");
        if (cfg.simulation.n_agents < 2)
            throw ValidationError("simulation.n_agents must be at least 2", "simulation.n_agents");
        if (cfg.simulation.m_realizations < 1)
            throw ValidationError("simulation.m_realizations must be at least 1",
                                  "simulation.m_realizations");
        if (cfg.simulation.dt <= 0.0)
            throw ValidationError("simulation.dt must be positive", "simulation.dt");
        if (cfg.simulation.horizon <= 0.0)
            throw ValidationError("simulation.horizon must be positive", "simulation.horizon");
    }

    if (root.contains("rollout")) {
        const json& j = root["rollout"];
        if (j.contains("horizon")) cfg.rollout.horizon = as_number(j["horizon"], "rollout.horizon");
        if (j.contains("dt")) cfg.rollout.dt = as_number(j["dt"], "rollout.dt");
        if (j.contains("n_agents")) cfg.rollout.n_agents = as_count(j["n_agents"], "rollout.n_agents");
        if (j.contains("m_realizations"))
            cfg.rollout.m_realizations = as_count(j["m_realizations"], "rollout.m_realizations");
        if (j.contains("plotted_agents")) {
            cfg.rollout.plotted_agents.clear();
            for (const auto& e : j["plotted_agents"])
                cfg.rollout.plotted_agents.push_back(as_count(e, "rollout.plotted_agents"));
        }
        if (cfg.rollout.dt <= 0.0 || cfg.rollout.horizon <= 0.0)
            throw ValidationError("rollout.dt and rollout.horizon must be positive", "rollout.dt");
        if (cfg.rollout.n_agents < 1)
            throw ValidationError("rollout.n_agents must be at least 1", "rollout.n_agents");
    }
    for (std::size_t a : cfg.rollout.plotted_agents)
        if (a >= cfg.rollout.n_agents)
            throw ValidationError("rollout.plotted_agents indices must be below n_agents",
                                  "rollout.plotted_agents");

    if (root.contains("output_dir")) {
        if (!root["output_dir"].is_string())
            throw ValidationError("output_dir must be a string", "output_dir");
        cfg.output_dir = root["output_dir"].get<std::string>();
    }

    // the sampling windows must fit inside the simulated horizon
    const double last_end = cfg.plan.t_k(cfg.plan.l - 1) + cfg.plan.T;
    if (last_end > cfg.simulation.horizon + 1e-9)
        throw ValidationError("plan windows end at " + std::to_string(last_end) +
                                  " but simulation.horizon is " +
                                  std::to_string(cfg.simulation.horizon),
                              "plan.l");
    return cfg;
}

}  // namespace mfg
