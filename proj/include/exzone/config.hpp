#ifndef EXZONE_CONFIG_HPP
#define EXZONE_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exzone/errors.hpp"
#include "exzone/io.hpp"
#include "exzone/model.hpp"

namespace exzone {

struct GridConfig {
    int n_pred = 0; // 0 = auto from target_h
    int n_ex = 0;
    double target_h = 0.0; // 0 = default resolution rule
    int min_nodes = 9;
};

struct SolverConfig {
    double rtol = 1e-7;
    double atol = 1e-9;
    double t_end = 0.0; // 0 = default horizon
    int snapshots = 200;
    double tail_fraction = 0.25;
    int tail_samples = 2000;
};

struct SweepBlock {
    double a_min = 0.0;
    double a_max = 0.0;
    int count = 0;
    std::vector<double> a_values; // explicit grid wins over the range
    double tol_eq = 1e-4;
    double tol_ext = 1e-5;
    bool adaptive_horizon = true;
};

struct ThinLimitBlock {
    std::vector<double> L_values{5.0, 10.0, 20.0, 40.0};
    int nodes = 0; // 0 = auto
    std::vector<double> a_values; // optional simulation anchors
};

struct RadialBlock {
    int N = 2;
    double rho = 1.0;
    double R = 8.0;
    double sigma = 6.0;
    double eta = 0.05;
    double R_max = 40.0;
    int nodes = 0;
};

struct RunConfig {
    ModelParams params;
    GridConfig grid;
    SolverConfig solver;
    SweepBlock sweep;
    ThinLimitBlock thinlimit;
    RadialBlock radial;
    std::string output_dir = "out";
    int jobs = 1;
};

namespace detail_config {

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& target,
            std::vector<std::string>& errors, const std::string& scope) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        errors.push_back(scope + "." + key + ": wrong type");
    }
}

} // namespace detail_config

// Parse with defaults; validation problems are collected and reported
// together in one ConfigError.
inline RunConfig parse_config(const nlohmann::json& j) {
    using detail_config::get_if;
    RunConfig cfg;
    std::vector<std::string> errors;

    double r = 1.0, theta = 0.05;
    if (j.contains("params")) {
        const auto& p = j.at("params");
        get_if(p, "alpha", cfg.params.alpha, errors, "params");
        get_if(p, "beta", cfg.params.beta, errors, "params");
        get_if(p, "gamma", cfg.params.gamma, errors, "params");
        get_if(p, "d_u", cfg.params.d_u, errors, "params");
        get_if(p, "d_v", cfg.params.d_v, errors, "params");
        get_if(p, "a", cfg.params.a, errors, "params");
        get_if(p, "L", cfg.params.L, errors, "params");
        get_if(p, "r", r, errors, "params");
        get_if(p, "theta", theta, errors, "params");
    }
    try {
        cfg.params.growth = GrowthFn(r, theta);
    } catch (const std::exception& e) {
        errors.push_back(std::string("params.growth: ") + e.what());
    }
    if (!(cfg.params.alpha > 0.0 && cfg.params.beta > 0.0 && cfg.params.gamma > 0.0))
        errors.push_back("params: rates alpha, beta, gamma must be positive");
    if (!(cfg.params.d_u > 0.0 && cfg.params.d_v > 0.0))
        errors.push_back("params: diffusivities must be positive");
    if (!(cfg.params.a > 0.0 && cfg.params.a < cfg.params.L))
        errors.push_back("params: geometry must satisfy 0 < a < L");

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        get_if(g, "n_pred", cfg.grid.n_pred, errors, "grid");
        get_if(g, "n_ex", cfg.grid.n_ex, errors, "grid");
        get_if(g, "target_h", cfg.grid.target_h, errors, "grid");
        get_if(g, "min_nodes", cfg.grid.min_nodes, errors, "grid");
        if (cfg.grid.n_pred != 0 && cfg.grid.n_pred < 3)
            errors.push_back("grid.n_pred: need at least 3 nodes");
        if (cfg.grid.n_ex != 0 && cfg.grid.n_ex < 3)
            errors.push_back("grid.n_ex: need at least 3 nodes");
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        get_if(s, "rtol", cfg.solver.rtol, errors, "solver");
        get_if(s, "atol", cfg.solver.atol, errors, "solver");
        get_if(s, "t_end", cfg.solver.t_end, errors, "solver");
        get_if(s, "snapshots", cfg.solver.snapshots, errors, "solver");
        get_if(s, "tail_fraction", cfg.solver.tail_fraction, errors, "solver");
        get_if(s, "tail_samples", cfg.solver.tail_samples, errors, "solver");
        if (!(cfg.solver.rtol > 0.0 && cfg.solver.atol > 0.0))
            errors.push_back("solver: tolerances must be positive");
        if (!(cfg.solver.tail_fraction > 0.0 && cfg.solver.tail_fraction < 1.0))
            errors.push_back("solver.tail_fraction: must lie in (0,1)");
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        get_if(s, "a_min", cfg.sweep.a_min, errors, "sweep");
        get_if(s, "a_max", cfg.sweep.a_max, errors, "sweep");
        get_if(s, "count", cfg.sweep.count, errors, "sweep");
        get_if(s, "a_values", cfg.sweep.a_values, errors, "sweep");
        get_if(s, "tol_eq", cfg.sweep.tol_eq, errors, "sweep");
        get_if(s, "tol_ext", cfg.sweep.tol_ext, errors, "sweep");
        get_if(s, "adaptive_horizon", cfg.sweep.adaptive_horizon, errors, "sweep");
    }
    if (j.contains("thinlimit")) {
        const auto& s = j.at("thinlimit");
        get_if(s, "L_values", cfg.thinlimit.L_values, errors, "thinlimit");
        get_if(s, "nodes", cfg.thinlimit.nodes, errors, "thinlimit");
        get_if(s, "a_values", cfg.thinlimit.a_values, errors, "thinlimit");
    }
    if (j.contains("radial")) {
        const auto& s = j.at("radial");
        get_if(s, "N", cfg.radial.N, errors, "radial");
        get_if(s, "rho", cfg.radial.rho, errors, "radial");
        get_if(s, "R", cfg.radial.R, errors, "radial");
        get_if(s, "sigma", cfg.radial.sigma, errors, "radial");
        get_if(s, "eta", cfg.radial.eta, errors, "radial");
        get_if(s, "R_max", cfg.radial.R_max, errors, "radial");
        get_if(s, "nodes", cfg.radial.nodes, errors, "radial");
        if (cfg.radial.N < 1) errors.push_back("radial.N: dimension must be >= 1");
        if (!(cfg.radial.rho > 0.0 && cfg.radial.rho < cfg.radial.R))
            errors.push_back("radial: need 0 < rho < R");
    }
    get_if(j, "output_dir", cfg.output_dir, errors, "config");
    get_if(j, "jobs", cfg.jobs, errors, "config");
    if (cfg.jobs < 1) errors.push_back("jobs: must be at least 1");

    if (!errors.empty()) {
        std::string msg = "configuration invalid:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["params"] = {{"alpha", cfg.params.alpha}, {"beta", cfg.params.beta},
                   {"gamma", cfg.params.gamma}, {"d_u", cfg.params.d_u},
                   {"d_v", cfg.params.d_v},     {"a", cfg.params.a},
                   {"L", cfg.params.L},         {"r", cfg.params.growth.r},
                   {"theta", cfg.params.growth.theta}};
    j["grid"] = {{"n_pred", cfg.grid.n_pred},
                 {"n_ex", cfg.grid.n_ex},
                 {"target_h", cfg.grid.target_h},
                 {"min_nodes", cfg.grid.min_nodes}};
    j["solver"] = {{"rtol", cfg.solver.rtol},
                   {"atol", cfg.solver.atol},
                   {"t_end", cfg.solver.t_end},
                   {"snapshots", cfg.solver.snapshots},
                   {"tail_fraction", cfg.solver.tail_fraction},
                   {"tail_samples", cfg.solver.tail_samples}};
    j["sweep"] = {{"a_min", cfg.sweep.a_min},   {"a_max", cfg.sweep.a_max},
                  {"count", cfg.sweep.count},   {"a_values", cfg.sweep.a_values},
                  {"tol_eq", cfg.sweep.tol_eq}, {"tol_ext", cfg.sweep.tol_ext},
                  {"adaptive_horizon", cfg.sweep.adaptive_horizon}};
    j["thinlimit"] = {{"L_values", cfg.thinlimit.L_values},
                      {"nodes", cfg.thinlimit.nodes},
                      {"a_values", cfg.thinlimit.a_values}};
    j["radial"] = {{"N", cfg.radial.N},     {"rho", cfg.radial.rho},
                   {"R", cfg.radial.R},     {"sigma", cfg.radial.sigma},
                   {"eta", cfg.radial.eta}, {"R_max", cfg.radial.R_max},
                   {"nodes", cfg.radial.nodes}};
    j["output_dir"] = cfg.output_dir;
    j["jobs"] = cfg.jobs;
    return j;
}

inline DualGrid make_grid(const RunConfig& cfg) {
    const ModelParams& p = cfg.params;
    if (cfg.grid.n_pred >= 3 && cfg.grid.n_ex >= 3)
        return DualGrid(p.a, p.L, cfg.grid.n_pred, cfg.grid.n_ex);
    if (cfg.grid.target_h > 0.0) {
        const double h = cfg.grid.target_h;
        const int np = std::max(cfg.grid.min_nodes, static_cast<int>(std::ceil(p.a / h)) + 1);
        const int ne = std::max(cfg.grid.min_nodes,
                                static_cast<int>(std::ceil((p.L - p.a) / h)) + 1);
        return DualGrid(p.a, p.L, np, ne);
    }
    return default_grid(p.a, p.L, p.d_u, p.growth.r, cfg.grid.min_nodes);
}

inline SimOptions make_sim_options(const RunConfig& cfg) {
    SimOptions o;
    o.rtol = cfg.solver.rtol;
    o.atol = cfg.solver.atol;
    o.t_end = cfg.solver.t_end;
    o.n_snapshots = cfg.solver.snapshots;
    o.tail_fraction = cfg.solver.tail_fraction;
    o.n_tail = cfg.solver.tail_samples;
    return o;
}

// reproducibility record dropped next to every command's outputs
inline void write_metadata(const std::filesystem::path& dir, const RunConfig& cfg,
                           const std::string& command) {
    nlohmann::json meta;
    meta["tool"] = "exzone";
    meta["version"] = tool_version;
    meta["command"] = command;
    meta["config"] = to_json(cfg);
    std::filesystem::create_directories(dir);
    write_text(dir / "metadata.json", meta.dump(2) + "\n");
}

} // namespace exzone

#endif
