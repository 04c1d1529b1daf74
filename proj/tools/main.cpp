// exzone: predator-prey dynamics with a predator-free exclusion zone.
// Subcommands cover time integration, steady states with certificates,
// exclusion-zone-size sweeps, thin-limit coefficients and radial profiles.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "exzone/asymptotics.hpp"
#include "exzone/config.hpp"
#include "exzone/dynamics.hpp"
#include "exzone/io.hpp"
#include "exzone/radial.hpp"
#include "exzone/steady.hpp"
#include "exzone/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace exzone;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    int jobs = 0; // 0 = from config
    std::optional<double> alpha, beta, gamma, r, theta, d_u, d_v, a, L;
    std::optional<double> t_end, rtol, atol;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "configuration file (JSON)");
    cmd->add_option("--out", c.out_dir, "output directory (overrides config)");
    cmd->add_option("--jobs", c.jobs, "worker threads for sweeps");
    cmd->add_option("--alpha", c.alpha, "conversion rate");
    cmd->add_option("--beta", c.beta, "predation rate");
    cmd->add_option("--gamma", c.gamma, "predator mortality");
    cmd->add_option("--r", c.r, "growth amplitude");
    cmd->add_option("--theta", c.theta, "Allee threshold");
    cmd->add_option("--du", c.d_u, "prey diffusivity");
    cmd->add_option("--dv", c.d_v, "predator diffusivity");
    cmd->add_option("--a", c.a, "predator domain size");
    cmd->add_option("--L", c.L, "prey domain length");
    cmd->add_option("--t-end", c.t_end, "simulation horizon");
    cmd->add_option("--rtol", c.rtol, "relative tolerance");
    cmd->add_option("--atol", c.atol, "absolute tolerance");
}

RunConfig load_config(const CommonOpts& c) {
    json j = json::object();
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw ConfigError("cannot open config file: " + c.config_path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
    }
    auto set = [&](const char* section, const char* key, const std::optional<double>& v) {
        if (v) j[section][key] = *v;
    };
    set("params", "alpha", c.alpha);
    set("params", "beta", c.beta);
    set("params", "gamma", c.gamma);
    set("params", "r", c.r);
    set("params", "theta", c.theta);
    set("params", "d_u", c.d_u);
    set("params", "d_v", c.d_v);
    set("params", "a", c.a);
    set("params", "L", c.L);
    set("solver", "t_end", c.t_end);
    set("solver", "rtol", c.rtol);
    set("solver", "atol", c.atol);
    // precedence: --out flag, then config file, then environment, then "out"
    if (!c.out_dir.empty())
        j["output_dir"] = c.out_dir;
    else if (!j.contains("output_dir")) {
        if (const char* env = std::getenv("EXZONE_OUT_DIR"); env && *env)
            j["output_dir"] = env;
    }
    if (c.jobs > 0) j["jobs"] = c.jobs;
    return parse_config(j);
}

json outcome_to_json(const Outcome& o, const TailStats& ts) {
    json r;
    r["class"] = to_string(o.cls);
    r["period"] = o.period;
    r["n_peaks"] = o.n_peaks;
    r["amplitude_U"] = o.dU;
    r["amplitude_V"] = o.dV;
    r["U_hat"] = ts.U_hat;
    r["U_bar"] = ts.U_bar;
    r["U_check"] = ts.U_check;
    r["V_hat"] = ts.V_hat;
    r["V_bar"] = ts.V_bar;
    r["V_check"] = ts.V_check;
    return r;
}

int cmd_simulate(const CommonOpts& copts, bool dump_fields) {
    RunConfig cfg = load_config(copts);
    const fs::path out = cfg.output_dir;
    write_metadata(out, cfg, "simulate");
    DualGrid grid = make_grid(cfg);
    SimOptions sim = make_sim_options(cfg);
    sim.record_fields = dump_fields;
    Trajectory traj = simulate(grid, cfg.params, default_initial_state(grid), sim);
    TotalsSeries series = totals(traj);
    write_totals_csv(out / "totals.csv", series);
    const TailStats ts = tail_stats(series, sim.tail_fraction);
    const Outcome o = classify(series, cfg.params.L, cfg.sweep.tol_eq, cfg.sweep.tol_ext,
                               sim.tail_fraction);
    json rep = outcome_to_json(o, ts);
    rep["t_end"] = traj.t_end();
    rep["steps_accepted"] = traj.stats.naccepted;
    rep["steps_rejected"] = traj.stats.nrejected;
    write_text(out / "classification.json", rep.dump(2) + "\n");
    if (dump_fields) {
        write_field_csv(out / "fields_u.csv", "u", grid.nodes_u(), traj, true);
        write_field_csv(out / "fields_v.csv", "v", grid.nodes_v(), traj, false);
    }
    std::printf("simulate: %s (period %s), totals in %s\n", to_string(o.cls),
                fmt17(o.period).c_str(), (out / "totals.csv").c_str());
    return 0;
}

int cmd_steady(const CommonOpts& copts, const std::string& guess_name, double tol) {
    RunConfig cfg = load_config(copts);
    const fs::path out = cfg.output_dir;
    write_metadata(out, cfg, "steady");
    DualGrid grid = make_grid(cfg);
    SteadyGuess guess = SteadyGuess::FromDynamics;
    if (guess_name == "homogeneous") guess = SteadyGuess::Homogeneous;
    else if (guess_name == "trivial") guess = SteadyGuess::TrivialPreyOnly;
    else if (guess_name != "dynamics")
        throw ConfigError("unknown guess strategy: " + guess_name);
    State init = steady_initial_guess(grid, cfg.params, guess, make_sim_options(cfg));
    SteadyState st = newton_steady(grid, cfg.params, init, tol);
    write_steady_state(out, grid, cfg.params, st);
    std::printf("steady: residual_inf=%.3e lambda_u=%.3e eig_mismatch=%.3e mass_balance=%.3e\n",
                st.residual_inf, st.lambda_u, st.eig_mismatch,
                mass_balance_residual(grid, cfg.params, st));
    return 0;
}

int cmd_sweep(const CommonOpts& copts) {
    RunConfig cfg = load_config(copts);
    const fs::path out = cfg.output_dir;
    write_metadata(out, cfg, "sweep");
    SweepOptions opt;
    if (!cfg.sweep.a_values.empty()) {
        opt.a_grid = cfg.sweep.a_values;
    } else if (cfg.sweep.count > 0) {
        const double lo = cfg.sweep.a_min > 0.0 ? cfg.sweep.a_min : 0.05 * cfg.params.L;
        const double hi = cfg.sweep.a_max > 0.0 ? cfg.sweep.a_max : 0.95 * cfg.params.L;
        opt.a_grid = uniform_a_grid(lo, hi, cfg.sweep.count);
    } else {
        opt.a_grid = uniform_a_grid(0.05 * cfg.params.L, 0.95 * cfg.params.L, 25);
    }
    opt.tol_eq = cfg.sweep.tol_eq;
    opt.tol_ext = cfg.sweep.tol_ext;
    opt.sim = make_sim_options(cfg);
    opt.jobs = cfg.jobs;
    opt.adaptive_horizon = cfg.sweep.adaptive_horizon;
    opt.grid_min_nodes = cfg.grid.min_nodes;
    opt.target_h = cfg.grid.target_h;
    LimitingProfile prof = limiting_profile(cfg.params, opt);
    write_limiting_profile(out, prof);
    int failed = 0;
    for (const auto& r : prof.rows)
        if (!r.ok) ++failed;
    std::printf("sweep: %zu rows (%d failed), results in %s\n", prof.rows.size(), failed,
                (out / "sweep.csv").c_str());
    return 0; // per-row failures are recorded in the rows, not fatal
}

int cmd_thinlimit(const CommonOpts& copts) {
    RunConfig cfg = load_config(copts);
    const fs::path out = cfg.output_dir;
    write_metadata(out, cfg, "thinlimit");
    const ModelParams& p = cfg.params;
    json rep;
    rep["large_L_slope"] = large_L_slope(p);
    rep["rows"] = json::array();
    std::string csv = "L,q,gap,w1_slope0,w2_slope0,V0,V1\n";
    for (double L : cfg.thinlimit.L_values) {
        ThinLimitCoeffs c = thin_limit_coeffs(p, L, cfg.thinlimit.nodes);
        EnergyProfile w1 = w1_profile(p, L);
        json row;
        row["L"] = L;
        row["q"] = w1.q();
        row["gap"] = w1.gap();
        row["w1_slope0"] = c.w1_slope0;
        row["w2_slope0"] = c.w2_slope0;
        row["V0"] = c.V0;
        row["V1"] = c.V1;
        rep["rows"].push_back(row);
        csv += fmt17(L) + "," + fmt17(w1.q()) + "," + fmt17(w1.gap()) + "," +
               fmt17(c.w1_slope0) + "," + fmt17(c.w2_slope0) + "," + fmt17(c.V0) + "," +
               fmt17(c.V1) + "\n";
        if (L == cfg.thinlimit.L_values.back()) {
            const int n = cfg.thinlimit.nodes > 0 ? cfg.thinlimit.nodes
                                                  : default_profile_nodes(L);
            auto [xs, us] = w1.sample_uniform(n);
            write_xy_csv(out / "w1.csv", "x", "w1", xs, us);
            W2Result w2 = w2_profile(p, L, w1, n);
            write_xy_csv(out / "w2.csv", "x", "w2", w2.x, w2.w);
        }
    }
    try {
        EnergyProfile z = zeta_profile(p.a, p.L, p.growth, p.d_u);
        auto [xs, zs] = z.sample_uniform(default_profile_nodes(p.L - p.a));
        write_xy_csv(out / "zeta.csv", "x", "zeta", xs, zs);
        rep["zeta_boundary_value"] = z.q();
    } catch (const NoBranch&) {
        rep["zeta_boundary_value"] = nullptr; // exclusion zone below branch minimum
    }
    write_text(out / "thinlimit.json", rep.dump(2) + "\n");
    write_text(out / "thinlimit.csv", csv);
    std::printf("thinlimit: V1 -> %s (closed form %s)\n",
                fmt17(rep["rows"].back()["V1"].get<double>()).c_str(),
                fmt17(rep["large_L_slope"].get<double>()).c_str());
    return 0;
}

int cmd_radial(const CommonOpts& copts) {
    RunConfig cfg = load_config(copts);
    const fs::path out = cfg.output_dir;
    write_metadata(out, cfg, "radial");
    RadialConfig rc;
    rc.N = cfg.radial.N;
    rc.rho = cfg.radial.rho;
    rc.R = cfg.radial.R;
    rc.sigma = cfg.radial.sigma;
    rc.d_u = cfg.params.d_u;
    rc.g = cfg.params.growth;
    rc.n_nodes = cfg.radial.nodes;

    json rep;
    RadialProfile zeta = annulus_zeta(rc);
    write_radial_profile(out / "zeta_radial.csv", "zeta", zeta);
    rep["zeta_boundary_value"] = zeta.value.back();

    auto ball = ball_solution(rc);
    if (ball) {
        write_radial_profile(out / "ball.csv", "V", *ball);
        rep["ball_center_value"] = ball->value.front();
    } else {
        rep["ball_center_value"] = nullptr;
    }

    auto R0 = threshold_radius(rc, cfg.radial.eta, cfg.radial.R_max);
    if (R0)
        rep["threshold_radius"] = *R0;
    else
        rep["threshold_radius"] = nullptr;
    rep["eta"] = cfg.radial.eta;
    rep["R_max"] = cfg.radial.R_max;
    write_text(out / "radial.json", rep.dump(2) + "\n");
    std::printf("radial: zeta_R(R)=%s threshold R0=%s\n",
                fmt17(zeta.value.back()).c_str(),
                R0 ? fmt17(*R0).c_str() : "none");
    return 0;
}

int cmd_classify(const CommonOpts& copts, const std::string& input) {
    RunConfig cfg = load_config(copts);
    const fs::path out = cfg.output_dir;
    write_metadata(out, cfg, "classify");
    TotalsSeries series = read_totals_csv(input);
    const TailStats ts = tail_stats(series, cfg.solver.tail_fraction);
    const Outcome o = classify(series, cfg.params.L, cfg.sweep.tol_eq, cfg.sweep.tol_ext,
                               cfg.solver.tail_fraction);
    write_text(out / "classification.json", outcome_to_json(o, ts).dump(2) + "\n");
    std::printf("classify: %s\n", to_string(o.cls));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exzone: diffusive predator-prey dynamics with an exclusion zone"};
    app.require_subcommand(1);

    CommonOpts c_sim, c_steady, c_sweep, c_thin, c_radial, c_classify;
    bool dump_fields = false;
    std::string guess = "dynamics";
    double steady_tol = 1e-10;
    std::string classify_input;

    CLI::App* sim = app.add_subcommand("simulate", "integrate the evolution system");
    add_common(sim, c_sim);
    sim->add_flag("--dump-fields", dump_fields, "write full space-time fields");

    CLI::App* steady = app.add_subcommand("steady", "solve the stationary system with certificates");
    add_common(steady, c_steady);
    steady->add_option("--guess", guess, "initial guess: dynamics|homogeneous|trivial");
    steady->add_option("--tol", steady_tol, "Newton residual tolerance");

    CLI::App* sweep = app.add_subcommand("sweep", "limiting profiles over exclusion-zone size");
    add_common(sweep, c_sweep);

    CLI::App* thin = app.add_subcommand("thinlimit", "thin-limit coefficients over an L list");
    add_common(thin, c_thin);

    CLI::App* radial = app.add_subcommand("radial", "radial auxiliary profiles and threshold radius");
    add_common(radial, c_radial);

    CLI::App* classify_cmd = app.add_subcommand("classify", "re-classify a stored trajectory");
    add_common(classify_cmd, c_classify);
    classify_cmd->add_option("--input", classify_input, "trajectory CSV (t,U,V)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(c_sim, dump_fields);
        if (steady->parsed()) return cmd_steady(c_steady, guess, steady_tol);
        if (sweep->parsed()) return cmd_sweep(c_sweep);
        if (thin->parsed()) return cmd_thinlimit(c_thin);
        if (radial->parsed()) return cmd_radial(c_radial);
        if (classify_cmd->parsed()) return cmd_classify(c_classify, classify_input);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
