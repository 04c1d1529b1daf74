#ifndef EXZONE_IO_HPP
#define EXZONE_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "exzone/dynamics.hpp"
#include "exzone/errors.hpp"
#include "exzone/radial.hpp"
#include "exzone/steady.hpp"
#include "exzone/sweep.hpp"

namespace exzone {

inline constexpr const char* tool_version = "0.1.0";

// full round-trip precision so determinism is byte-testable
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot open for writing: " + path.string());
    out << text;
}

inline void write_totals_csv(const std::filesystem::path& path, const TotalsSeries& s) {
    std::string text = "t,U,V\n";
    for (size_t k = 0; k < s.t.size(); ++k)
        text += fmt17(s.t[k]) + "," + fmt17(s.U[k]) + "," + fmt17(s.V[k]) + "\n";
    write_text(path, text);
}

inline TotalsSeries read_totals_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open trajectory file: " + path.string());
    TotalsSeries s;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double t, U, V;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &U, &V) != 3)
            throw DomainError("malformed trajectory row: " + line);
        s.t.push_back(t);
        s.U.push_back(U);
        s.V.push_back(V);
    }
    if (s.t.empty()) throw DomainError("trajectory file has no rows: " + path.string());
    return s;
}

inline void write_xy_csv(const std::filesystem::path& path, const char* xname, const char* yname,
                         std::span<const double> x, std::span<const double> y) {
    std::string text = std::string(xname) + "," + yname + "\n";
    for (size_t k = 0; k < x.size(); ++k)
        text += fmt17(x[k]) + "," + fmt17(y[k]) + "\n";
    write_text(path, text);
}

// long-format field dumps, one row per (snapshot, node)
inline void write_field_csv(const std::filesystem::path& path, const char* value_name,
                            const std::vector<double>& nodes,
                            const Trajectory& traj, bool prey) {
    std::string text = std::string("t,x,") + value_name + "\n";
    for (const State& s : traj.snapshots) {
        const std::vector<double>& f = prey ? s.u : s.v;
        if (f.empty()) continue;
        for (size_t i = 0; i < nodes.size(); ++i)
            text += fmt17(s.t) + "," + fmt17(nodes[i]) + "," + fmt17(f[i]) + "\n";
    }
    write_text(path, text);
}

inline void write_steady_state(const std::filesystem::path& dir, const DualGrid& grid,
                               const ModelParams& p, const SteadyState& st) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_xy_csv(dir / "steady_u.csv", "x", "u", grid.nodes_u(), st.u);
    write_xy_csv(dir / "steady_v.csv", "x", "v", grid.nodes_v(), st.v);
    nlohmann::json cert;
    cert["residual_inf"] = st.residual_inf;
    cert["lambda_u"] = st.lambda_u;
    cert["eig_mismatch"] = st.eig_mismatch;
    cert["mass_balance_residual"] = mass_balance_residual(grid, p, st);
    cert["newton_iterations"] = st.iterations;
    write_text(dir / "certificates.json", cert.dump(2) + "\n");
}

inline void write_limiting_profile(const std::filesystem::path& dir, const LimitingProfile& prof) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::string text = "a,U_hat,U_bar,U_check,V_hat,V_bar,V_check,class,period,flags\n";
    for (const ProfileRow& r : prof.rows) {
        text += fmt17(r.a) + ",";
        if (r.ok) {
            text += fmt17(r.stats.U_hat) + "," + fmt17(r.stats.U_bar) + "," +
                    fmt17(r.stats.U_check) + "," + fmt17(r.stats.V_hat) + "," +
                    fmt17(r.stats.V_bar) + "," + fmt17(r.stats.V_check) + "," +
                    to_string(r.outcome.cls) + "," + fmt17(r.outcome.period);
        } else {
            text += ",,,,,,failed,0";
        }
        text += "," + r.flag + "\n";
    }
    write_text(dir / "sweep.csv", text);

    nlohmann::json mk;
    if (prof.markers.a_hopf) mk["a_hopf"] = *prof.markers.a_hopf;
    else mk["a_hopf"] = nullptr;
    if (prof.markers.a_ext) mk["a_ext"] = *prof.markers.a_ext;
    else mk["a_ext"] = nullptr;
    if (prof.markers.a_max) mk["a_max"] = *prof.markers.a_max;
    else mk["a_max"] = nullptr;
    mk["grid_cell"] = prof.markers.cell;
    mk["tol_eq"] = prof.tol_eq;
    mk["tol_ext"] = prof.tol_ext;
    mk["tail_fraction"] = prof.tail_fraction;
    write_text(dir / "markers.json", mk.dump(2) + "\n");
}

inline void write_radial_profile(const std::filesystem::path& path, const char* name,
                                 const RadialProfile& prof) {
    write_xy_csv(path, "r", name, prof.r, prof.value);
}

} // namespace exzone

#endif
