#ifndef EXZONE_SWEEP_HPP
#define EXZONE_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "exzone/dynamics.hpp"
#include "exzone/errors.hpp"

namespace exzone {

enum class OutcomeClass { CoexistenceEquilibrium, Extinction, PreyOnly, LimitCycle, Irregular };

inline const char* to_string(OutcomeClass c) {
    switch (c) {
    case OutcomeClass::CoexistenceEquilibrium: return "coexistence_equilibrium";
    case OutcomeClass::Extinction: return "extinction";
    case OutcomeClass::PreyOnly: return "prey_only";
    case OutcomeClass::LimitCycle: return "limit_cycle";
    case OutcomeClass::Irregular: return "irregular";
    }
    return "?";
}

struct TailStats {
    double U_hat = 0.0, U_bar = 0.0, U_check = 0.0;
    double V_hat = 0.0, V_bar = 0.0, V_check = 0.0;
    size_t first = 0; // index of the first tail sample
    int n_samples = 0;
};

struct Outcome {
    OutcomeClass cls = OutcomeClass::Irregular;
    double period = 0.0; // limit cycles only
    double dU = 0.0, dV = 0.0;
    int n_peaks = 0;
    double peak_spacing_rsd = 0.0;
};

inline TailStats tail_stats(const TotalsSeries& s, double frac = 0.25) {
    if (s.t.size() < 2) throw InsufficientTail("tail_stats: series too short");
    const double t0 = s.t.front(), t1 = s.t.back();
    const double tail_start = t1 - frac * (t1 - t0);
    size_t first = 0;
    while (first < s.t.size() && s.t[first] < tail_start) ++first;
    const int n = static_cast<int>(s.t.size() - first);
    if (n < 50)
        throw InsufficientTail("tail_stats: only " + std::to_string(n) +
                               " samples in the tail window");
    TailStats out;
    out.first = first;
    out.n_samples = n;
    out.U_hat = out.U_check = s.U[first];
    out.V_hat = out.V_check = s.V[first];
    double su = 0.0, sv = 0.0;
    for (size_t k = first; k < s.t.size(); ++k) {
        out.U_hat = std::max(out.U_hat, s.U[k]);
        out.U_check = std::min(out.U_check, s.U[k]);
        out.V_hat = std::max(out.V_hat, s.V[k]);
        out.V_check = std::min(out.V_check, s.V[k]);
        su += s.U[k];
        sv += s.V[k];
    }
    out.U_bar = su / n;
    out.V_bar = sv / n;
    return out;
}

namespace detail_sweep {

struct Peak {
    size_t idx;
    double t_refined;
};

// local maxima above the mean with a prominence floor; peak times refined by
// a parabola through the three neighbouring samples
inline std::vector<Peak> find_peaks(const TotalsSeries& s, const TailStats& ts,
                                    double prominence_floor) {
    std::vector<Peak> peaks;
    const size_t n = s.t.size();
    for (size_t i = std::max<size_t>(ts.first + 1, 1); i + 1 < n; ++i) {
        const double v = s.V[i];
        if (!(v > s.V[i - 1] && v >= s.V[i + 1])) continue;
        if (!(v > ts.V_bar)) continue;
        // prominence: lowest descent before re-ascending above the peak
        double left_min = v;
        for (size_t j = i; j-- > ts.first;) {
            left_min = std::min(left_min, s.V[j]);
            if (s.V[j] > v) break;
        }
        double right_min = v;
        for (size_t j = i + 1; j < n; ++j) {
            right_min = std::min(right_min, s.V[j]);
            if (s.V[j] > v) break;
        }
        if (v - std::max(left_min, right_min) < prominence_floor) continue;
        // parabolic vertex (nonuniform sample times)
        const double dl = s.t[i] - s.t[i - 1], dr = s.t[i] - s.t[i + 1];
        const double num = dl * dl * (v - s.V[i + 1]) - dr * dr * (v - s.V[i - 1]);
        const double den = dl * (v - s.V[i + 1]) - dr * (v - s.V[i - 1]);
        double tr = s.t[i];
        if (std::abs(den) > 1e-300) tr -= 0.5 * num / den;
        peaks.push_back({i, tr});
    }
    return peaks;
}

} // namespace detail_sweep

// decision tree over the tail statistics; L is the prey-domain length
inline Outcome classify(const TotalsSeries& s, double L, double tol_eq = 1e-4,
                        double tol_ext = 1e-5, double frac = 0.25) {
    const TailStats ts = tail_stats(s, frac);
    Outcome out;
    out.dU = ts.U_hat - ts.U_check;
    out.dV = ts.V_hat - ts.V_check;

    if (ts.V_bar < tol_ext && ts.U_bar < tol_ext * L) {
        out.cls = OutcomeClass::Extinction;
        return out;
    }
    if (ts.V_bar < tol_ext && ts.U_bar >= (1.0 - tol_eq) * L) {
        out.cls = OutcomeClass::PreyOnly;
        return out;
    }
    const double scale = std::max(ts.U_bar, ts.V_bar);
    if (out.dU < tol_eq * scale && out.dV < tol_eq * scale) {
        out.cls = OutcomeClass::CoexistenceEquilibrium;
        return out;
    }
    const double floor = 0.25 * (ts.V_hat - ts.V_check);
    const auto peaks = detail_sweep::find_peaks(s, ts, floor);
    out.n_peaks = static_cast<int>(peaks.size());
    if (peaks.size() >= 4) {
        std::vector<double> gaps;
        for (size_t k = 1; k < peaks.size(); ++k)
            gaps.push_back(peaks[k].t_refined - peaks[k - 1].t_refined);
        double mean = 0.0;
        for (double g : gaps) mean += g;
        mean /= gaps.size();
        double var = 0.0;
        for (double g : gaps) var += (g - mean) * (g - mean);
        const double rsd = std::sqrt(var / gaps.size()) / mean;
        out.peak_spacing_rsd = rsd;
        if (rsd < 0.05) {
            out.cls = OutcomeClass::LimitCycle;
            out.period = mean;
            return out;
        }
    }
    out.cls = OutcomeClass::Irregular;
    return out;
}

struct ProfileRow {
    double a = 0.0;
    TailStats stats;
    Outcome outcome;
    bool ok = false;
    std::string flag;      // failure or refinement note
    double t_end_used = 0.0;
    int extensions = 0;
};

struct Markers {
    std::optional<double> a_hopf;
    std::optional<double> a_ext;
    std::optional<double> a_max;
    double cell = 0.0; // grid spacing at the reported markers
};

struct LimitingProfile {
    std::vector<ProfileRow> rows;
    Markers markers;
    ModelParams base;
    double tol_eq = 0.0, tol_ext = 0.0, tail_fraction = 0.25;
};

struct SweepOptions {
    std::vector<double> a_grid;
    double tol_eq = 1e-4;
    double tol_ext = 1e-5;
    SimOptions sim;          // t_end == 0 means per-row default horizon
    int jobs = 1;
    bool adaptive_horizon = true;
    int grid_min_nodes = 9;
    double target_h = 0.0;   // 0 = default resolution rule
};

namespace detail_sweep {

// a classification close to one of its thresholds gets a longer look
inline bool borderline(const Outcome& o, const TailStats& ts, double tol_eq, double tol_ext) {
    const double scale = std::max(ts.U_bar, ts.V_bar);
    const double rel_amp = scale > 0.0 ? std::max(o.dU, o.dV) / scale : 0.0;
    switch (o.cls) {
    case OutcomeClass::CoexistenceEquilibrium:
        return rel_amp > 0.5 * tol_eq;
    case OutcomeClass::Extinction:
    case OutcomeClass::PreyOnly:
        return ts.V_bar > 0.5 * tol_ext;
    case OutcomeClass::LimitCycle:
        return o.n_peaks < 6 || o.peak_spacing_rsd > 0.025;
    case OutcomeClass::Irregular:
        return rel_amp < 2.0 * tol_eq ||
               (o.n_peaks >= 4 && o.peak_spacing_rsd < 0.10);
    }
    return false;
}

inline ProfileRow run_row(const ModelParams& base, double a, const SweepOptions& opt) {
    ProfileRow row;
    row.a = a;
    ModelParams p = base;
    p.a = a;
    auto make_row_grid = [&]() {
        if (opt.target_h > 0.0) {
            const int np = std::max(opt.grid_min_nodes,
                                    static_cast<int>(std::ceil(a / opt.target_h)) + 1);
            const int ne = std::max(opt.grid_min_nodes,
                                    static_cast<int>(std::ceil((p.L - a) / opt.target_h)) + 1);
            return DualGrid(a, p.L, np, ne);
        }
        return default_grid(a, p.L, p.d_u, p.growth.r, opt.grid_min_nodes);
    };
    try {
        p.validate();
        DualGrid grid = make_row_grid();
        const double t_base = opt.sim.t_end > 0.0 ? opt.sim.t_end : default_t_end(p);
        double t_end = t_base;
        for (int attempt = 0;; ++attempt) {
            SimOptions sim = opt.sim;
            sim.t_end = t_end;
            sim.record_fields = false;
            Trajectory traj = simulate(grid, p, default_initial_state(grid), sim);
            TotalsSeries series = totals(traj);
            row.stats = tail_stats(series, sim.tail_fraction);
            row.outcome = classify(series, p.L, opt.tol_eq, opt.tol_ext, sim.tail_fraction);
            row.t_end_used = t_end;
            row.extensions = attempt;
            if (!opt.adaptive_horizon ||
                !borderline(row.outcome, row.stats, opt.tol_eq, opt.tol_ext) ||
                t_end * 1.5 > 4.0 * t_base) {
                if (attempt > 0) row.flag = "horizon_extended";
                break;
            }
            t_end *= 1.5;
        }
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.flag = e.what();
    }
    return row;
}

} // namespace detail_sweep

// The mean prey population is expected to fall as the predator domain grows;
// rows that rise above their left neighbour by more than the noise tolerance
// are flagged for refinement (soft property, never fatal).
inline void flag_nonmonotone_prey(std::vector<ProfileRow>& rows, double rel_tol = 1e-2) {
    const ProfileRow* prev = nullptr;
    for (ProfileRow& r : rows) {
        if (!r.ok) continue;
        if (prev && r.stats.U_bar > prev->stats.U_bar * (1.0 + rel_tol)) {
            if (!r.flag.empty()) r.flag += ";";
            r.flag += "U_bar_increased";
        }
        prev = &r;
    }
}

inline Markers detect_markers(const std::vector<ProfileRow>& rows) {
    Markers m;
    if (rows.size() < 3) return m;
    for (size_t k = 0; k + 1 < rows.size(); ++k) {
        if (!rows[k].ok || !rows[k + 1].ok) continue;
        const OutcomeClass c0 = rows[k].outcome.cls, c1 = rows[k + 1].outcome.cls;
        if (!m.a_hopf && c0 == OutcomeClass::CoexistenceEquilibrium &&
            c1 == OutcomeClass::LimitCycle)
            m.a_hopf = 0.5 * (rows[k].a + rows[k + 1].a);
        if (!m.a_ext && c0 != OutcomeClass::Extinction && c1 == OutcomeClass::Extinction)
            m.a_ext = 0.5 * (rows[k].a + rows[k + 1].a);
    }
    double vbest = -1.0;
    size_t kbest = 0;
    for (size_t k = 0; k < rows.size(); ++k) {
        if (!rows[k].ok) continue;
        if (rows[k].stats.V_bar > vbest) {
            vbest = rows[k].stats.V_bar;
            kbest = k;
        }
    }
    if (vbest >= 0.0) {
        m.a_max = rows[kbest].a;
        if (kbest + 1 < rows.size())
            m.cell = rows[kbest + 1].a - rows[kbest].a;
        else if (kbest > 0)
            m.cell = rows[kbest].a - rows[kbest - 1].a;
    }
    return m;
}

// one simulate + classify per a value; rows are independent tasks pulled
// from an atomic counter by a bounded pool, assembled in a-order
inline LimitingProfile limiting_profile(const ModelParams& base, const SweepOptions& opt) {
    if (opt.a_grid.empty()) throw DomainError("limiting_profile: empty a grid");
    for (size_t k = 0; k < opt.a_grid.size(); ++k) {
        if (!(opt.a_grid[k] > 0.0 && opt.a_grid[k] < base.L))
            throw DomainError("limiting_profile: a values must lie in (0, L)");
        if (k > 0 && !(opt.a_grid[k] > opt.a_grid[k - 1]))
            throw DomainError("limiting_profile: a grid must be strictly increasing");
    }
    LimitingProfile out;
    out.base = base;
    out.tol_eq = opt.tol_eq;
    out.tol_ext = opt.tol_ext;
    out.tail_fraction = opt.sim.tail_fraction;
    out.rows.resize(opt.a_grid.size());

    const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(opt.a_grid.size())));
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= opt.a_grid.size()) break;
            out.rows[k] = detail_sweep::run_row(base, opt.a_grid[k], opt);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    flag_nonmonotone_prey(out.rows);
    out.markers = detect_markers(out.rows);
    return out;
}

inline std::vector<double> uniform_a_grid(double a_min, double a_max, int count) {
    if (!(count >= 1) || !(a_max >= a_min))
        throw DomainError("uniform_a_grid: bad range");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = a_min;
        return g;
    }
    for (int k = 0; k < count; ++k) g[k] = a_min + (a_max - a_min) * k / (count - 1);
    return g;
}

} // namespace exzone

#endif
