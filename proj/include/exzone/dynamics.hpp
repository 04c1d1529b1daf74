#ifndef EXZONE_DYNAMICS_HPP
#define EXZONE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "exzone/errors.hpp"
#include "exzone/grid1d.hpp"
#include "exzone/growth.hpp"
#include "exzone/model.hpp"
#include "exzone/radau.hpp"

namespace exzone {

// The coupled reaction-diffusion right-hand side as a banded ODE system.
// u and v are interleaved over the predator domain so all couplings sit
// within bandwidth 2:
//   [u_0 v_0 u_1 v_1 ... u_{np-1} v_{np-1} u_{np} ... u_{M}]
class PredatorPreySystem {
public:
    PredatorPreySystem(const DualGrid& grid, const ModelParams& p)
        : grid_(&grid), p_(&p) {
        p.validate();
        np_ = grid.n_pred();
        nu_ = grid.n_u();
        n_ = 2 * np_ + grid.n_ex() - 1;
        // predation coefficient per predator-domain node; the shared
        // interface node is scaled by its predator-side cell fraction so the
        // discrete prey-loss/predator-gain budgets telescope.
        pred_.assign(np_, p.beta);
        pred_.back() = p.beta * grid.interface_fraction();
    }

    int size() const { return n_; }
    int lower() const { return 2; }
    int upper() const { return 2; }

    int iu(int i) const { return i < np_ ? 2 * i : np_ + i; }
    int iv(int i) const { return 2 * i + 1; }

    void pack(const State& s, std::span<double> y) const {
        if (static_cast<int>(s.u.size()) != nu_ || static_cast<int>(s.v.size()) != np_)
            throw SizeMismatch("state does not match grid");
        for (int i = 0; i < nu_; ++i) y[iu(i)] = s.u[i];
        for (int i = 0; i < np_; ++i) y[iv(i)] = s.v[i];
    }

    State unpack(std::span<const double> y, double t) const {
        State s;
        s.t = t;
        s.u.resize(nu_);
        s.v.resize(np_);
        for (int i = 0; i < nu_; ++i) s.u[i] = y[iu(i)];
        for (int i = 0; i < np_; ++i) s.v[i] = y[iv(i)];
        return s;
    }

    void rhs(double /*t*/, std::span<const double> y, std::span<double> f) const {
        const DualGrid& g = *grid_;
        const ModelParams& p = *p_;
        // prey equation
        for (int i = 0; i < nu_; ++i) {
            const double ui = y[iu(i)];
            double lap = g.lap_u_diag(i) * ui;
            if (i > 0) lap += g.lap_u_lo(i) * y[iu(i - 1)];
            if (i + 1 < nu_) lap += g.lap_u_hi(i) * y[iu(i + 1)];
            double val = p.d_u * lap + p.growth.f(ui);
            if (i < np_) val -= pred_[i] * ui * y[iv(i)];
            f[iu(i)] = val;
        }
        // predator equation on [0,a]
        for (int i = 0; i < np_; ++i) {
            const double vi = y[iv(i)];
            double lap = g.lap_v_diag(i) * vi;
            if (i > 0) lap += g.lap_v_lo(i) * y[iv(i - 1)];
            if (i + 1 < np_) lap += g.lap_v_hi(i) * y[iv(i + 1)];
            f[iv(i)] = p.d_v * lap + (p.alpha * y[iu(i)] - p.gamma) * vi;
        }
    }

    void jacobian(double /*t*/, std::span<const double> y, BandedReal& jac) const {
        const DualGrid& g = *grid_;
        const ModelParams& p = *p_;
        jac.set_zero();
        for (int i = 0; i < nu_; ++i) {
            const int r = iu(i);
            const double ui = y[iu(i)];
            if (i > 0) jac(r, iu(i - 1)) = p.d_u * g.lap_u_lo(i);
            double diag = p.d_u * g.lap_u_diag(i) + p.growth.df(ui);
            if (i < np_) {
                diag -= pred_[i] * y[iv(i)];
                jac(r, iv(i)) = -pred_[i] * ui;
            }
            jac(r, r) = diag;
            if (i + 1 < nu_) jac(r, iu(i + 1)) = p.d_u * g.lap_u_hi(i);
        }
        for (int i = 0; i < np_; ++i) {
            const int r = iv(i);
            if (i > 0) jac(r, iv(i - 1)) = p.d_v * g.lap_v_lo(i);
            jac(r, r) = p.d_v * g.lap_v_diag(i) + (p.alpha * y[iu(i)] - p.gamma);
            if (i + 1 < np_) jac(r, iv(i + 1)) = p.d_v * g.lap_v_hi(i);
            jac(r, iu(i)) = p.alpha * y[iv(i)];
        }
    }

private:
    const DualGrid* grid_;
    const ModelParams* p_;
    std::vector<double> pred_;
    int np_ = 0, nu_ = 0, n_ = 0;
};

// Convenience wrappers on unpacked fields.
inline void rhs(const DualGrid& grid, const ModelParams& p, const State& s,
                std::span<double> du, std::span<double> dv) {
    PredatorPreySystem sys(grid, p);
    std::vector<double> y(sys.size()), f(sys.size());
    sys.pack(s, y);
    sys.rhs(s.t, y, f);
    if (static_cast<int>(du.size()) != grid.n_u() || static_cast<int>(dv.size()) != grid.n_v())
        throw SizeMismatch("rhs output size");
    for (int i = 0; i < grid.n_u(); ++i) du[i] = f[sys.iu(i)];
    for (int i = 0; i < grid.n_v(); ++i) dv[i] = f[sys.iv(i)];
}

struct SolverStats {
    long nsteps = 0;
    long naccepted = 0;
    long nrejected = 0;
    long nfev = 0;
    long njac = 0;
    long nlu = 0;
};

struct Trajectory {
    std::vector<State> snapshots;
    std::vector<double> U_series; // total prey per snapshot
    std::vector<double> V_series; // total predators per snapshot
    ModelParams params;
    double grid_a = 0.0, grid_L = 0.0;
    int grid_n_pred = 0, grid_n_ex = 0;
    SolverStats stats;

    double t_begin() const { return snapshots.front().t; }
    double t_end() const { return snapshots.back().t; }
};

struct SimOptions {
    double rtol = 1e-7;
    double atol = 1e-9;
    double t_end = 0.0;      // 0 = default horizon
    int n_snapshots = 200;   // uniform over the full window
    double tail_fraction = 0.25;
    int n_tail = 2000;       // dense samples over the tail window
    bool record_fields = true; // false keeps only totals (sweep rows)
};

// Default horizon: several predator lifetimes and prey diffusion times.
inline double default_t_end(const ModelParams& p) {
    return std::max(50.0 / p.gamma, 20.0 * p.L * p.L / p.d_u);
}

inline std::vector<double> snapshot_times(double t0, double t1, const SimOptions& opt) {
    std::vector<double> ts;
    const int ns = std::max(2, opt.n_snapshots);
    for (int k = 0; k < ns; ++k)
        ts.push_back(t0 + (t1 - t0) * k / (ns - 1));
    const double tail0 = t1 - opt.tail_fraction * (t1 - t0);
    const int nt = std::max(2, opt.n_tail);
    for (int k = 0; k < nt; ++k)
        ts.push_back(tail0 + (t1 - tail0) * k / (nt - 1));
    std::sort(ts.begin(), ts.end());
    // drop near-duplicates
    std::vector<double> out;
    const double eps = 1e-12 * std::max(1.0, std::abs(t1 - t0));
    for (double t : ts)
        if (out.empty() || t - out.back() > eps) out.push_back(t);
    out.back() = t1;
    return out;
}

inline Trajectory simulate(const DualGrid& grid, const ModelParams& p,
                           const State& init, const SimOptions& opt = {}) {
    p.validate();
    PredatorPreySystem sys(grid, p);
    const double t0 = init.t;
    const double t1 = opt.t_end > 0.0 ? opt.t_end : t0 + default_t_end(p);
    if (!(t1 > t0)) throw DomainError("simulate: t_end must exceed the initial time");

    Trajectory traj;
    traj.params = p;
    traj.grid_a = grid.a();
    traj.grid_L = grid.L();
    traj.grid_n_pred = grid.n_pred();
    traj.grid_n_ex = grid.n_ex();

    std::vector<double> y(sys.size());
    sys.pack(init, y);

    const std::vector<double> targets = snapshot_times(t0, t1, opt);
    size_t next = 0;

    auto record = [&](const State& s) {
        traj.U_series.push_back(grid.integrate_u(s.u));
        traj.V_series.push_back(grid.integrate_v(s.v));
        if (opt.record_fields)
            traj.snapshots.push_back(s);
        else
            traj.snapshots.push_back(State{{}, {}, s.t});
    };

    // initial snapshot
    record(State{init.u, init.v, t0});
    while (next < targets.size() && targets[next] <= t0) ++next;

    RadauOptions ropt;
    ropt.rtol = opt.rtol;
    ropt.atol = opt.atol;

    std::vector<double> ybuf(sys.size());
    auto observer = [&](const RadauDense& dense) {
        const double tol = 1e-12 * std::max(1.0, std::abs(t1 - t0));
        while (next < targets.size() && targets[next] <= dense.t_end() + tol) {
            dense.eval(targets[next], ybuf);
            record(sys.unpack(ybuf, targets[next]));
            ++next;
        }
    };

    const RadauStats rs = radau_integrate(sys, t0, y, t1, ropt, observer);
    traj.stats = {rs.nsteps, rs.naccepted, rs.nrejected, rs.nfev, rs.njac, rs.nlu};

    // ensure the terminal state is present even if interpolation targets
    // were exhausted early by rounding
    if (next < targets.size() || traj.snapshots.back().t < t1 - 1e-12 * std::abs(t1 - t0))
        record(sys.unpack(y, t1));
    return traj;
}

inline Trajectory simulate(const DualGrid& grid, const ModelParams& p,
                           const State& init, double t_end, double rtol, double atol) {
    SimOptions opt;
    opt.t_end = t_end;
    opt.rtol = rtol;
    opt.atol = atol;
    return simulate(grid, p, init, opt);
}

struct TotalsSeries {
    std::vector<double> t;
    std::vector<double> U;
    std::vector<double> V;
};

inline TotalsSeries totals(const Trajectory& traj) {
    if (traj.snapshots.empty()) throw DomainError("totals: empty trajectory");
    TotalsSeries s;
    s.t.reserve(traj.snapshots.size());
    for (const auto& snap : traj.snapshots) s.t.push_back(snap.t);
    s.U = traj.U_series;
    s.V = traj.V_series;
    return s;
}

} // namespace exzone

#endif
