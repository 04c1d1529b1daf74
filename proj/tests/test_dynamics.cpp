#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "exzone/dynamics.hpp"
#include "exzone/steady.hpp"

using namespace exzone;

static ModelParams table1_params() {
    ModelParams p;
    p.alpha = 14.0;
    p.beta = 12.0;
    p.gamma = 5.0;
    p.d_u = 0.1;
    p.d_v = 0.05;
    p.growth = GrowthFn(1.0, 0.05);
    p.a = 0.4;
    p.L = 1.0;
    return p;
}

TEST_CASE("equilibria of the right-hand side") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 21, 31);
    std::vector<double> du(grid.n_u()), dv(grid.n_v());

    State ones{std::vector<double>(grid.n_u(), 1.0), std::vector<double>(grid.n_v(), 0.0), 0.0};
    rhs(grid, p, ones, du, dv);
    for (double x : du) CHECK(x == 0.0);
    for (double x : dv) CHECK(x == 0.0);

    State allee{std::vector<double>(grid.n_u(), p.growth.theta),
                std::vector<double>(grid.n_v(), 0.0), 0.0};
    rhs(grid, p, allee, du, dv);
    for (double x : du) CHECK(std::abs(x) < 1e-14);
    for (double x : dv) CHECK(x == 0.0);

    // homogeneous coexistence values balance reaction and predation exactly
    // at strictly interior predator nodes and in the v equation
    auto eq = homogeneous_equilibrium(p);
    REQUIRE(eq);
    CHECK(eq->first == doctest::Approx(0.35714285714).epsilon(1e-9));
    CHECK(eq->second == doctest::Approx(0.32908163265).epsilon(1e-9));
    State hom{std::vector<double>(grid.n_u(), eq->first),
              std::vector<double>(grid.n_v(), eq->second), 0.0};
    rhs(grid, p, hom, du, dv);
    for (int i = 0; i + 1 < grid.n_v(); ++i) CHECK(std::abs(du[i]) < 1e-13);
    for (double x : dv) CHECK(std::abs(x) < 1e-13);
    // exclusion zone keeps the bare growth term
    for (int i = grid.n_v(); i < grid.n_u(); ++i)
        CHECK(du[i] == doctest::Approx(p.growth.f(eq->first)).epsilon(1e-12));
}

TEST_CASE("analytic Jacobian matches finite differences") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 13, 17);
    PredatorPreySystem sys(grid, p);
    const int n = sys.size();

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> y(n);
        for (double& yi : y) yi = dist(rng);
        BandedReal jac(n, sys.lower(), sys.upper());
        sys.jacobian(0.0, y, jac);

        std::vector<double> fp(n), fm(n), yp(n), ym(n);
        double scale = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = std::max(0, j - 2); i <= std::min(n - 1, j + 2); ++i)
                scale = std::max(scale, std::abs(jac(i, j)));
        double worst = 0.0;
        for (int j = 0; j < n; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(y[j]));
            yp = y;
            ym = y;
            yp[j] += h;
            ym[j] -= h;
            sys.rhs(0.0, yp, fp);
            sys.rhs(0.0, ym, fm);
            for (int i = std::max(0, j - 2); i <= std::min(n - 1, j + 2); ++i) {
                const double fd = (fp[i] - fm[i]) / (2.0 * h);
                worst = std::max(worst, std::abs(fd - jac(i, j)));
            }
            // off-band entries must be structurally zero
            for (int i = 0; i < n; ++i) {
                if (std::abs(i - j) > 2) {
                    const double fd = (fp[i] - fm[i]) / (2.0 * h);
                    CHECK(std::abs(fd) < 1e-9 * std::max(1.0, scale));
                }
            }
        }
        CHECK(worst <= 1e-6 * scale);
    }
}

TEST_CASE("Jacobian structure at v = 0") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 9, 9);
    PredatorPreySystem sys(grid, p);
    std::vector<double> y(sys.size(), 0.0);
    for (int i = 0; i < grid.n_u(); ++i) y[sys.iu(i)] = 0.8;
    BandedReal jac(sys.size(), 2, 2);
    sys.jacobian(0.0, y, jac);
    for (int i = 0; i < grid.n_v(); ++i) {
        // predator row: pure diffusion plus alpha u - gamma, no coupling back
        CHECK(jac(sys.iv(i), sys.iu(i)) == 0.0);
        CHECK(jac(sys.iv(i), sys.iv(i)) ==
              doctest::Approx(p.d_v * grid.lap_v_diag(i) + p.alpha * 0.8 - p.gamma));
        // prey row keeps the predation coupling -beta 1_A u
        double beta_i = p.beta;
        if (i == grid.n_v() - 1) beta_i *= grid.interface_fraction();
        CHECK(jac(sys.iu(i), sys.iv(i)) == doctest::Approx(-beta_i * 0.8));
        CHECK(jac(sys.iu(i), sys.iu(i)) ==
              doctest::Approx(p.d_u * grid.lap_u_diag(i) + p.growth.df(0.8)));
    }
}

TEST_CASE("simulation totals and fixed points") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(0.8, 1.0, 33, 9);
    ModelParams p8 = p;
    p8.a = 0.8;

    State init = default_initial_state(grid);
    CHECK(grid.integrate_u(init.u) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(grid.integrate_v(init.v) == doctest::Approx(0.4).epsilon(1e-14));

    // starting exactly at (1, 0): nothing moves
    State trivial{std::vector<double>(grid.n_u(), 1.0), std::vector<double>(grid.n_v(), 0.0), 0.0};
    SimOptions opt;
    opt.t_end = 5.0;
    opt.n_snapshots = 10;
    opt.n_tail = 10;
    Trajectory traj = simulate(grid, p8, trivial, opt);
    const State& last = traj.snapshots.back();
    for (int i = 0; i < grid.n_u(); ++i) CHECK(std::abs(last.u[i] - 1.0) <= 10.0 * opt.atol);
    for (int i = 0; i < grid.n_v(); ++i) CHECK(std::abs(last.v[i]) <= 10.0 * opt.atol);

    // v = 0 is invariant
    TotalsSeries ts = totals(traj);
    for (double V : ts.V) CHECK(std::abs(V) <= 10.0 * opt.atol);
    for (size_t k = 1; k < ts.t.size(); ++k) CHECK(ts.t[k] > ts.t[k - 1]);
}

TEST_CASE("Gronwall decay of the predator population when alpha < gamma") {
    ModelParams p = table1_params();
    p.alpha = 1.0;
    p.gamma = 2.0;
    DualGrid grid = build_grid(p.a, p.L, 21, 31);
    SimOptions opt;
    opt.t_end = 8.0;
    opt.rtol = 1e-8;
    opt.atol = 1e-12;
    opt.n_snapshots = 60;
    opt.n_tail = 60;
    Trajectory traj = simulate(grid, p, default_initial_state(grid), opt);
    TotalsSeries ts = totals(traj);
    const double V0 = ts.V.front();
    const double rate = p.gamma - p.alpha;
    for (size_t k = 0; k < ts.t.size(); ++k)
        CHECK(ts.V[k] <= V0 * std::exp(-rate * ts.t[k]) * (1.0 + 1e-6));
    // fitted decay rate over the tail at least 98% of gamma - alpha
    const size_t k0 = ts.t.size() * 3 / 4;
    const double fitted = std::log(ts.V[k0] / ts.V.back()) / (ts.t.back() - ts.t[k0]);
    CHECK(fitted >= rate * 0.98);
}

TEST_CASE("bounds are respected to solver tolerance") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 21, 31);
    SimOptions opt;
    opt.t_end = 12.0;
    opt.n_snapshots = 40;
    opt.n_tail = 40;
    Trajectory traj = simulate(grid, p, default_initial_state(grid), opt);
    for (const State& s : traj.snapshots) {
        for (double u : s.u) {
            CHECK(u >= -opt.atol);
            CHECK(u <= 1.0 + opt.atol);
        }
        for (double v : s.v) CHECK(v >= -opt.atol);
    }
}

TEST_CASE("converged steady states are fixed points of the integrator") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 31, 41);
    SimOptions warm;
    warm.t_end = 60.0;
    warm.n_snapshots = 20;
    warm.n_tail = 60;
    State guess = steady_initial_guess(grid, p, SteadyGuess::FromDynamics, warm);
    SteadyState st = newton_steady(grid, p, guess, 1e-12);

    SimOptions opt;
    opt.t_end = 5.0;
    opt.n_snapshots = 10;
    opt.n_tail = 50;
    State init{st.u, st.v, 0.0};
    Trajectory traj = simulate(grid, p, init, opt);
    const State& last = traj.snapshots.back();
    double drift = 0.0;
    for (int i = 0; i < grid.n_u(); ++i) drift = std::max(drift, std::abs(last.u[i] - st.u[i]));
    for (int i = 0; i < grid.n_v(); ++i) drift = std::max(drift, std::abs(last.v[i] - st.v[i]));
    CHECK(drift <= 10.0 * opt.atol);
}

TEST_CASE("recorded totals are recomputable from snapshots") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 21, 31);
    SimOptions opt;
    opt.t_end = 8.0;
    opt.n_snapshots = 30;
    opt.n_tail = 60;
    Trajectory traj = simulate(grid, p, default_initial_state(grid), opt);
    REQUIRE(traj.snapshots.size() == traj.U_series.size());
    for (size_t k = 0; k < traj.snapshots.size(); ++k) {
        CHECK(traj.U_series[k] == grid.integrate_u(traj.snapshots[k].u));
        CHECK(traj.V_series[k] == grid.integrate_v(traj.snapshots[k].v));
        if (k > 0) CHECK(traj.snapshots[k].t > traj.snapshots[k - 1].t);
    }
}

TEST_CASE("equilibrium run matches the steady solver") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 41, 61);
    SimOptions opt;
    opt.t_end = 80.0;
    opt.n_snapshots = 30;
    opt.n_tail = 60;
    Trajectory traj = simulate(grid, p, default_initial_state(grid), opt);
    SteadyState st = newton_steady(grid, p, traj.snapshots.back(), 1e-11);
    const double U_dyn = traj.U_series.back();
    const double V_dyn = traj.V_series.back();
    const double U_st = grid.integrate_u(st.u);
    const double V_st = grid.integrate_v(st.v);
    CHECK(std::abs(U_dyn - U_st) < 1e-4);
    CHECK(std::abs(V_dyn - V_st) < 1e-4);
}

TEST_CASE("mesh refinement consistency of terminal totals") {
    ModelParams p = table1_params();
    auto terminal = [&](int np, int ne) {
        DualGrid grid = build_grid(p.a, p.L, np, ne);
        SimOptions opt;
        opt.t_end = 10.0;
        opt.n_snapshots = 5;
        opt.n_tail = 10;
        opt.record_fields = false;
        Trajectory traj = simulate(grid, p, default_initial_state(grid), opt);
        return std::pair{traj.U_series.back(), traj.V_series.back()};
    };
    auto [U1, V1] = terminal(11, 16);
    auto [U2, V2] = terminal(21, 31);
    auto [U3, V3] = terminal(41, 61);
    const double dU1 = std::abs(U2 - U1), dU2 = std::abs(U3 - U2);
    const double dV1 = std::abs(V2 - V1), dV2 = std::abs(V3 - V2);
    if (dU1 > 1e-10) CHECK(dU2 < dU1);
    if (dV1 > 1e-10) CHECK(dV2 < dV1);
}
