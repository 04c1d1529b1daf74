#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "exzone/asymptotics.hpp"
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

TEST_CASE("homogeneous equilibrium") {
    ModelParams p = table1_params();
    auto eq = homogeneous_equilibrium(p);
    REQUIRE(eq.has_value());
    CHECK(eq->first == doctest::Approx(5.0 / 14.0).epsilon(1e-14));
    // v = f(u)/(beta u) evaluated directly
    CHECK(eq->second == doctest::Approx(0.329081632653061).epsilon(1e-12));

    ModelParams below;
    below.alpha = 1.0;
    below.gamma = 0.05;
    below.growth = GrowthFn(1.0, 0.3);
    below.beta = 3.0;
    below.d_u = below.d_v = 1.0;
    below.a = 0.5;
    below.L = 5.0;
    CHECK(!homogeneous_equilibrium(below).has_value()); // gamma/alpha < theta

    ModelParams above = table1_params();
    above.alpha = 1.0;
    above.gamma = 2.0;
    CHECK(!homogeneous_equilibrium(above).has_value()); // gamma/alpha > 1
}

TEST_CASE("principal eigenpair for constant prey") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 81, 7);

    std::vector<double> ones(grid.n_v(), 1.0);
    EigenPair pair = principal_eigenpair(grid, p, ones);
    CHECK(std::abs(pair.lambda - (p.gamma - p.alpha)) < 1e-10);
    for (double phi : pair.phi) CHECK(std::abs(phi - 1.0) < 1e-10);
    CHECK(pair.eta_lower > 0.999999);

    std::vector<double> c(grid.n_v(), 0.63);
    pair = principal_eigenpair(grid, p, c);
    CHECK(std::abs(pair.lambda - (p.gamma - p.alpha * 0.63)) < 1e-10);

    std::vector<double> zero(grid.n_v(), 0.0);
    pair = principal_eigenpair(grid, p, zero);
    CHECK(std::abs(pair.lambda - p.gamma) < 1e-10);

    // restriction from the full prey mesh
    std::vector<double> onu(grid.n_u(), 1.0);
    pair = principal_eigenpair(grid, p, onu);
    CHECK(std::abs(pair.lambda - (p.gamma - p.alpha)) < 1e-10);

    std::vector<double> bad(grid.n_u() + 3, 1.0);
    CHECK_THROWS_AS(principal_eigenpair(grid, p, bad), SizeMismatch);
}

TEST_CASE("eigenvalue bounds, positivity and monotonicity") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 61, 7);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<double> u1(grid.n_v()), u2(grid.n_v());
        for (int i = 0; i < grid.n_v(); ++i) {
            // smooth-ish random fields with u1 <= u2
            const double base = 0.5 + 0.4 * std::sin(2.0 * M_PI * i / grid.n_v() + trial);
            u1[i] = std::clamp(base * dist(rng), 0.0, 1.0);
            u2[i] = std::clamp(u1[i] + 0.3 * dist(rng), 0.0, 1.0);
        }
        EigenPair e1 = principal_eigenpair(grid, p, u1);
        EigenPair e2 = principal_eigenpair(grid, p, u2);
        CHECK(e1.lambda >= p.gamma - p.alpha - 1e-9);
        CHECK(e1.lambda <= p.gamma + 1e-9);
        CHECK(e1.eta_lower > 0.0);
        CHECK(e2.lambda <= e1.lambda + 1e-9); // pointwise larger prey lowers lambda
    }
}

TEST_CASE("newton on the trivial prey-only state") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 41, 61);
    SteadyState st = newton_steady(grid, p, steady_initial_guess(grid, p, SteadyGuess::TrivialPreyOnly));
    CHECK(st.residual_inf == 0.0); // constants are in the Laplacian kernel exactly
    CHECK(st.iterations == 0);
    for (double v : st.v) CHECK(v == 0.0);
    CHECK(st.lambda_u == doctest::Approx(p.gamma - p.alpha).epsilon(1e-10));
    CHECK(mass_balance_residual(grid, p, st) < 1e-14);
}

TEST_CASE("homogeneous pair is not a steady state of the spatial system") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 41, 61);
    auto eq = homogeneous_equilibrium(p);
    REQUIRE(eq.has_value());
    State s;
    s.u.assign(grid.n_u(), eq->first);
    s.v.assign(grid.n_v(), eq->second);
    std::vector<double> du(grid.n_u()), dv(grid.n_v());
    rhs(grid, p, s, du, dv);
    // predation is off in the exclusion zone, so f(u-hat) remains there
    double rmax = 0.0;
    for (double x : du) rmax = std::max(rmax, std::abs(x));
    CHECK(rmax > 0.5);
    // interior predator-domain nodes balance exactly; so does the v equation
    for (int i = 0; i + 1 < grid.n_v(); ++i) CHECK(std::abs(du[i]) < 1e-12);
    for (double x : dv) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("polished coexistence state carries certificates") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 41, 61);
    SimOptions opt;
    opt.t_end = 60.0;
    opt.n_tail = 50;
    State guess = steady_initial_guess(grid, p, SteadyGuess::FromDynamics, opt);
    SteadyState st = newton_steady(grid, p, guess, 1e-11);
    CHECK(st.residual_inf <= 1e-11);

    const double vmax = *std::max_element(st.v.begin(), st.v.end());
    CHECK(vmax > 0.05); // genuinely coexistent
    CHECK(std::abs(st.lambda_u) <= 1e-6 * p.gamma);
    CHECK(st.eig_mismatch <= 1e-4);

    const double V = grid.integrate_v(st.v);
    CHECK(mass_balance_residual(grid, p, st) <= 1e-6 * V);

    // restarting Newton from the solution stays put
    State again{st.u, st.v, 0.0};
    SteadyState st2 = newton_steady(grid, p, again, 1e-11);
    double drift = 0.0;
    for (int i = 0; i < grid.n_u(); ++i) drift = std::max(drift, std::abs(st2.u[i] - st.u[i]));
    CHECK(drift < 1e-9);

    // the exclusion-zone barrier brackets the prey from below on [a, L]
    EnergyProfile zeta = zeta_profile(p.a, p.L, p.growth, p.d_u);
    const double qtol = 2.0 * grid.h_ex() * grid.h_ex() / (p.d_u) + 1e-6;
    for (int i = grid.interface_index(); i < grid.n_u(); ++i) {
        const double zi = zeta.value(grid.nodes_u()[i]);
        CHECK(st.u[i] >= zi - qtol);
        CHECK(st.u[i] <= 1.0 + 1e-9);
    }
}

TEST_CASE("fixed point map") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 31, 41);
    FixedPointConfig cfg = FixedPointConfig::defaults(p);

    std::vector<double> ones(grid.n_u(), 1.0);
    auto w = fixed_point_map(grid, p, ones, 0.0, cfg);
    for (double wi : w) CHECK(wi == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> zeros(grid.n_u(), 0.0);
    w = fixed_point_map(grid, p, zeros, 0.5 * cfg.S, cfg);
    for (double wi : w) CHECK(std::abs(wi) < 1e-13);

    CHECK_THROWS_AS(fixed_point_map(grid, p, ones, 2.0 * cfg.S, cfg), DomainError);
    FixedPointConfig bad = cfg;
    bad.K = 0.5; // too small for monotonicity
    CHECK_THROWS_AS(fixed_point_map(grid, p, ones, 0.0, bad), DomainError);
}

TEST_CASE("fixed point map is monotone in the prey field") {
    ModelParams p = table1_params();
    DualGrid grid = build_grid(p.a, p.L, 31, 41);
    FixedPointConfig cfg = FixedPointConfig::defaults(p);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
        std::vector<double> u1(grid.n_u()), u2(grid.n_u());
        for (int i = 0; i < grid.n_u(); ++i) {
            const double x = grid.nodes_u()[i];
            u1[i] = std::clamp(0.4 + 0.3 * std::sin(4.0 * x + trial) * dist(rng), 0.0, 1.0);
            u2[i] = std::clamp(u1[i] + 0.25 * dist(rng), 0.0, 1.0);
        }
        const double s = cfg.S * dist(rng);
        auto w1 = fixed_point_map(grid, p, u1, s, cfg);
        auto w2 = fixed_point_map(grid, p, u2, s, cfg);
        // discrete maximum principle: ordering can only fail by rounding
        for (int i = 0; i < grid.n_u(); ++i) CHECK(w1[i] <= w2[i] + 1e-9);
    }
}
