#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "exzone/asymptotics.hpp"
#include "exzone/radial.hpp"

using namespace exzone;

static RadialConfig base_config() {
    RadialConfig cfg;
    cfg.N = 2;
    cfg.rho = 1.0;
    cfg.R = 8.0;
    cfg.sigma = 6.0;
    cfg.d_u = 1.0;
    cfg.g = GrowthFn(1.0, 0.3);
    return cfg;
}

TEST_CASE("ball solution shape") {
    RadialConfig cfg = base_config();
    auto prof = ball_solution(cfg, 401);
    REQUIRE(prof.has_value());
    CHECK(prof->value.front() > cfg.g.theta_prime);
    CHECK(prof->value.back() == 0.0);
    for (size_t i = 1; i < prof->value.size(); ++i)
        CHECK(prof->value[i] <= prof->value[i - 1] + 1e-12);
}

TEST_CASE("small ball admits no positive solution") {
    RadialConfig cfg = base_config();
    cfg.sigma = 0.4;
    CHECK(!ball_solution(cfg).has_value());
}

TEST_CASE("one-dimensional ball matches the energy reconstruction") {
    RadialConfig cfg = base_config();
    cfg.N = 1;
    cfg.sigma = 5.0;
    auto prof = ball_solution(cfg, 801);
    REQUIRE(prof.has_value());
    // mirrored monotone profile: V(r) = z(sigma - r) with z(0)=0, z'(sigma)=0
    EnergyProfile z = zeta_profile(0.0, cfg.sigma, cfg.g, cfg.d_u);
    double worst = 0.0;
    for (size_t i = 0; i < prof->r.size(); ++i) {
        const double want = z.value(cfg.sigma - prof->r[i]);
        worst = std::max(worst, std::abs(prof->value[i] - want));
    }
    CHECK(worst < 1e-6);
    CHECK(prof->value.front() == doctest::Approx(z.q()).epsilon(1e-7));
}

TEST_CASE("annulus profile is monotone and settles") {
    RadialConfig cfg = base_config();
    cfg.n_nodes = 401;
    RadialProfile zeta = annulus_zeta(cfg);
    REQUIRE(static_cast<int>(zeta.value.size()) == 401);
    CHECK(zeta.value.front() == 0.0);
    for (size_t i = 1; i < zeta.value.size(); ++i)
        CHECK(zeta.value[i] >= zeta.value[i - 1] - 1e-9);
    CHECK(zeta.value.back() > cfg.g.theta_prime);
    CHECK(zeta.value.back() < 1.0);
}

TEST_CASE("boundary value grows with the outer radius") {
    RadialConfig cfg = base_config();
    cfg.n_nodes = 301;
    double prev = 0.0;
    for (double R : {4.0, 6.0, 8.0, 12.0}) {
        cfg.R = R;
        const double zb = zeta_boundary_value(cfg);
        CHECK(zb > prev);
        prev = zb;
    }
    CHECK(prev > cfg.g.theta_prime);
}

TEST_CASE("narrow annulus collapses to zero") {
    RadialConfig cfg = base_config();
    cfg.R = cfg.rho + 0.5;
    cfg.n_nodes = 201;
    RadialProfile zeta = annulus_zeta(cfg);
    for (double v : zeta.value) CHECK(std::abs(v) < 1e-7);
}

TEST_CASE("relaxation from 1 dominates relaxation from smaller data") {
    RadialConfig cfg = base_config();
    cfg.n_nodes = 201;
    for (double t : {0.5, 2.0, 8.0}) {
        RadialProfile hi = annulus_relax(cfg, 1.0, t);
        RadialProfile lo = annulus_relax(cfg, 0.5, t);
        for (size_t i = 0; i < hi.value.size(); ++i)
            CHECK(hi.value[i] >= lo.value[i] - 1e-7);
    }
}

TEST_CASE("one-dimensional annulus matches the interval profile") {
    RadialConfig cfg = base_config();
    cfg.N = 1;
    cfg.rho = 1.0;
    cfg.R = 7.0;
    cfg.n_nodes = 1401;
    RadialProfile zr = annulus_zeta(cfg, 1e-11);
    EnergyProfile z = zeta_profile(cfg.rho, cfg.R, cfg.g, cfg.d_u);
    double worst = 0.0;
    for (size_t i = 0; i < zr.r.size(); ++i)
        worst = std::max(worst, std::abs(zr.value[i] - z.value(zr.r[i])));
    CHECK(worst < 1e-5);
}

TEST_CASE("threshold radius search") {
    RadialConfig cfg = base_config();
    cfg.n_nodes = 301;
    auto R0 = threshold_radius(cfg, 0.05, 40.0);
    REQUIRE(R0.has_value());
    CHECK(*R0 > cfg.rho);
    CHECK(*R0 <= 40.0);
    cfg.R = *R0;
    CHECK(zeta_boundary_value(cfg) > 0.95);

    // unreachable target within a small cap
    auto none = threshold_radius(cfg, 1e-6, 3.0);
    CHECK(!none.has_value());
}

TEST_CASE("validation") {
    RadialConfig cfg = base_config();
    cfg.rho = 2.0;
    cfg.R = 1.0;
    CHECK_THROWS_AS(annulus_zeta(cfg), DomainError);
    cfg = base_config();
    cfg.sigma = -1.0;
    CHECK_THROWS_AS(ball_solution(cfg), DomainError);
}
