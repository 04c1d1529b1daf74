#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "exzone/io.hpp"
#include "exzone/sweep.hpp"

using namespace exzone;

static TotalsSeries synthetic(double t_end, int n, auto&& U_fn, auto&& V_fn) {
    TotalsSeries s;
    for (int k = 0; k < n; ++k) {
        const double t = t_end * k / (n - 1.0);
        s.t.push_back(t);
        s.U.push_back(U_fn(t));
        s.V.push_back(V_fn(t));
    }
    return s;
}

TEST_CASE("tail statistics") {
    auto s = synthetic(100.0, 2001, [](double) { return 1.0; }, [](double) { return 0.4; });
    TailStats ts = tail_stats(s);
    CHECK(ts.U_hat == 1.0);
    CHECK(ts.U_bar == 1.0);
    CHECK(ts.U_check == 1.0);
    CHECK(ts.V_hat == 0.4);
    CHECK(ts.V_bar == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(ts.V_check == 0.4);

    auto osc = synthetic(100.0, 4001, [](double) { return 1.0; },
                         [](double t) { return 0.3 + 0.1 * std::sin(t); });
    ts = tail_stats(osc);
    CHECK(ts.V_hat == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(ts.V_check == doctest::Approx(0.2).epsilon(1e-4));
    CHECK(ts.V_bar == doctest::Approx(0.3).epsilon(1e-2));

    TotalsSeries tiny = synthetic(1.0, 40, [](double) { return 1.0; }, [](double) { return 0.0; });
    CHECK_THROWS_AS(tail_stats(tiny), InsufficientTail);
}

TEST_CASE("classification decision tree on synthetic series") {
    const double L = 1.0;

    auto eq = synthetic(100.0, 2001, [](double) { return 0.8; }, [](double) { return 0.25; });
    CHECK(classify(eq, L).cls == OutcomeClass::CoexistenceEquilibrium);

    auto prey = synthetic(100.0, 2001, [](double) { return 0.9999999; },
                          [](double t) { return 1e-3 * std::exp(-0.2 * t); });
    CHECK(classify(prey, L).cls == OutcomeClass::PreyOnly);

    auto dead = synthetic(100.0, 2001, [](double t) { return 1e-3 * std::exp(-0.2 * t); },
                          [](double t) { return 1e-3 * std::exp(-0.3 * t); });
    CHECK(classify(dead, L).cls == OutcomeClass::Extinction);

    const double T = 5.0;
    auto cyc = synthetic(100.0, 4001, [](double) { return 0.7; },
                         [&](double t) { return 0.3 + 0.1 * std::sin(2.0 * M_PI * t / T); });
    Outcome o = classify(cyc, L);
    CHECK(o.cls == OutcomeClass::LimitCycle);
    CHECK(o.n_peaks >= 4);
    CHECK(o.period == doctest::Approx(T).epsilon(1e-2));

    auto rough = synthetic(100.0, 4001, [](double) { return 0.7; }, [](double t) {
        return 0.3 + 0.06 * std::sin(2.0 * M_PI * t / 5.0) +
               0.06 * std::sin(2.0 * M_PI * t / 3.1);
    });
    CHECK(classify(rough, L).cls == OutcomeClass::Irregular);
}

TEST_CASE("marker detection on synthetic rows") {
    auto mk_row = [](double a, OutcomeClass cls, double vbar) {
        ProfileRow r;
        r.a = a;
        r.ok = true;
        r.outcome.cls = cls;
        r.stats.V_bar = vbar;
        return r;
    };
    std::vector<ProfileRow> rows{
        mk_row(0.1, OutcomeClass::CoexistenceEquilibrium, 0.30),
        mk_row(0.2, OutcomeClass::CoexistenceEquilibrium, 0.40),
        mk_row(0.3, OutcomeClass::LimitCycle, 0.35),
        mk_row(0.4, OutcomeClass::LimitCycle, 0.20),
        mk_row(0.5, OutcomeClass::Extinction, 0.0)};
    Markers m = detect_markers(rows);
    REQUIRE(m.a_hopf.has_value());
    REQUIRE(m.a_ext.has_value());
    REQUIRE(m.a_max.has_value());
    CHECK(*m.a_hopf == doctest::Approx(0.25));
    CHECK(*m.a_ext == doctest::Approx(0.45));
    CHECK(*m.a_max == doctest::Approx(0.2));
    CHECK(*m.a_hopf < *m.a_ext);

    std::vector<ProfileRow> flat{mk_row(0.1, OutcomeClass::CoexistenceEquilibrium, 0.3),
                                 mk_row(0.2, OutcomeClass::CoexistenceEquilibrium, 0.2),
                                 mk_row(0.3, OutcomeClass::CoexistenceEquilibrium, 0.1)};
    Markers m2 = detect_markers(flat);
    CHECK(!m2.a_hopf.has_value());
    CHECK(!m2.a_ext.has_value());
    CHECK(*m2.a_max == doctest::Approx(0.1));
}

TEST_CASE("rising mean prey is flagged softly") {
    auto mk_row = [](double a, double ubar) {
        ProfileRow r;
        r.a = a;
        r.ok = true;
        r.stats.U_bar = ubar;
        return r;
    };
    std::vector<ProfileRow> rows{mk_row(0.1, 0.9), mk_row(0.2, 0.85), mk_row(0.3, 0.95),
                                 mk_row(0.4, 0.951)};
    flag_nonmonotone_prey(rows);
    CHECK(rows[0].flag.empty());
    CHECK(rows[1].flag.empty());
    CHECK(rows[2].flag == "U_bar_increased"); // 12% jump
    CHECK(rows[3].flag.empty());              // within grid noise
}

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

TEST_CASE("single-point sweep equals a direct run") {
    ModelParams p = table1_params();
    SweepOptions opt;
    opt.a_grid = {0.4};
    opt.sim.t_end = 30.0;
    opt.sim.n_snapshots = 60;
    opt.sim.n_tail = 400;
    opt.adaptive_horizon = false;
    opt.target_h = 0.02;
    LimitingProfile prof = limiting_profile(p, opt);
    REQUIRE(prof.rows.size() == 1);
    REQUIRE(prof.rows[0].ok);

    DualGrid grid(0.4, 1.0, std::max(9, (int)std::ceil(0.4 / 0.02) + 1),
                  std::max(9, (int)std::ceil(0.6 / 0.02) + 1));
    SimOptions sim = opt.sim;
    sim.record_fields = false;
    Trajectory traj = simulate(grid, p, default_initial_state(grid), sim);
    TotalsSeries series = totals(traj);
    TailStats ts = tail_stats(series, sim.tail_fraction);
    Outcome o = classify(series, p.L, opt.tol_eq, opt.tol_ext, sim.tail_fraction);

    CHECK(prof.rows[0].stats.U_bar == ts.U_bar); // bitwise: same code path
    CHECK(prof.rows[0].stats.V_bar == ts.V_bar);
    CHECK(prof.rows[0].outcome.cls == o.cls);
}

TEST_CASE("worker count does not change results") {
    ModelParams p = table1_params();
    SweepOptions opt;
    opt.a_grid = {0.25, 0.4, 0.55};
    opt.sim.t_end = 15.0;
    opt.sim.n_snapshots = 40;
    opt.sim.n_tail = 300;
    opt.adaptive_horizon = false;
    opt.target_h = 0.02;

    opt.jobs = 1;
    LimitingProfile serial = limiting_profile(p, opt);
    opt.jobs = 2;
    LimitingProfile parallel = limiting_profile(p, opt);

    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (size_t k = 0; k < serial.rows.size(); ++k) {
        CHECK(serial.rows[k].stats.U_bar == parallel.rows[k].stats.U_bar);
        CHECK(serial.rows[k].stats.V_hat == parallel.rows[k].stats.V_hat);
        CHECK(serial.rows[k].stats.V_check == parallel.rows[k].stats.V_check);
        CHECK(serial.rows[k].outcome.cls == parallel.rows[k].outcome.cls);
    }
}

TEST_CASE("grid validation") {
    ModelParams p = table1_params();
    SweepOptions opt;
    CHECK_THROWS_AS(limiting_profile(p, opt), DomainError); // empty
    opt.a_grid = {0.4, 0.3};
    CHECK_THROWS_AS(limiting_profile(p, opt), DomainError); // not increasing
    opt.a_grid = {0.4, 1.2};
    CHECK_THROWS_AS(limiting_profile(p, opt), DomainError); // outside (0, L)
}

TEST_CASE("failed rows are flagged, not fatal") {
    ModelParams p = table1_params();
    SweepOptions opt;
    // an a value so close to L that the exclusion mesh collapses is caught
    // per row; remaining rows still complete
    opt.a_grid = {0.4};
    opt.sim.t_end = 5.0;
    opt.sim.n_snapshots = 20;
    opt.sim.n_tail = 100;
    opt.sim.rtol = 1e-7;
    opt.adaptive_horizon = false;
    opt.target_h = 0.05;
    LimitingProfile prof = limiting_profile(p, opt);
    CHECK(prof.rows[0].ok); // baseline sanity

    // force a per-row failure through an unsatisfiable tail requirement
    SweepOptions bad = opt;
    bad.sim.n_snapshots = 10;
    bad.sim.n_tail = 10;
    LimitingProfile prof2 = limiting_profile(p, bad);
    CHECK(!prof2.rows[0].ok);
    CHECK(!prof2.rows[0].flag.empty());

    // failed rows keep the column layout of the CSV
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "exzone_sweep_csv_test";
    write_limiting_profile(dir, prof2);
    std::ifstream in(dir / "sweep.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
    CHECK(row.find("failed") != std::string::npos);
    fs::remove_all(dir);
}
