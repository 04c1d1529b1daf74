#ifndef EXZONE_ASYMPTOTICS_HPP
#define EXZONE_ASYMPTOTICS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "exzone/errors.hpp"
#include "exzone/growth.hpp"
#include "exzone/linalg.hpp"
#include "exzone/model.hpp"
#include "exzone/quadrature.hpp"

namespace exzone {

// Monotone profiles of -d_u u'' = f(u) with u(left) = p, u'(right) = 0 are
// reconstructed from the conserved energy E = (d_u/2)(u')^2 + F(u) = F(q),
// where q = u(right) lies on the upper branch (theta', 1). The interval
// length as a function of q,
//   L(q) = sqrt(d_u/2) * int_p^q du / sqrt(F(q) - F(u)),
// diverges logarithmically as q -> 1, so q is carried internally as the gap
// 1 - q: near the divergence dL/dq ~ 1/(1-q) and a double holding q loses
// the length information entirely.
//
// The endpoint singularity at u = q is removed by u = q - t^2; since F is
// quartic, F(q) - F(q - t^2) expands exactly and the integrand
//   G(t) = 2 / sqrt(f(q) + c2 t^2 + c3 t^4 + c4 t^6)
// is smooth. For tiny gaps G has a layer of width ~sqrt(gap) at t = 0,
// resolved by splitting off the layer and integrating the tail in log t.

namespace detail_energy {

struct GapCoeffs {
    double a1, c2, c3, c4; // F(q) - F(q - t^2) = a1 t^2 + c2 t^4 + c3 t^6 + c4 t^8
};

inline GapCoeffs gap_coeffs(const GrowthFn& g, double gap) {
    GapCoeffs c;
    const double q = 1.0 - gap;
    c.a1 = g.f_at_gap(gap);
    c.c2 = -0.5 * g.df(q);
    c.c3 = g.d2f(q) / 6.0;
    c.c4 = -g.d3f() / 24.0;
    return c;
}

inline double G_of_t(const GapCoeffs& c, double t) {
    const double t2 = t * t;
    const double val = c.a1 + t2 * (c.c2 + t2 * (c.c3 + t2 * c.c4));
    return 2.0 / std::sqrt(val);
}

// integral of G over [ta, tb] split into a linear piece below the layer
// scale and log-spaced panels above it
inline double integrate_G(const GrowthFn& g, double gap, double ta, double tb,
                          double t_layer, int order) {
    const GapCoeffs c = gap_coeffs(g, gap);
    if (!(tb > ta)) return 0.0;
    double total = 0.0;
    const double t_split = std::min(std::max(t_layer, ta), tb);
    if (t_split > ta)
        total += gauss_integrate([&](double t) { return G_of_t(c, t); }, ta, t_split, order);
    if (tb > t_split) {
        const double lo = std::log(std::max(t_split, 1e-300)), hi = std::log(tb);
        const int npanel = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
        for (int k = 0; k < npanel; ++k) {
            const double x0 = lo + (hi - lo) * k / npanel;
            const double x1 = lo + (hi - lo) * (k + 1) / npanel;
            total += gauss_integrate([&](double x) {
                const double t = std::exp(x);
                return t * G_of_t(c, t);
            }, x0, x1, order);
        }
    }
    return total;
}

} // namespace detail_energy

// Conserved energy data of one profile.
struct EnergyLevel {
    double E = 0.0;   // F(q)
    double q = 0.0;   // boundary value at the Neumann end
    double gap = 0.0; // 1 - q, carried exactly
    double p = 0.0;   // value at the Dirichlet end
};

// The L <-> q map for fixed kinetics, left value p and diffusivity d_u.
class EnergyBranch {
public:
    EnergyBranch(const GrowthFn& g, double p, double d_u)
        : g_(g), p_(p), du_(d_u) {
        if (!(p >= 0.0 && p < 1.0))
            throw DomainError("energy branch: left value p must lie in [0,1)");
        scan_branch_start();
    }

    const GrowthFn& growth() const { return g_; }
    double p() const { return p_; }
    double d_u() const { return du_; }
    double min_length() const { return L_min_; }
    double branch_start_q() const { return 1.0 - gap0_; }
    double branch_start_gap() const { return gap0_; }

    // interval length of the monotone profile with boundary gap 1-q
    double length_of_gap(double gap) const {
        check_gap(gap);
        return std::sqrt(du_ / 2.0) *
               detail_energy::integrate_G(g_, gap, 0.0, t_max(gap), layer(gap), order_);
    }

    // inverse of length_of_gap on the upper branch; bisection in log(gap)
    double gap_of_length(double L) const {
        if (!(L > 0.0)) throw DomainError("gap_of_length: length must be positive");
        if (L < L_min_ * (1.0 - 1e-12))
            throw NoBranch("no monotone profile: interval length " + std::to_string(L) +
                           " below the branch minimum " + std::to_string(L_min_));
        double lo_gap = gap0_; // L(lo_gap) = L_min <= L
        if (L <= length_of_gap(lo_gap)) return lo_gap;
        double hi_gap = gap0_;
        double lo_log = std::log(lo_gap), hi_log = lo_log;
        for (int k = 0; k < 600; ++k) {
            hi_log -= 4.0;
            hi_gap = std::exp(hi_log);
            if (hi_gap < 1e-290)
                throw NoBranch("gap_of_length: requested length beyond representable branch");
            if (length_of_gap(hi_gap) >= L) break;
        }
        // bisect: length increases as gap decreases
        for (int it = 0; it < 120 && hi_log < lo_log - 1e-13; ++it) {
            const double mid = 0.5 * (lo_log + hi_log);
            if (length_of_gap(std::exp(mid)) >= L)
                hi_log = mid;
            else
                lo_log = mid;
        }
        return std::exp(0.5 * (lo_log + hi_log));
    }

    // distance from the Dirichlet end to the point u = q - t^2
    double xi_of_t(double gap, double t) const {
        return std::sqrt(du_ / 2.0) *
               detail_energy::integrate_G(g_, gap, t, t_max(gap), layer(gap), order_);
    }

    double t_max(double gap) const { return std::sqrt((1.0 - p_) - gap); }

    double slope_at_dirichlet(double gap) const {
        const double drop = g_.F_at_one() - g_.F_drop_from_one(gap) - g_.F(p_);
        return std::sqrt(2.0 * drop / du_);
    }

private:
    double layer(double gap) const {
        const detail_energy::GapCoeffs c = detail_energy::gap_coeffs(g_, gap);
        const double nu = -g_.df(1.0);
        const double c2ref = std::max(c.c2, 0.05 * nu);
        const double tm = t_max(gap);
        if (!(c.a1 > 0.0)) return 0.5 * tm;
        return std::min(0.5 * tm, 4.0 * std::sqrt(c.a1 / c2ref));
    }

    void check_gap(double gap) const {
        if (!(gap > 0.0) || 1.0 - gap <= p_)
            throw DomainError("energy branch: boundary value must lie in (p, 1)");
        // positivity of F(q) - F(u) across the interval
        const detail_energy::GapCoeffs c = detail_energy::gap_coeffs(g_, gap);
        const double tm = t_max(gap);
        for (int k = 1; k <= 64; ++k) {
            const double t = tm * k / 64.0;
            const double t2 = t * t;
            if (!(c.a1 + t2 * (c.c2 + t2 * (c.c3 + t2 * c.c4)) > 0.0))
                throw DomainError("energy branch: F(q) - F(u) not positive on the interval");
        }
    }

    // locate where L(q) stops being monotone when q decreases from 1
    void scan_branch_start() {
        const double q_floor = std::max(p_, g_.theta_prime) + 1e-10;
        const double q_top = 1.0 - 1e-9;
        if (q_top <= q_floor)
            throw DomainError("energy branch: no admissible boundary values");
        const int nscan = 400;
        double prev_q = q_top;
        double prev_L = length_of_gap(1.0 - prev_q);
        double best_q = prev_q, best_L = prev_L;
        for (int k = 1; k <= nscan; ++k) {
            const double q = q_top + (q_floor - q_top) * k / nscan;
            double Lq;
            try {
                Lq = length_of_gap(1.0 - q);
            } catch (const DomainError&) {
                break; // positivity lost below this q
            }
            if (Lq >= prev_L) break; // monotonicity ends
            best_q = q;
            best_L = Lq;
            prev_q = q;
            prev_L = Lq;
        }
        // refine the minimum by ternary search just below the last monotone point
        double lo = std::max(q_floor, best_q + (q_floor - q_top) / nscan);
        double hi = std::min(q_top, best_q - (q_floor - q_top) / nscan);
        auto L_at = [&](double q) {
            try {
                return length_of_gap(1.0 - q);
            } catch (const DomainError&) {
                return 1e300;
            }
        };
        for (int it = 0; it < 60; ++it) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            if (L_at(m1) < L_at(m2))
                hi = m2;
            else
                lo = m1;
        }
        const double q0 = 0.5 * (lo + hi);
        const double L0 = L_at(q0);
        if (L0 < best_L) { best_q = q0; best_L = L0; }
        gap0_ = 1.0 - best_q;
        L_min_ = best_L;
    }

    GrowthFn g_;
    double p_ = 0.0, du_ = 1.0;
    double gap0_ = 0.0, L_min_ = 0.0;
    int order_ = 96;
};

// Branch cache keyed by the exact parameter tuple; construction is guarded,
// lookups return stable references.
inline const EnergyBranch& energy_branch(const GrowthFn& g, double p, double d_u) {
    using Key = std::tuple<double, double, double, double>;
    static std::map<Key, EnergyBranch> cache;
    static std::mutex mutex;
    const Key key{g.r, g.theta, p, d_u};
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(std::piecewise_construct, std::forward_as_tuple(key),
                           std::forward_as_tuple(g, p, d_u)).first;
    return it->second;
}

// Reconstructed monotone profile on [x_begin, x_end]; value(x) inverts the
// energy quadrature with a safeguarded Newton iteration (dx/du is analytic).
class EnergyProfile {
public:
    EnergyProfile(const EnergyBranch& branch, double gap, double x_begin)
        : branch_(&branch), gap_(gap), x0_(x_begin),
          len_(branch.length_of_gap(gap)), tmax_(branch.t_max(gap)) {}

    double x_begin() const { return x0_; }
    double x_end() const { return x0_ + len_; }
    double length() const { return len_; }
    double gap() const { return gap_; }
    double q() const { return 1.0 - gap_; }
    double left_value() const { return branch_->p(); }
    double energy() const {
        const GrowthFn& g = branch_->growth();
        return g.F_at_one() - g.F_drop_from_one(gap_);
    }
    EnergyLevel level() const { return {energy(), q(), gap_, left_value()}; }
    double slope_left() const { return branch_->slope_at_dirichlet(gap_); }
    const EnergyBranch& branch() const { return *branch_; }

    double value(double x) const { return u_of_t(t_of_x(x)); }

    // u'(x) >= 0 from the conserved energy; F(q) - F(u(x)) is evaluated by
    // the exact quartic difference at u = q - t^2
    double slope(double x) const {
        const double t = t_of_x(x);
        const detail_energy::GapCoeffs c = detail_energy::gap_coeffs(branch_->growth(), gap_);
        const double t2 = t * t;
        const double drop = t2 * (c.a1 + t2 * (c.c2 + t2 * (c.c3 + t2 * c.c4)));
        return std::sqrt(std::max(0.0, 2.0 * drop / branch_->d_u()));
    }

    std::vector<double> sample(std::span<const double> xs) const {
        std::vector<double> out(xs.size());
        double t_hint = tmax_;
        for (size_t k = 0; k < xs.size(); ++k) {
            const double t = t_of_x(xs[k], t_hint);
            out[k] = u_of_t(t);
            t_hint = t; // xs ascending => t descending; used as an upper bound
        }
        return out;
    }

    // n uniformly spaced nodes across [x_begin, x_end]
    std::pair<std::vector<double>, std::vector<double>> sample_uniform(int n) const {
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = x0_ + len_ * i / (n - 1);
        xs.back() = x0_ + len_;
        return {xs, sample(xs)};
    }

private:
    double u_of_t(double t) const { return 1.0 - (gap_ + t * t); }

    double t_of_x(double x, double t_upper_hint = -1.0) const {
        const double tol = 1e-13 * std::max(1.0, len_);
        if (x <= x0_ + tol * 1e-2 && x >= x0_ - 1e-9 * std::max(1.0, len_)) return tmax_;
        if (x >= x0_ + len_ - tol * 1e-2 && x <= x0_ + len_ + 1e-9 * std::max(1.0, len_)) return 0.0;
        if (x < x0_ || x > x0_ + len_)
            throw DomainError("profile evaluated outside its interval");
        const double xi = x - x0_; // distance from the Dirichlet end; xi(t) decreasing
        double lo = 0.0, hi = (t_upper_hint > 0.0 && t_upper_hint <= tmax_) ? t_upper_hint : tmax_;
        if (branch_->xi_of_t(gap_, hi) > xi) hi = tmax_; // hint invalid
        double t = 0.5 * (lo + hi);
        const double pref = std::sqrt(branch_->d_u() / 2.0);
        const detail_energy::GapCoeffs c = detail_energy::gap_coeffs(branch_->growth(), gap_);
        for (int it = 0; it < 100; ++it) {
            const double r = branch_->xi_of_t(gap_, t) - xi;
            if (std::abs(r) <= tol) break;
            if (r > 0.0)
                lo = t; // too close to the Dirichlet end
            else
                hi = t;
            const double deriv = -pref * detail_energy::G_of_t(c, t);
            double tn = t - r / deriv;
            if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
            if (std::abs(tn - t) < 1e-17 * tmax_) { t = tn; break; }
            t = tn;
        }
        return t;
    }

    const EnergyBranch* branch_;
    double gap_, x0_, len_, tmax_;
};

// ---- module operations ----

inline double L_of_q(double q, double p, const GrowthFn& g, double d_u) {
    if (!(q > p && q < 1.0))
        throw DomainError("L_of_q: boundary value must lie in (p, 1)");
    EnergyBranch branch(g, p, d_u); // positivity checked inside
    return branch.length_of_gap(1.0 - q);
}

inline double q_of_L(double L, double p, const GrowthFn& g, double d_u) {
    return 1.0 - energy_branch(g, p, d_u).gap_of_length(L);
}

// maximum positive solution of -d_u z'' = f(z), z(a) = 0, z'(L) = 0 on [a, L]
inline EnergyProfile zeta_profile(double a, double L, const GrowthFn& g, double d_u) {
    if (!(L > a)) throw DomainError("zeta_profile: need a < L");
    const EnergyBranch& branch = energy_branch(g, 0.0, d_u);
    return EnergyProfile(branch, branch.gap_of_length(L - a), a);
}

// monotone solution of -d_u w'' = f(w), w(0) = gamma/alpha, w'(L) = 0
inline EnergyProfile w1_profile(const ModelParams& p, double L) {
    const double left = p.gamma / p.alpha;
    if (!(left < 1.0))
        throw DomainError("w1_profile: gamma/alpha must be below 1");
    const EnergyBranch& branch = energy_branch(p.growth, left, p.d_u);
    return EnergyProfile(branch, branch.gap_of_length(L), 0.0);
}

struct W2Result {
    std::vector<double> x;
    std::vector<double> w;
    double slope0 = 0.0; // one-sided second-order difference at x = 0
};

// linear correction problem d_u w'' + f'(w1) w = (2/L) f(w1) with
// w(0) = w1'(0)/3 and w'(L) = 0, solved on a uniform mesh.
inline W2Result w2_profile(const ModelParams& p, double L,
                           const EnergyProfile& w1, int n) {
    if (n < 5) throw DomainError("w2_profile: need at least 5 nodes");
    const double h = L / (n - 1);
    W2Result out;
    out.x.resize(n);
    for (int i = 0; i < n; ++i) out.x[i] = L * i / (n - 1.0);
    out.x.back() = L;
    const std::vector<double> w1v = w1.sample(out.x);

    Banded<double> m(n, 1, 1);
    std::vector<double> rhs(n);
    const GrowthFn& g = p.growth;
    const double h2 = h * h;
    m(0, 0) = 1.0;
    rhs[0] = w1.slope_left() / 3.0;
    for (int i = 1; i < n - 1; ++i) {
        m(i, i - 1) = p.d_u / h2;
        m(i, i) = -2.0 * p.d_u / h2 + g.df(w1v[i]);
        m(i, i + 1) = p.d_u / h2;
        rhs[i] = 2.0 / L * g.f(w1v[i]);
    }
    m(n - 1, n - 2) = 2.0 * p.d_u / h2;
    m(n - 1, n - 1) = -2.0 * p.d_u / h2 + g.df(w1v[n - 1]);
    rhs[n - 1] = 2.0 / L * g.f(w1v[n - 1]);
    try {
        m.factor();
    } catch (const SingularJacobian&) {
        throw SingularSystem("w2_profile: linearized operator is singular at this L");
    }
    m.solve(std::span<double>(rhs));
    if (!all_finite(rhs) || norm_inf(rhs) > 1e10)
        throw SingularSystem("w2_profile: near-resonant linearized operator");
    out.w = std::move(rhs);
    out.slope0 = (-3.0 * out.w[0] + 4.0 * out.w[1] - out.w[2]) / (2.0 * h);
    return out;
}

struct ThinLimitCoeffs {
    double V0 = 0.0;       // limiting total predator population
    double V1 = 0.0;       // linear coefficient of the expansion in a
    double w1_slope0 = 0.0;
    double w2_slope0 = 0.0;
    double L = 0.0;
};

inline int default_profile_nodes(double L) {
    return std::max(2001, static_cast<int>(std::lround(400.0 * L)) + 1);
}

// The correction slope enters V'(0) together with a w1'(0)/L flux term from
// expanding the interface matching in the interval length:
//   V1 = (alpha/(beta gamma)) (d_u w2'(0) + d_u w1'(0)/L + f(gamma/alpha)).
// By the energy identity d_u w1'(0)^2 = 2 (F(q) - F(gamma/alpha)) this term
// cancels the O(1/L) forcing contribution to w2'(0) exactly, so V1(L)
// approaches its closed-form limit up to boundary terms that vanish with the
// gap 1 - q (checked against time-dependent simulations of the full system).
inline ThinLimitCoeffs thin_limit_coeffs(const ModelParams& p, double L, int n = 0) {
    if (n <= 0) {
        // refine with L so the slope's O(h^2) truncation keeps shrinking
        // after the model error has gone below it
        const double factor = std::max(1.0, std::sqrt(L / 10.0));
        n = std::max(2001, static_cast<int>(std::lround(400.0 * L * factor)) + 1);
    }
    const EnergyProfile w1 = w1_profile(p, L);
    const W2Result w2 = w2_profile(p, L, w1, n);
    ThinLimitCoeffs out;
    out.L = L;
    out.w1_slope0 = w1.slope_left();
    out.w2_slope0 = w2.slope0;
    const double pref = p.alpha / (p.beta * p.gamma);
    out.V0 = pref * p.d_u * out.w1_slope0;
    out.V1 = pref * (p.d_u * (out.w2_slope0 + out.w1_slope0 / L) +
                     p.growth.f(p.gamma / p.alpha));
    return out;
}

// closed-form limit of V'(0) as L -> infinity
inline double large_L_slope(const ModelParams& p) {
    const double ratio = p.gamma / p.alpha;
    if (!(ratio > 0.0 && ratio < 1.0))
        throw DomainError("large_L_slope: gamma/alpha must lie in (0,1)");
    return (2.0 / 3.0) * p.alpha / (p.beta * p.gamma) * p.growth.f(ratio);
}

} // namespace exzone

#endif
