#ifndef EXZONE_RADIAL_HPP
#define EXZONE_RADIAL_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "exzone/errors.hpp"
#include "exzone/growth.hpp"
#include "exzone/linalg.hpp"
#include "exzone/radau.hpp"

namespace exzone {

struct RadialConfig {
    int N = 2;          // spatial dimension
    double rho = 1.0;   // inner radius of the annulus
    double R = 8.0;     // outer radius of the annulus
    double sigma = 4.0; // ball radius for the Dirichlet problem
    double d_u = 1.0;
    GrowthFn g{1.0, 0.3};
    int n_nodes = 0;    // 0 = auto

    void validate_annulus() const {
        if (N < 1) throw DomainError("radial: dimension N must be >= 1");
        if (!(rho > 0.0 && rho < R)) throw DomainError("radial: need 0 < rho < R");
        if (!(d_u > 0.0)) throw DomainError("radial: d_u must be positive");
    }
    void validate_ball() const {
        if (N < 1) throw DomainError("radial: dimension N must be >= 1");
        if (!(sigma > 0.0)) throw DomainError("radial: ball radius must be positive");
        if (!(d_u > 0.0)) throw DomainError("radial: d_u must be positive");
    }
};

struct RadialProfile {
    std::vector<double> r;
    std::vector<double> value;
};

namespace detail_radial {

// one RK4 step of the radial shooting system V' = W,
// W' = -f(V)/d_u - (N-1) W / r (with the symmetric limit at r = 0)
struct ShootState {
    double V, W;
};

inline void shoot_rhs(const GrowthFn& g, double d_u, int N, double r,
                      const ShootState& s, double& dV, double& dW) {
    dV = s.W;
    if (r < 1e-14)
        dW = -g.f(s.V) / (d_u * N);
    else
        dW = -g.f(s.V) / d_u - (N - 1) * s.W / r;
}

inline ShootState rk4_step(const GrowthFn& g, double d_u, int N, double r,
                           const ShootState& s, double h) {
    double k1v, k1w, k2v, k2w, k3v, k3w, k4v, k4w;
    shoot_rhs(g, d_u, N, r, s, k1v, k1w);
    shoot_rhs(g, d_u, N, r + 0.5 * h, {s.V + 0.5 * h * k1v, s.W + 0.5 * h * k1w}, k2v, k2w);
    shoot_rhs(g, d_u, N, r + 0.5 * h, {s.V + 0.5 * h * k2v, s.W + 0.5 * h * k2w}, k3v, k3w);
    shoot_rhs(g, d_u, N, r + h, {s.V + h * k3v, s.W + h * k3w}, k4v, k4w);
    return {s.V + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            s.W + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)};
}

// radius where the shot from V(0) = m first hits zero; +inf when the
// trajectory turns around below the potential's upper root instead
inline double crossing_radius(const RadialConfig& cfg, double m, double r_cap) {
    const GrowthFn& g = cfg.g;
    const double h = cfg.sigma / 4096.0;
    // series start just off the coordinate singularity
    double r = 1e-6 * cfg.sigma;
    ShootState s{m - g.f(m) * r * r / (2.0 * cfg.N * cfg.d_u),
                 -g.f(m) * r / (cfg.N * cfg.d_u)};
    while (r < r_cap) {
        const ShootState next = rk4_step(g, cfg.d_u, cfg.N, r, s, h);
        if (next.V <= 0.0) {
            // refine the crossing by bisection on single substeps
            double lo = 0.0, hi = h;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const ShootState sm = rk4_step(g, cfg.d_u, cfg.N, r, s, mid);
                if (sm.V <= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            return r + 0.5 * (lo + hi);
        }
        if (next.W >= 0.0 && next.V < g.theta_prime) return std::numeric_limits<double>::infinity();
        if (!std::isfinite(next.V) || !std::isfinite(next.W))
            throw IntegrationFailure("radial shooting produced a non-finite state");
        s = next;
        r += h;
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace detail_radial

// positive radial solution of -d_u Lap V = f(V) in the ball of radius sigma,
// V = 0 on the boundary, by shooting on the center value; returns the
// upper-branch solution or nothing when sigma is below the critical radius
inline std::optional<RadialProfile> ball_solution(const RadialConfig& cfg, int n_out = 801) {
    cfg.validate_ball();
    const GrowthFn& g = cfg.g;
    const double r_cap = 4.0 * cfg.sigma;

    // scan the center value downward from 1; the crossing radius decreases
    // until the lower branch takes over
    const int nscan = 160;
    const double m_top = 1.0 - 1e-8;
    const double m_bot = g.theta_prime + 1e-8;
    double m_hi = -1.0, m_lo = -1.0;
    double prev_m = m_top;
    double prev_rc = detail_radial::crossing_radius(cfg, m_top, r_cap);
    if (prev_rc < cfg.sigma) {
        // even a center value within 1e-8 of carrying capacity crosses too
        // early: push the gap geometrically
        double gap = 1e-8;
        while (gap > 1e-15) {
            gap *= 0.1;
            const double m = 1.0 - gap;
            const double rc = detail_radial::crossing_radius(cfg, m, r_cap);
            if (rc >= cfg.sigma) { m_hi = m; m_lo = prev_m; break; }
            prev_m = m;
        }
        if (m_hi < 0.0)
            throw IntegrationFailure("ball_solution: cannot bracket the center value");
    } else {
        for (int k = 1; k <= nscan; ++k) {
            const double m = m_top + (m_bot - m_top) * k / nscan;
            const double rc = detail_radial::crossing_radius(cfg, m, r_cap);
            if (rc < cfg.sigma) { m_lo = m; m_hi = prev_m; break; }
            prev_m = m;
        }
        if (m_lo < 0.0) return std::nullopt; // sigma below the critical radius
    }

    // bisect on the crossing radius
    for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (m_lo + m_hi);
        const double rc = detail_radial::crossing_radius(cfg, m, r_cap);
        if (rc < cfg.sigma)
            m_lo = m;
        else
            m_hi = m;
    }
    const double m = 0.5 * (m_lo + m_hi);

    // final pass with dense output on a uniform grid
    RadialProfile prof;
    prof.r.resize(n_out);
    prof.value.resize(n_out);
    for (int i = 0; i < n_out; ++i) prof.r[i] = cfg.sigma * i / (n_out - 1.0);
    const double h_int = cfg.sigma / 8192.0;
    double r = 1e-6 * cfg.sigma;
    detail_radial::ShootState s{m - g.f(m) * r * r / (2.0 * cfg.N * cfg.d_u),
                                -g.f(m) * r / (cfg.N * cfg.d_u)};
    prof.value[0] = m;
    int out = 1;
    while (out < n_out) {
        const double target = prof.r[out];
        while (r + h_int < target) {
            s = detail_radial::rk4_step(g, cfg.d_u, cfg.N, r, s, h_int);
            r += h_int;
        }
        const detail_radial::ShootState st = detail_radial::rk4_step(g, cfg.d_u, cfg.N, r, s, target - r);
        prof.value[out] = std::max(0.0, st.V);
        ++out;
    }
    prof.value[n_out - 1] = 0.0;
    return prof;
}

namespace detail_radial {

// method-of-lines system for the radial relaxation
//   w_t = d_u (w'' + (N-1) w'/r) + f(w),  w(rho) = 0,  w'(R) = 0
// unknowns are the nodes 1..n-1 of the uniform mesh on [rho, R]
class AnnulusSystem {
public:
    AnnulusSystem(const RadialConfig& cfg, int n)
        : cfg_(&cfg), n_(n), h_((cfg.R - cfg.rho) / (n - 1)) {}

    int size() const { return n_ - 1; }
    int lower() const { return 1; }
    int upper() const { return 1; }

    double node(int k) const { return cfg_->rho + (k + 1) * h_; } // unknown k

    void rhs(double, std::span<const double> w, std::span<double> f) const {
        const GrowthFn& g = cfg_->g;
        const double du = cfg_->d_u;
        const int m = size();
        const double h2 = h_ * h_;
        for (int k = 0; k < m; ++k) {
            const double wl = k > 0 ? w[k - 1] : 0.0; // Dirichlet at rho
            const double wc = w[k];
            double lap, drift;
            if (k < m - 1) {
                lap = (wl - 2.0 * wc + w[k + 1]) / h2;
                drift = (w[k + 1] - wl) / (2.0 * h_);
            } else {
                lap = 2.0 * (wl - wc) / h2; // reflected ghost at R
                drift = 0.0;
            }
            f[k] = du * (lap + (cfg_->N - 1) * drift / node(k)) + g.f(wc);
        }
    }

    void jacobian(double, std::span<const double> w, BandedReal& jac) const {
        const GrowthFn& g = cfg_->g;
        const double du = cfg_->d_u;
        const int m = size();
        const double h2 = h_ * h_;
        jac.set_zero();
        for (int k = 0; k < m; ++k) {
            const double cdrift = du * (cfg_->N - 1) / (2.0 * h_ * node(k));
            if (k < m - 1) {
                if (k > 0) jac(k, k - 1) = du / h2 - cdrift;
                jac(k, k) = -2.0 * du / h2 + g.df(w[k]);
                jac(k, k + 1) = du / h2 + cdrift;
            } else {
                jac(k, k - 1) = 2.0 * du / h2;
                jac(k, k) = -2.0 * du / h2 + g.df(w[k]);
            }
        }
    }

private:
    const RadialConfig* cfg_;
    int n_;
    double h_;
};

} // namespace detail_radial

inline int radial_auto_nodes(const RadialConfig& cfg) {
    const double h = std::min(0.02, 0.1 * std::sqrt(cfg.d_u / cfg.g.r));
    return std::max(201, static_cast<int>(std::ceil((cfg.R - cfg.rho) / h)) + 1);
}

// relax the annulus problem from constant initial data for a fixed time
inline RadialProfile annulus_relax(const RadialConfig& cfg, double init, double t_end) {
    cfg.validate_annulus();
    const int n = cfg.n_nodes > 0 ? cfg.n_nodes : radial_auto_nodes(cfg);
    detail_radial::AnnulusSystem sys(cfg, n);
    std::vector<double> w(sys.size(), init);
    if (t_end > 0.0) {
        RadauOptions opt;
        opt.rtol = 1e-8;
        opt.atol = 1e-11;
        radau_integrate(sys, 0.0, w, t_end, opt, [](const RadauDense&) {});
    }
    RadialProfile prof;
    prof.r.resize(n);
    prof.value.resize(n);
    prof.r[0] = cfg.rho;
    prof.value[0] = 0.0;
    for (int k = 0; k < sys.size(); ++k) {
        prof.r[k + 1] = sys.node(k);
        prof.value[k + 1] = w[k];
    }
    prof.r[n - 1] = cfg.R;
    return prof;
}

// maximum stationary profile, obtained by evolving the constant
// supersolution 1 until the right-hand side is small and polishing with
// Newton on the discrete stationary equation (the relaxation selects the
// maximum solution; Newton removes the integration-noise floor)
inline RadialProfile annulus_zeta(const RadialConfig& cfg, double steady_tol = 1e-10) {
    cfg.validate_annulus();
    const int n = cfg.n_nodes > 0 ? cfg.n_nodes : radial_auto_nodes(cfg);
    detail_radial::AnnulusSystem sys(cfg, n);
    const int m = sys.size();
    std::vector<double> w(m, 1.0), f(m);
    const double h = (cfg.R - cfg.rho) / (n - 1);
    // attainable residual floor at this resolution
    const double tol = std::max(steady_tol, 50.0 * 2.2e-16 * (1.0 + cfg.d_u / (h * h)));

    RadauOptions opt;
    opt.rtol = 1e-8;
    opt.atol = 1e-10;
    const double chunk = 1.0 / cfg.g.r; // growth-rate timescale
    const double relax_target = std::max(1e-5, 10.0 * tol);
    double t = 0.0;
    bool relaxed = false;
    for (int c = 0; c < 4000; ++c) {
        radau_integrate(sys, t, w, t + chunk, opt, [](const RadauDense&) {});
        t += chunk;
        sys.rhs(t, w, f);
        if (norm_inf(f) <= relax_target) { relaxed = true; break; }
    }
    if (!relaxed)
        throw IntegrationFailure("annulus_zeta: relaxation did not approach steady state");

    // Newton polish
    std::vector<double> step(m);
    BandedReal jac(m, 1, 1);
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
        sys.rhs(0.0, w, f);
        if (norm_inf(f) <= tol) { converged = true; break; }
        sys.jacobian(0.0, w, jac);
        for (int i = 0; i < m; ++i) step[i] = -f[i];
        jac.factor();
        jac.solve(std::span<double>(step));
        for (int i = 0; i < m; ++i) w[i] += step[i];
    }
    if (!converged)
        throw IntegrationFailure("annulus_zeta: Newton polish did not converge");

    RadialProfile prof;
    prof.r.resize(n);
    prof.value.resize(n);
    prof.r[0] = cfg.rho;
    prof.value[0] = 0.0;
    for (int k = 0; k < sys.size(); ++k) {
        prof.r[k + 1] = sys.node(k);
        prof.value[k + 1] = std::max(0.0, w[k]);
    }
    prof.r[n - 1] = cfg.R;
    return prof;
}

inline double zeta_boundary_value(const RadialConfig& cfg) {
    return annulus_zeta(cfg).value.back();
}

// smallest outer radius with zeta_R(R) > 1 - eta, searched by doubling and
// bisection; empty when not reached by R_max
inline std::optional<double> threshold_radius(RadialConfig cfg, double eta, double R_max,
                                              double resolution = 0.05) {
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("threshold_radius: eta must be in (0,1)");
    double lo = cfg.rho;
    double R = std::min(std::max(2.0 * cfg.rho, cfg.rho + 2.0), R_max);
    double hi = -1.0;
    while (true) {
        cfg.R = R;
        if (zeta_boundary_value(cfg) > 1.0 - eta) { hi = R; break; }
        lo = R;
        if (R >= R_max) return std::nullopt;
        R = std::min(2.0 * R, R_max);
    }
    while (hi - lo > resolution) {
        cfg.R = 0.5 * (lo + hi);
        if (zeta_boundary_value(cfg) > 1.0 - eta)
            hi = cfg.R;
        else
            lo = cfg.R;
    }
    return hi;
}

} // namespace exzone

#endif
