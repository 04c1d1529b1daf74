#ifndef EXZONE_STEADY_HPP
#define EXZONE_STEADY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "exzone/dynamics.hpp"
#include "exzone/errors.hpp"
#include "exzone/grid1d.hpp"
#include "exzone/growth.hpp"
#include "exzone/linalg.hpp"

namespace exzone {

// Principal eigenpair of  -d_v Lap phi - (alpha u - gamma) phi = lambda phi
// on the predator mesh with Neumann closure; phi > 0, max phi = 1.
struct EigenPair {
    double lambda = 0.0;
    std::vector<double> phi;
    double eta_lower = 0.0; // min phi
};

struct SteadyState {
    std::vector<double> u;
    std::vector<double> v;
    double residual_inf = 0.0;
    double lambda_u = 0.0;
    double eig_mismatch = 0.0; // ||v/max v - phi||_inf for coexistence states
    int iterations = 0;
};

// Homogeneous coexistence equilibrium of the space-free kinetics:
// u = gamma/alpha, v = f(u)/(beta u); exists iff theta < gamma/alpha < 1.
inline std::optional<std::pair<double, double>>
homogeneous_equilibrium(const ModelParams& p) {
    const double u = p.gamma / p.alpha;
    if (!(u > p.growth.theta && u < 1.0)) return std::nullopt;
    const double v = p.growth.f(u) / (p.beta * u);
    return std::make_pair(u, v);
}

inline EigenPair principal_eigenpair(const DualGrid& grid, const ModelParams& p,
                                     std::span<const double> u_field) {
    const int m = grid.n_v();
    std::vector<double> u(m);
    if (static_cast<int>(u_field.size()) == m)
        std::copy(u_field.begin(), u_field.end(), u.begin());
    else if (static_cast<int>(u_field.size()) == grid.n_u())
        std::copy(u_field.begin(), u_field.begin() + m, u.begin());
    else
        throw SizeMismatch("principal_eigenpair: field matches neither mesh");

    // A = -d_v L_v - diag(alpha u - gamma); similarity transform with the
    // square roots of the trapezoid weights makes A symmetric tridiagonal.
    const auto& w = grid.weights_v();
    std::vector<double> diag(m), off(m - 1);
    for (int i = 0; i < m; ++i)
        diag[i] = -p.d_v * grid.lap_v_diag(i) - (p.alpha * u[i] - p.gamma);
    for (int i = 0; i + 1 < m; ++i)
        off[i] = -p.d_v * grid.lap_v_hi(i) * std::sqrt(w[i] / w[i + 1]);

    const double lambda = tridiag_smallest_eigenvalue(diag, off);
    auto [vec, rayleigh] = tridiag_inverse_iteration(diag, off, lambda);

    EigenPair out;
    out.lambda = rayleigh;
    out.phi.resize(m);
    for (int i = 0; i < m; ++i) out.phi[i] = vec[i] / std::sqrt(w[i]);
    // fix sign, normalize to max = 1
    double amax = 0.0;
    for (double x : out.phi) amax = std::max(amax, std::abs(x));
    int sign = 0;
    for (double x : out.phi)
        if (std::abs(x) == amax) { sign = x >= 0.0 ? 1 : -1; break; }
    for (double& x : out.phi) x *= sign / amax;
    out.eta_lower = *std::min_element(out.phi.begin(), out.phi.end());
    if (!(out.eta_lower > 0.0))
        throw ConvergenceFailure("principal eigenfunction is not positive");
    return out;
}

// Mass balance of a stationary state: total predators against the
// predation-weighted prey production, |int v - (alpha/(beta gamma)) int f(u)|.
inline double mass_balance_residual(const DualGrid& grid, const ModelParams& p,
                                    std::span<const double> u, std::span<const double> v) {
    std::vector<double> fu(grid.n_u());
    for (int i = 0; i < grid.n_u(); ++i) fu[i] = p.growth.f(u[i]);
    const double lhs = grid.integrate_v(v);
    const double rhs = p.alpha / (p.beta * p.gamma) * grid.integrate_u(fu);
    return std::abs(lhs - rhs);
}

inline double mass_balance_residual(const DualGrid& grid, const ModelParams& p,
                                    const SteadyState& st) {
    return mass_balance_residual(grid, p, st.u, st.v);
}

// Damped Newton on the stationary residual (the dynamics right-hand side).
// Armijo backtracking on the residual 2-norm; certificates are attached on
// success.
inline SteadyState newton_steady(const DualGrid& grid, const ModelParams& p,
                                 const State& init, double tol = 1e-10,
                                 int max_iter = 40) {
    if (!(tol > 0.0)) throw DomainError("newton_steady: tol must be positive");
    PredatorPreySystem sys(grid, p);
    const int n = sys.size();
    std::vector<double> y(n), res(n), step(n), ytrial(n), rtrial(n);
    sys.pack(init, y);
    sys.rhs(0.0, y, res);
    double rnorm2 = norm_2(res);

    int it = 0;
    BandedReal jac(n, sys.lower(), sys.upper());
    for (; it < max_iter; ++it) {
        if (norm_inf(res) <= tol) break;
        sys.jacobian(0.0, y, jac);
        for (int i = 0; i < n; ++i) step[i] = -res[i];
        try {
            jac.factor();
        } catch (const SingularJacobian&) {
            throw SingularJacobian("newton_steady: singular Jacobian at iteration " +
                                   std::to_string(it));
        }
        jac.solve(std::span<double>(step));

        // Armijo backtracking, factor 0.5
        double lam = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            for (int i = 0; i < n; ++i) ytrial[i] = y[i] + lam * step[i];
            sys.rhs(0.0, ytrial, rtrial);
            if (all_finite(rtrial) && norm_2(rtrial) <= (1.0 - 1e-4 * lam) * rnorm2) {
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted)
            throw NoConvergence("newton_steady: line search stalled at residual " +
                                std::to_string(rnorm2));
        y = ytrial;
        res = rtrial;
        rnorm2 = norm_2(res);
    }
    if (norm_inf(res) > tol)
        throw NoConvergence("newton_steady: iteration cap reached, residual " +
                            std::to_string(norm_inf(res)));

    State sol = sys.unpack(y, 0.0);
    SteadyState out;
    out.u = std::move(sol.u);
    out.v = std::move(sol.v);
    out.residual_inf = norm_inf(res);
    out.iterations = it;

    const EigenPair pair = principal_eigenpair(grid, p, out.u);
    out.lambda_u = pair.lambda;
    const double vmax = *std::max_element(out.v.begin(), out.v.end());
    if (vmax > 1e-12) {
        double mis = 0.0;
        for (int i = 0; i < grid.n_v(); ++i)
            mis = std::max(mis, std::abs(out.v[i] / vmax - pair.phi[i]));
        out.eig_mismatch = mis;
    } else {
        out.eig_mismatch = 0.0;
    }
    return out;
}

// Verification map configuration. K shifts the prey operator so that
// z -> f(z) + K z - beta S z is nondecreasing on [0,1]; S caps the predator
// amplitude.
struct FixedPointConfig {
    double K = 0.0;
    double S = 0.0;

    static FixedPointConfig defaults(const ModelParams& p) {
        FixedPointConfig cfg;
        const GrowthFn& g = p.growth;
        // max of f on [0,1] (stationary point of the cubic in (theta,1))
        const double s_star = ((1.0 + g.theta) + std::sqrt(g.theta * g.theta - g.theta + 1.0)) / 3.0;
        const double f_max = g.f(s_star);
        cfg.S = 10.0 * std::max(1.0, f_max / p.beta);
        // steepest descent of f on [0,1] is at s=1 for theta < 1/2
        const double max_neg_slope = g.r * (1.0 - g.theta) / g.theta;
        cfg.K = p.beta * cfg.S + max_neg_slope + 1.0;
        return cfg;
    }

    void validate(const ModelParams& p) const {
        if (!(K > 0.0) || !(S > 0.0))
            throw DomainError("fixed point map: K and S must be positive");
        const GrowthFn& g = p.growth;
        const double slope_min = std::min(g.df(0.0), g.df(1.0)); // f' is concave
        if (slope_min + K - p.beta * S < 0.0)
            throw DomainError("fixed point map: K too small for monotonicity of "
                              "f(z) + K z - beta S z");
    }
};

// w = F(u, s): unique solution of (-d_u Lap + K) w = f(u) + K u - beta 1_A s phi[u] u
// with Neumann closure. The shifted operator is strictly diagonally dominant.
inline std::vector<double> fixed_point_map(const DualGrid& grid, const ModelParams& p,
                                           std::span<const double> u, double s,
                                           const FixedPointConfig& cfg) {
    cfg.validate(p);
    if (!(s >= 0.0 && s <= cfg.S))
        throw DomainError("fixed point map: amplitude s outside [0, S]");
    if (static_cast<int>(u.size()) != grid.n_u())
        throw SizeMismatch("fixed_point_map: field does not match grid");

    const EigenPair pair = principal_eigenpair(grid, p, u);
    const int n = grid.n_u();
    const int np = grid.n_v();

    Banded<double> m(n, 1, 1);
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
        if (i > 0) m(i, i - 1) = -p.d_u * grid.lap_u_lo(i);
        m(i, i) = -p.d_u * grid.lap_u_diag(i) + cfg.K;
        if (i + 1 < n) m(i, i + 1) = -p.d_u * grid.lap_u_hi(i);
        double source = p.growth.f(u[i]) + cfg.K * u[i];
        if (i < np) {
            double beta_i = p.beta;
            if (i == np - 1) beta_i *= grid.interface_fraction();
            source -= beta_i * s * pair.phi[i] * u[i];
        }
        rhs[i] = source;
    }
    try {
        m.factor();
    } catch (const SingularJacobian&) {
        throw SingularSystem("fixed_point_map: shifted operator singular (assembly bug)");
    }
    m.solve(std::span<double>(rhs));
    return rhs;
}

enum class SteadyGuess { FromDynamics, Homogeneous, TrivialPreyOnly };

// Canned initial guesses for the Newton solver. FromDynamics time-marches the
// default initial data for the default horizon and polishes the endpoint,
// which is how nontrivial equilibria are located in practice.
inline State steady_initial_guess(const DualGrid& grid, const ModelParams& p,
                                  SteadyGuess strategy, const SimOptions& opt = {}) {
    switch (strategy) {
    case SteadyGuess::FromDynamics: {
        SimOptions o = opt;
        o.record_fields = true;
        Trajectory traj = simulate(grid, p, default_initial_state(grid), o);
        return traj.snapshots.back();
    }
    case SteadyGuess::Homogeneous: {
        State s;
        const auto eq = homogeneous_equilibrium(p);
        const double u0 = eq ? eq->first : 1.0;
        const double v0 = eq ? eq->second : 0.5;
        s.u.assign(grid.n_u(), u0);
        s.v.assign(grid.n_v(), v0);
        return s;
    }
    case SteadyGuess::TrivialPreyOnly: {
        State s;
        s.u.assign(grid.n_u(), 1.0);
        s.v.assign(grid.n_v(), 0.0);
        return s;
    }
    }
    throw DomainError("unknown steady guess strategy");
}

} // namespace exzone

#endif
