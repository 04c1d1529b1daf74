#ifndef EXZONE_GROWTH_HPP
#define EXZONE_GROWTH_HPP

#include <cmath>
#include <concepts>

#include "exzone/errors.hpp"

namespace exzone {

// A prey growth model usable by the profile/branch machinery: a reaction
// rate f, its derivative, its antiderivative F (the potential), the Allee
// threshold and the upper root of F. Only the cubic ships, but everything
// downstream of the kinetics is written against this interface.
template <class G>
concept GrowthModel = requires(const G& g, double s) {
    { g.f(s) } -> std::convertible_to<double>;
    { g.df(s) } -> std::convertible_to<double>;
    { g.F(s) } -> std::convertible_to<double>;
    { g.threshold() } -> std::convertible_to<double>;
    { g.upper_root() } -> std::convertible_to<double>;
};

// Bistable cubic kinetics f(s) = r*s*(s/theta - 1)*(1 - s).
//
// Zeros at 0, theta, 1; negative on (0,theta), positive on (theta,1).
// The potential F(s) = integral_0^s f has a second zero theta_prime in
// (theta,1) provided theta < 1/2, which is required at construction.
struct GrowthFn {
    double r = 1.0;           // growth amplitude, 1/time
    double theta = 0.25;      // Allee threshold in (0, 1/2)
    double theta_prime = 0.0; // cached root of F in (theta, 1)

    GrowthFn() = default;

    GrowthFn(double r_, double theta_) : r(r_), theta(theta_) {
        if (!(r > 0.0))
            throw DomainError("growth rate r must be positive");
        if (!(theta > 0.0 && theta < 1.0))
            throw DomainError("Allee threshold theta must lie in (0,1)");
        if (theta >= 0.5)
            throw HypothesisError("theta >= 1/2 makes the potential F(1) <= 0; "
                                  "no bistable invasion is possible");
        theta_prime = compute_upper_root();
    }

    // f(s), evaluated as given also outside [0,1] (solver overshoot); no clamping.
    double f(double s) const { return r * s * (s / theta - 1.0) * (1.0 - s); }

    // f'(s) for the cubic, exact.
    double df(double s) const {
        const double c = r / theta;
        return c * (-3.0 * s * s + 2.0 * (1.0 + theta) * s - theta);
    }

    double d2f(double s) const {
        const double c = r / theta;
        return c * (-6.0 * s + 2.0 * (1.0 + theta));
    }

    double d3f() const { return -6.0 * r / theta; }

    // Antiderivative F(s) = integral_0^s f, closed form; F(0) = 0.
    double F(double s) const {
        const double c = r / theta;
        const double s2 = s * s;
        return c * s2 * (-0.25 * s2 + (1.0 + theta) * s / 3.0 - 0.5 * theta);
    }

    // F(q) - F(q - delta) without cancellation: F is quartic, so the Taylor
    // expansion in delta terminates and is exact.
    double F_diff(double q, double delta) const {
        const double a1 = f(q);
        const double a2 = -0.5 * df(q);
        const double a3 = d2f(q) / 6.0;
        const double a4 = -d3f() / 24.0;
        return delta * (a1 + delta * (a2 + delta * (a3 + delta * a4)));
    }

    // Stable evaluations near s = 1 parameterized by the gap g = 1 - s.
    // The factor (1 - s) is carried exactly instead of being recomputed
    // from a rounded s.
    double f_at_gap(double g) const {
        const double s = 1.0 - g;
        return r * s * ((s - theta) / theta) * g;
    }
    double df_at_gap(double g) const { return df(1.0 - g); }

    // F(1) - F(1 - g), exact quartic Taylor at s = 1 (f(1) = 0).
    double F_drop_from_one(double g) const {
        const double g2 = g * g;
        return g2 * (-0.5 * df(1.0) + g * (d2f(1.0) / 6.0 - g * d3f() / 24.0));
    }

    double threshold() const { return theta; }
    double upper_root() const { return theta_prime; }

    // F(1) = (r/theta)(1 - 2 theta)/12 > 0 for theta < 1/2.
    double F_at_one() const { return (r / theta) * (1.0 - 2.0 * theta) / 12.0; }

private:
    // F(s) = (r s^2 / 12 theta)(-3 s^2 + 4(1+theta) s - 6 theta); the nonzero
    // roots solve 3 s^2 - 4(1+theta) s + 6 theta = 0. The smaller root is the
    // one in (theta, 1). One Newton step on F polishes the rounding.
    double compute_upper_root() const {
        const double disc = 4.0 * theta * theta - 10.0 * theta + 4.0;
        double s = (2.0 * (1.0 + theta) - std::sqrt(disc)) / 3.0;
        const double fs = f(s);
        if (fs != 0.0) s -= F(s) / fs;
        return s;
    }
};

static_assert(GrowthModel<GrowthFn>);

inline GrowthFn make_growth(double r, double theta) { return GrowthFn(r, theta); }

} // namespace exzone

#endif
