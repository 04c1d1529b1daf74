#ifndef EXZONE_RADAU_HPP
#define EXZONE_RADAU_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "exzone/errors.hpp"
#include "exzone/linalg.hpp"

namespace exzone {

// Autonomous-or-not ODE system y' = f(t, y) with a banded Jacobian df/dy.
template <class S>
concept BandedOdeSystem = requires(const S& s, double t, std::span<const double> y,
                                   std::span<double> f, BandedReal& jac) {
    { s.size() } -> std::convertible_to<int>;
    { s.lower() } -> std::convertible_to<int>;
    { s.upper() } -> std::convertible_to<int>;
    s.rhs(t, y, f);
    s.jacobian(t, y, jac);
};

struct RadauOptions {
    double rtol = 1e-7;
    double atol = 1e-9;
    double h_init = 0.0; // 0 = automatic
    double h_max = 0.0;  // 0 = integration span
    long max_steps = 5'000'000;
    int newton_max = 7;
    double safety = 0.9;
    double theta_jac = 1e-3; // contraction above which the Jacobian is refreshed
    double facl = 5.0;       // max step decrease factor
    double facr = 0.125;     // max step increase is 1/facr
    double quot1 = 1.0;      // keep-step window to avoid refactorization
    double quot2 = 1.2;
    bool gustafsson = true;
};

struct RadauStats {
    long nsteps = 0;
    long naccepted = 0;
    long nrejected = 0;
    long nfev = 0;
    long njac = 0;
    long nlu = 0;
};

// Collocation polynomial of the step just taken; valid inside the observer
// callback. Interpolates on [t0, t1] (and extrapolates slightly beyond).
class RadauDense {
public:
    RadauDense(double t0, double t1, double h,
               const std::vector<double>* c, double c1m1, double c2m1)
        : t0_(t0), t1_(t1), h_(h), c_(c), c1m1_(c1m1), c2m1_(c2m1) {}

    double t_begin() const { return t0_; }
    double t_end() const { return t1_; }

    void eval(double t, std::span<double> out) const {
        const int n = static_cast<int>(out.size());
        const double s = (t - t1_) / h_;
        const double* c0 = c_->data();
        const double* c1 = c0 + n;
        const double* c2 = c1 + n;
        const double* c3 = c2 + n;
        for (int i = 0; i < n; ++i)
            out[i] = c0[i] + s * (c1[i] + (s - c2m1_) * (c2[i] + (s - c1m1_) * c3[i]));
    }

private:
    double t0_, t1_, h_;
    const std::vector<double>* c_;
    double c1m1_, c2m1_;
};

namespace detail {

struct RadauConstants {
    double c1, c2, c1m1, c2m1, c1mc2;
    double dd1, dd2, dd3;     // error-estimate weights
    double u1, alph, beta;    // eigenvalues of the inverse RK matrix
    double t11, t12, t13, t21, t22, t23, t31;
    double ti11, ti12, ti13, ti21, ti22, ti23, ti31, ti32, ti33;

    RadauConstants() {
        const double sq6 = std::sqrt(6.0);
        c1 = (4.0 - sq6) / 10.0;
        c2 = (4.0 + sq6) / 10.0;
        c1m1 = c1 - 1.0;
        c2m1 = c2 - 1.0;
        c1mc2 = c1 - c2;
        dd1 = -(13.0 + 7.0 * sq6) / 3.0;
        dd2 = (-13.0 + 7.0 * sq6) / 3.0;
        dd3 = -1.0 / 3.0;
        const double t9 = std::cbrt(9.0);
        const double t81 = t9 * t9; // 81^(1/3)
        double u = (6.0 + t81 - t9) / 30.0;
        double al = (12.0 - t81 + t9) / 60.0;
        double be = (t81 + t9) * std::sqrt(3.0) / 60.0;
        const double cno = al * al + be * be;
        u1 = 1.0 / u;
        alph = al / cno;
        beta = be / cno;
        t11 = 9.1232394870892942792e-02;
        t12 = -0.14125529502095420843;
        t13 = -3.0029194105147424492e-02;
        t21 = 0.24171793270710701896;
        t22 = 0.20412935229379993199;
        t23 = 0.38294211275726193779;
        t31 = 0.96604818261509293619; // t32 = 1, t33 = 0
        ti11 = 4.3255798900631553510;
        ti12 = 0.33919925181580986954;
        ti13 = 0.54177053993587487119;
        ti21 = -4.1787185915519047273;
        ti22 = -0.32768282076106238708;
        ti23 = 0.47662355450055045196;
        ti31 = -0.50287263494578687595;
        ti32 = 2.5719269498556054292;
        ti33 = -0.59603920482822492497;
    }
};

inline const RadauConstants& radau_constants() {
    static const RadauConstants k;
    return k;
}

} // namespace detail

// Implicit Radau IIA, 3 stages, order 5: L-stable collocation with adaptive
// step control, simplified Newton on the transformed stage system (one real
// and one complex banded factorization per step size/Jacobian refresh), and
// the classical embedded error estimate.
//
// observe(dense) is invoked after every accepted step.
template <BandedOdeSystem System, class Observer>
RadauStats radau_integrate(const System& sys, double t0, std::vector<double>& y,
                           double t_end, const RadauOptions& opt, Observer&& observe) {
    const auto& K = detail::radau_constants();
    const int n = sys.size();
    const double eps = std::numeric_limits<double>::epsilon();
    const double span = t_end - t0;
    if (static_cast<int>(y.size()) != n) throw SizeMismatch("radau: state size does not match system");
    if (!(span > 0.0)) throw DomainError("radau: t_end must exceed t0");
    if (!(opt.rtol > 0.0 && opt.atol > 0.0)) throw DomainError("radau: tolerances must be positive");
    if (!all_finite(y)) throw NonFiniteState("radau: initial state is not finite");

    RadauStats st;
    const double hmax = opt.h_max > 0.0 ? std::min(opt.h_max, span) : span;
    const double fnewt = std::max(10.0 * eps / opt.rtol, std::min(0.03, std::sqrt(opt.rtol)));

    std::vector<double> scale(n), f0(n), ftmp(n), ytmp(n);
    std::vector<double> z1(n), z2(n), z3(n), w1(n), w2(n), w3(n);
    std::vector<double> r1(n), r2(n), r3(n), est(n);
    std::vector<double> cont(4 * static_cast<size_t>(n));
    BandedReal jac(n, sys.lower(), sys.upper());
    BandedReal e1(n, sys.lower(), sys.upper());
    BandedComplex e2(n, sys.lower(), sys.upper());
    std::vector<std::complex<double>> zc(n);

    auto update_scale = [&] {
        for (int i = 0; i < n; ++i) scale[i] = opt.atol + opt.rtol * std::abs(y[i]);
    };
    auto scaled_norm = [&](std::span<const double> v) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double q = v[i] / scale[i];
            s += q * q;
        }
        return std::sqrt(s / n);
    };

    double t = t0;
    update_scale();
    sys.rhs(t, y, f0);
    ++st.nfev;
    if (!all_finite(f0)) throw NonFiniteState("radau: rhs not finite at initial state");

    // initial step size: curvature probe unless given
    double h;
    if (opt.h_init > 0.0) {
        h = std::min(opt.h_init, hmax);
    } else {
        const double d0 = scaled_norm(y), d1 = scaled_norm(f0);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, hmax);
        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h0 * f0[i];
        sys.rhs(t + h0, ytmp, ftmp);
        ++st.nfev;
        for (int i = 0; i < n; ++i) ftmp[i] -= f0[i];
        const double d2 = scaled_norm(ftmp) / h0;
        const double der = std::max(d1, d2);
        const double h1 = der <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                       : std::pow(0.01 / der, 0.2);
        h = std::min({100.0 * h0, h1, hmax});
    }

    bool have_jac = false, have_lu = false;
    bool first = true, rejected = false, have_cont = false;
    double h_old = h, theta = 0.0, hacc = h, erracc = 1e-2;
    double fac1 = 0.0, alphn = 0.0, betan = 0.0;

    auto factorize = [&](double hcur) {
        fac1 = K.u1 / hcur;
        alphn = K.alph / hcur;
        betan = K.beta / hcur;
        e1.set_zero();
        e2.set_zero();
        for (int i = 0; i < n; ++i) {
            const int j0 = std::max(0, i - sys.lower());
            const int j1 = std::min(n - 1, i + sys.upper());
            for (int j = j0; j <= j1; ++j) {
                const double v = jac(i, j);
                e1(i, j) = -v;
                e2(i, j) = std::complex<double>(-v, 0.0);
            }
            e1(i, i) += fac1;
            e2(i, i) += std::complex<double>(alphn, betan);
        }
        e1.factor();
        e2.factor();
        ++st.nlu;
        have_lu = true;
    };

    while (t < t_end) {
        if (st.nsteps++ > opt.max_steps)
            throw StiffnessFailure("radau: step limit exceeded");
        if (h < 10.0 * eps * std::max(std::abs(t), 1.0))
            throw StiffnessFailure("radau: step size underflow at t=" + std::to_string(t));
        bool last = false;
        if (t + 1.01 * h >= t_end) {
            // the clamp changes the step size, so any factorization held over
            // from a keep-step shortcut no longer matches
            if (std::abs((t_end - t) - h) > 1e-14 * h) have_lu = false;
            h = t_end - t;
            last = true;
        }

        if (!have_jac) {
            sys.jacobian(t, y, jac);
            ++st.njac;
            have_jac = true;
            have_lu = false;
        }
        if (!have_lu) factorize(h);

        // Newton start: zero or extrapolated from the previous collocation
        // polynomial.
        if (first || !have_cont) {
            std::fill(z1.begin(), z1.end(), 0.0);
            std::fill(z2.begin(), z2.end(), 0.0);
            std::fill(z3.begin(), z3.end(), 0.0);
            std::fill(w1.begin(), w1.end(), 0.0);
            std::fill(w2.begin(), w2.end(), 0.0);
            std::fill(w3.begin(), w3.end(), 0.0);
        } else {
            const double hr = h / h_old;
            const double s1 = K.c1 * hr, s2 = K.c2 * hr, s3 = hr;
            const double* c0 = cont.data();
            const double* cA = c0 + n;
            const double* cB = cA + n;
            const double* cC = cB + n;
            auto extrap = [&](double s, std::vector<double>& z) {
                for (int i = 0; i < n; ++i)
                    z[i] = c0[i] + s * (cA[i] + (s - K.c2m1) * (cB[i] + (s - K.c1m1) * cC[i])) - y[i];
            };
            extrap(s1, z1);
            extrap(s2, z2);
            extrap(s3, z3);
            for (int i = 0; i < n; ++i) {
                w1[i] = K.ti11 * z1[i] + K.ti12 * z2[i] + K.ti13 * z3[i];
                w2[i] = K.ti21 * z1[i] + K.ti22 * z2[i] + K.ti23 * z3[i];
                w3[i] = K.ti31 * z1[i] + K.ti32 * z2[i] + K.ti33 * z3[i];
            }
        }

        // simplified Newton on the transformed stage equations
        bool converged = false, newton_bad = false;
        double dynold = 0.0, faccon = 1.0;
        int iters = 0;
        theta = 0.0;
        for (int k = 0; k < opt.newton_max; ++k) {
            iters = k + 1;
            bool bad_eval = false;
            auto eval_stage = [&](const std::vector<double>& z, double c, std::vector<double>& out) {
                for (int i = 0; i < n; ++i) ytmp[i] = y[i] + z[i];
                sys.rhs(t + c * h, ytmp, out);
                ++st.nfev;
                if (!all_finite(out)) bad_eval = true;
            };
            eval_stage(z1, K.c1, r1);
            if (!bad_eval) eval_stage(z2, K.c2, r2);
            if (!bad_eval) eval_stage(z3, 1.0, r3);
            if (bad_eval) { newton_bad = true; break; }

            for (int i = 0; i < n; ++i) {
                const double g1 = K.ti11 * r1[i] + K.ti12 * r2[i] + K.ti13 * r3[i];
                const double g2 = K.ti21 * r1[i] + K.ti22 * r2[i] + K.ti23 * r3[i];
                const double g3 = K.ti31 * r1[i] + K.ti32 * r2[i] + K.ti33 * r3[i];
                r1[i] = g1 - fac1 * w1[i];
                const double p2 = g2 - (alphn * w2[i] - betan * w3[i]);
                const double p3 = g3 - (betan * w2[i] + alphn * w3[i]);
                r2[i] = p2;
                r3[i] = p3;
                zc[i] = std::complex<double>(p2, p3);
            }
            e1.solve(std::span<double>(r1));
            e2.solve(std::span<std::complex<double>>(zc));
            for (int i = 0; i < n; ++i) {
                r2[i] = zc[i].real();
                r3[i] = zc[i].imag();
            }

            double dyno = 0.0;
            for (int i = 0; i < n; ++i) {
                const double q1 = r1[i] / scale[i], q2 = r2[i] / scale[i], q3 = r3[i] / scale[i];
                dyno += q1 * q1 + q2 * q2 + q3 * q3;
            }
            dyno = std::sqrt(dyno / (3.0 * n));

            if (k > 0) {
                theta = dyno / dynold;
                if (theta < 0.99) {
                    faccon = theta / (1.0 - theta);
                    const double dyth = faccon * dyno *
                                        std::pow(theta, opt.newton_max - 2 - k) / fnewt;
                    if (dyth >= 1.0) { newton_bad = true; break; } // predicted divergence
                } else {
                    newton_bad = true;
                    break;
                }
            } else {
                faccon = std::max(faccon, std::pow(eps, 0.8));
            }
            dynold = std::max(dyno, eps);

            for (int i = 0; i < n; ++i) {
                w1[i] += r1[i];
                w2[i] += r2[i];
                w3[i] += r3[i];
                z1[i] = K.t11 * w1[i] + K.t12 * w2[i] + K.t13 * w3[i];
                z2[i] = K.t21 * w1[i] + K.t22 * w2[i] + K.t23 * w3[i];
                z3[i] = K.t31 * w1[i] + w2[i];
            }
            if (faccon * dyno <= fnewt) { converged = true; break; }
        }

        if (!converged || newton_bad) {
            // refresh the Jacobian and retry with half the step
            if (!newton_bad && iters >= opt.newton_max) ++st.nrejected;
            h *= 0.5;
            have_lu = false;
            if (theta > opt.theta_jac) have_jac = false;
            have_cont = false; // stale polynomial is a poor predictor after failure
            continue;
        }

        // embedded error estimate (stabilized for first/rejected steps)
        {
            const double he1 = K.dd1 / h, he2 = K.dd2 / h, he3 = K.dd3 / h;
            for (int i = 0; i < n; ++i) {
                ftmp[i] = he1 * z1[i] + he2 * z2[i] + he3 * z3[i];
                est[i] = f0[i] + ftmp[i];
            }
            e1.solve(std::span<double>(est));
            double err = std::max(scaled_norm(est), 1e-10);
            if (err >= 1.0 && (first || rejected)) {
                for (int i = 0; i < n; ++i) ytmp[i] = y[i] + est[i];
                sys.rhs(t, ytmp, est);
                ++st.nfev;
                if (all_finite(est)) {
                    for (int i = 0; i < n; ++i) est[i] += ftmp[i];
                    e1.solve(std::span<double>(est));
                    err = std::max(scaled_norm(est), 1e-10);
                } else {
                    err = 2.0; // force rejection
                }
            }

            const double fac = std::min(opt.safety,
                                        opt.safety * (2.0 * opt.newton_max + 1.0) /
                                            (2.0 * opt.newton_max + iters));
            double quot = std::clamp(std::pow(err, 0.25) / fac, opt.facr, opt.facl);
            double hnew = h / quot;

            if (err >= 1.0) { // reject
                ++st.nrejected;
                rejected = true;
                first = false;
                h = std::min(hnew, h);
                have_lu = false;
                have_cont = false;
                continue;
            }

            // accept
            if (opt.gustafsson && st.naccepted > 0) {
                double facgus = (hacc / h) * std::pow(err * err / erracc, 0.25) / opt.safety;
                facgus = std::clamp(facgus, opt.facr, opt.facl);
                quot = std::max(quot, facgus);
                hnew = h / quot;
            }
            hacc = h;
            erracc = std::max(1e-2, err);
            ++st.naccepted;

            for (int i = 0; i < n; ++i) y[i] += z3[i];
            if (!all_finite(y)) throw NonFiniteState("radau: non-finite state after step");

            // collocation polynomial for dense output
            {
                double* c0 = cont.data();
                double* cA = c0 + n;
                double* cB = cA + n;
                double* cC = cB + n;
                for (int i = 0; i < n; ++i) {
                    c0[i] = y[i];
                    const double a1 = (z2[i] - z3[i]) / K.c2m1;
                    const double ak = (z1[i] - z2[i]) / K.c1mc2;
                    double a3 = z1[i] / K.c1;
                    a3 = (ak - a3) / K.c2;
                    const double a2 = (ak - a1) / K.c1m1;
                    cA[i] = a1;
                    cB[i] = a2;
                    cC[i] = a2 - a3;
                }
            }
            const double t_new = t + h;
            observe(RadauDense(t, t_new, h, &cont, K.c1m1, K.c2m1));
            have_cont = true;
            h_old = h;
            t = t_new;
            update_scale();
            sys.rhs(t, y, f0);
            ++st.nfev;
            if (!all_finite(f0)) throw NonFiniteState("radau: rhs not finite after step");

            if (last && t >= t_end * (1.0 - 1e-14)) break;

            if (theta > opt.theta_jac) { have_jac = false; have_lu = false; }
            hnew = std::min(hnew, hmax);
            if (rejected) hnew = std::min(hnew, h);
            rejected = false;
            first = false;

            const double ratio = hnew / h;
            if (have_jac && have_lu && ratio >= opt.quot1 && ratio <= opt.quot2) {
                // keep the step size and the current factorization
            } else {
                h = hnew;
                have_lu = false;
            }
        }
    }
    return st;
}

} // namespace exzone

#endif
