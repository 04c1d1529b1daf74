#ifndef EXZONE_QUADRATURE_HPP
#define EXZONE_QUADRATURE_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace exzone {

struct GaussRule {
    std::vector<double> x; // nodes on (-1, 1)
    std::vector<double> w;
};

namespace detail {

// Nodes and weights by Newton iteration on the Legendre polynomial
// recurrence; only half the roots are computed, the rest follow by symmetry.
inline GaussRule compute_gauss_rule(int n) {
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = -p1 / pp;
            z += dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

} // namespace detail

// Cached rule lookup; safe for concurrent use.
inline const GaussRule& gauss_rule(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_rule(n)).first;
    return it->second;
}

template <class F>
double gauss_integrate(F&& f, double a, double b, int n) {
    const GaussRule& rule = gauss_rule(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rule.w[i] * f(mid + half * rule.x[i]);
    return half * s;
}

// Fixed-order rule doubled until two successive values agree to tol
// (relative). Intended for smooth integrands.
template <class F>
double gauss_integrate_adaptive_order(F&& f, double a, double b,
                                      double tol = 1e-10, int n0 = 64, int nmax = 2048) {
    double prev = gauss_integrate(f, a, b, n0);
    for (int n = 2 * n0; n <= nmax; n *= 2) {
        const double cur = gauss_integrate(f, a, b, n);
        if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

} // namespace exzone

#endif
