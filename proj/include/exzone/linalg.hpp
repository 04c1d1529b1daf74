#ifndef EXZONE_LINALG_HPP
#define EXZONE_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "exzone/errors.hpp"

namespace exzone {

// Band matrix in LAPACK-style storage with room for fill-in: entry (i,j)
// lives at a[(kl + ku + i - j) + j*ldab] for -ku <= i-j <= kl, and the
// factorization uses the extra kl rows above the band. Scalar T is double
// or std::complex<double>.
template <class T>
class Banded {
public:
    Banded() = default;
    Banded(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          a_(static_cast<size_t>(ldab_) * n, T{}) {}

    int size() const { return n_; }
    int lower() const { return kl_; }
    int upper() const { return ku_; }

    // Entry access inside the logical band (pre-factorization).
    T& operator()(int i, int j) { return a_[idx(i, j)]; }
    const T& operator()(int i, int j) const { return a_[idx(i, j)]; }

    bool in_band(int i, int j) const {
        const int d = i - j;
        return d >= -ku_ && d <= kl_;
    }

    void set_zero() { std::fill(a_.begin(), a_.end(), T{}); }

    // y = A x
    void multiply(std::span<const T> x, std::span<T> y) const {
        for (int i = 0; i < n_; ++i) {
            T s{};
            const int j0 = std::max(0, i - kl_);
            const int j1 = std::min(n_ - 1, i + ku_);
            for (int j = j0; j <= j1; ++j) s += a_[idx(i, j)] * x[j];
            y[i] = s;
        }
    }

    // In-place LU with partial pivoting. Throws SingularJacobian on exact
    // breakdown. After this, use solve().
    void factor() {
        ipiv_.assign(n_, 0);
        const int w = kl_ + ku_; // filled upper width
        for (int j = 0; j < n_; ++j) {
            const int iend = std::min(n_ - 1, j + kl_);
            int p = j;
            double amax = std::abs(raw(j, j));
            for (int i = j + 1; i <= iend; ++i) {
                const double v = std::abs(raw(i, j));
                if (v > amax) { amax = v; p = i; }
            }
            if (amax == 0.0) throw SingularJacobian("banded LU: zero pivot column");
            ipiv_[j] = p;
            const int jend = std::min(n_ - 1, j + w);
            if (p != j)
                for (int k = j; k <= jend; ++k) std::swap(raw(j, k), raw(p, k));
            const T piv = raw(j, j);
            for (int i = j + 1; i <= iend; ++i) {
                const T l = raw(i, j) / piv;
                raw(i, j) = l;
                for (int k = j + 1; k <= jend; ++k) raw(i, k) -= l * raw(j, k);
            }
        }
        factored_ = true;
    }

    // Solve A x = b in place using the stored factorization.
    void solve(std::span<T> b) const {
        const int w = kl_ + ku_;
        for (int j = 0; j < n_; ++j) {
            if (ipiv_[j] != j) std::swap(b[j], b[ipiv_[j]]);
            const int iend = std::min(n_ - 1, j + kl_);
            for (int i = j + 1; i <= iend; ++i) b[i] -= raw(i, j) * b[j];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            const int j0 = std::max(0, j - w);
            b[j] /= raw(j, j);
            for (int i = j0; i < j; ++i) b[i] -= raw(i, j) * b[j];
        }
    }

    bool factored() const { return factored_; }

private:
    size_t idx(int i, int j) const { return static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * ldab_; }
    // raw() spans the widened band used during elimination.
    T& raw(int i, int j) { return a_[idx(i, j)]; }
    const T& raw(int i, int j) const { return a_[idx(i, j)]; }

    int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 0;
    std::vector<T> a_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

using BandedReal = Banded<double>;
using BandedComplex = Banded<std::complex<double>>;

inline double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm_2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Symmetric tridiagonal eigenvalue tools (diag d, off-diagonal e between
// consecutive rows). Used for the principal eigenpair of the linearized
// predator operator.

// Number of eigenvalues strictly below x (Sturm count via the shifted
// LDL^T recurrence).
inline int sturm_count_below(std::span<const double> d, std::span<const double> e, double x) {
    const int n = static_cast<int>(d.size());
    int count = 0;
    double q = d[0] - x;
    if (q < 0.0) ++count;
    const double tiny = 1e-300;
    for (int i = 1; i < n; ++i) {
        if (q == 0.0) q = tiny;
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q < 0.0) ++count;
    }
    return count;
}

// Smallest eigenvalue by bisection on the Sturm count; bracket from
// Gershgorin discs.
inline double tridiag_smallest_eigenvalue(std::span<const double> d, std::span<const double> e) {
    const int n = static_cast<int>(d.size());
    double lo = d[0], hi = d[0];
    for (int i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(e[i - 1]);
        if (i + 1 < n) r += std::abs(e[i]);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
    for (int it = 0; it < 200 && hi - lo > 1e-16 * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count_below(d, e, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Eigenvector for an isolated eigenvalue by inverse iteration; the shift is
// nudged off the eigenvalue to keep the tridiagonal solve well posed.
// Returns the (sign-unnormalized) vector and the Rayleigh quotient.
inline std::pair<std::vector<double>, double>
tridiag_inverse_iteration(std::span<const double> d, std::span<const double> e, double lambda) {
    const int n = static_cast<int>(d.size());
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(d[i]));
    for (int i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(e[i]));
    double shift = lambda - 1e-11 * std::max(scale, 1.0);

    std::vector<double> x(n, 1.0); // deterministic start
    double rayleigh = lambda;
    for (int sweep = 0; sweep < 8; ++sweep) {
        Banded<double> m(n, 1, 1);
        for (int i = 0; i < n; ++i) {
            m(i, i) = d[i] - shift;
            if (i + 1 < n) { m(i + 1, i) = e[i]; m(i, i + 1) = e[i]; }
        }
        try {
            m.factor();
        } catch (const SingularJacobian&) {
            shift -= 1e-9 * std::max(scale, 1.0);
            continue;
        }
        m.solve(std::span<double>(x));
        const double nrm = norm_2(x);
        if (!(nrm > 0.0) || !all_finite(x))
            throw ConvergenceFailure("inverse iteration produced a non-finite vector");
        for (double& xi : x) xi /= nrm;
        // Rayleigh quotient of the tridiagonal matrix.
        double num = 0.0;
        for (int i = 0; i < n; ++i) {
            double ax = d[i] * x[i];
            if (i > 0) ax += e[i - 1] * x[i - 1];
            if (i + 1 < n) ax += e[i] * x[i + 1];
            num += x[i] * ax;
        }
        if (std::abs(num - rayleigh) <= 1e-14 * std::max(1.0, std::abs(num)) && sweep >= 1) {
            rayleigh = num;
            break;
        }
        rayleigh = num;
    }
    return {std::move(x), rayleigh};
}

} // namespace exzone

#endif
