#ifndef EXZONE_GRID1D_HPP
#define EXZONE_GRID1D_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "exzone/errors.hpp"

namespace exzone {

// Dual conforming uniform meshes on [0,a] and [a,L]. The prey field u lives
// on the merged mesh (the interface node at x=a is shared); the predator
// field v lives on the [0,a] sub-mesh only.
//
// Laplacians carry reflected-ghost Neumann closures at x=0, x=a (for v) and
// x=0, x=L (for u); the interface node of the u mesh uses the three-point
// nonuniform stencil. Rows are stored as (lo, diag, hi) coefficient triples.
class DualGrid {
public:
    DualGrid(double a, double L, int n_pred, int n_ex)
        : a_(a), L_(L), n_pred_(n_pred), n_ex_(n_ex) {
        if (!(a > 0.0 && a < L))
            throw DomainError("interface position must satisfy 0 < a < L");
        if (n_pred < 3 || n_ex < 3)
            throw DomainError("each sub-mesh needs at least 3 nodes");
        h_pred_ = a / (n_pred - 1);
        h_ex_ = (L - a) / (n_ex - 1);

        const int M = n_pred + n_ex - 1; // u nodes
        nodes_u_.resize(M);
        for (int i = 0; i < n_pred; ++i) nodes_u_[i] = i * h_pred_;
        nodes_u_[n_pred - 1] = a; // exact interface
        for (int j = 1; j < n_ex; ++j) nodes_u_[n_pred - 1 + j] = a + j * h_ex_;
        nodes_u_.back() = L;
        nodes_v_.assign(nodes_u_.begin(), nodes_u_.begin() + n_pred);

        build_laplacians();
        build_weights();
    }

    double a() const { return a_; }
    double L() const { return L_; }
    int n_pred() const { return n_pred_; }
    int n_ex() const { return n_ex_; }
    int n_u() const { return static_cast<int>(nodes_u_.size()); }
    int n_v() const { return n_pred_; }
    double h_pred() const { return h_pred_; }
    double h_ex() const { return h_ex_; }
    int interface_index() const { return n_pred_ - 1; }
    const std::vector<double>& nodes_u() const { return nodes_u_; }
    const std::vector<double>& nodes_v() const { return nodes_v_; }
    const std::vector<double>& weights_u() const { return wu_; }
    const std::vector<double>& weights_v() const { return wv_; }

    // Fraction of the interface node's dual cell lying inside [0,a]; the
    // predation term at the shared node is scaled by this so that the
    // discrete prey-loss and predator-gain budgets telescope exactly.
    double interface_fraction() const { return h_pred_ / (h_pred_ + h_ex_); }

    // Row coefficients of the discrete Laplacians (index into lo/diag/hi).
    double lap_u_lo(int i) const { return lu_lo_[i]; }
    double lap_u_diag(int i) const { return lu_di_[i]; }
    double lap_u_hi(int i) const { return lu_hi_[i]; }
    double lap_v_lo(int i) const { return lv_lo_[i]; }
    double lap_v_diag(int i) const { return lv_di_[i]; }
    double lap_v_hi(int i) const { return lv_hi_[i]; }

    void laplacian_u(std::span<const double> u, std::span<double> out) const {
        const int n = n_u();
        if (static_cast<int>(u.size()) != n || static_cast<int>(out.size()) != n)
            throw SizeMismatch("laplacian_u: field size does not match grid");
        out[0] = lu_di_[0] * u[0] + lu_hi_[0] * u[1];
        for (int i = 1; i < n - 1; ++i)
            out[i] = lu_lo_[i] * u[i - 1] + lu_di_[i] * u[i] + lu_hi_[i] * u[i + 1];
        out[n - 1] = lu_lo_[n - 1] * u[n - 2] + lu_di_[n - 1] * u[n - 1];
    }

    void laplacian_v(std::span<const double> v, std::span<double> out) const {
        const int n = n_v();
        if (static_cast<int>(v.size()) != n || static_cast<int>(out.size()) != n)
            throw SizeMismatch("laplacian_v: field size does not match grid");
        out[0] = lv_di_[0] * v[0] + lv_hi_[0] * v[1];
        for (int i = 1; i < n - 1; ++i)
            out[i] = lv_lo_[i] * v[i - 1] + lv_di_[i] * v[i] + lv_hi_[i] * v[i + 1];
        out[n - 1] = lv_lo_[n - 1] * v[n - 2] + lv_di_[n - 1] * v[n - 1];
    }

    std::vector<double> laplacian_u(std::span<const double> u) const {
        std::vector<double> out(n_u());
        laplacian_u(u, out);
        return out;
    }
    std::vector<double> laplacian_v(std::span<const double> v) const {
        std::vector<double> out(n_v());
        laplacian_v(v, out);
        return out;
    }

    // Composite trapezoid quadrature per sub-mesh (exact for piecewise
    // linear fields).
    double integrate_u(std::span<const double> u) const {
        if (static_cast<int>(u.size()) != n_u())
            throw SizeMismatch("integrate_u: field size does not match grid");
        double s = 0.0;
        for (int i = 0; i < n_u(); ++i) s += wu_[i] * u[i];
        return s;
    }
    double integrate_v(std::span<const double> v) const {
        if (static_cast<int>(v.size()) != n_v())
            throw SizeMismatch("integrate_v: field size does not match grid");
        double s = 0.0;
        for (int i = 0; i < n_v(); ++i) s += wv_[i] * v[i];
        return s;
    }

private:
    void build_laplacians() {
        const int n = n_u();
        lu_lo_.assign(n, 0.0);
        lu_di_.assign(n, 0.0);
        lu_hi_.assign(n, 0.0);
        const double hp2 = h_pred_ * h_pred_, he2 = h_ex_ * h_ex_;
        const int ifc = interface_index();

        lu_hi_[0] = 2.0 / hp2;
        for (int i = 1; i < ifc; ++i) {
            lu_lo_[i] = 1.0 / hp2;
            lu_hi_[i] = 1.0 / hp2;
        }
        // nonuniform three-point stencil at the shared node
        const double denom = h_pred_ * h_ex_ * (h_pred_ + h_ex_);
        lu_lo_[ifc] = 2.0 * h_ex_ / denom;
        lu_hi_[ifc] = 2.0 * h_pred_ / denom;
        for (int i = ifc + 1; i < n - 1; ++i) {
            lu_lo_[i] = 1.0 / he2;
            lu_hi_[i] = 1.0 / he2;
        }
        lu_lo_[n - 1] = 2.0 / he2;
        // diagonals as exact negated off-diagonal sums: constants are in the
        // kernel to the last bit
        for (int i = 0; i < n; ++i) lu_di_[i] = -(lu_lo_[i] + lu_hi_[i]);

        const int m = n_v();
        lv_lo_.assign(m, 0.0);
        lv_di_.assign(m, 0.0);
        lv_hi_.assign(m, 0.0);
        lv_hi_[0] = 2.0 / hp2;
        for (int i = 1; i < m - 1; ++i) {
            lv_lo_[i] = 1.0 / hp2;
            lv_hi_[i] = 1.0 / hp2;
        }
        lv_lo_[m - 1] = 2.0 / hp2;
        for (int i = 0; i < m; ++i) lv_di_[i] = -(lv_lo_[i] + lv_hi_[i]);
    }

    void build_weights() {
        const int n = n_u();
        const int ifc = interface_index();
        wu_.assign(n, 0.0);
        wu_[0] = 0.5 * h_pred_;
        for (int i = 1; i < ifc; ++i) wu_[i] = h_pred_;
        wu_[ifc] = 0.5 * (h_pred_ + h_ex_);
        for (int i = ifc + 1; i < n - 1; ++i) wu_[i] = h_ex_;
        wu_[n - 1] = 0.5 * h_ex_;

        wv_.assign(n_v(), h_pred_);
        wv_.front() = 0.5 * h_pred_;
        wv_.back() = 0.5 * h_pred_;
    }

    double a_ = 0.0, L_ = 0.0;
    int n_pred_ = 0, n_ex_ = 0;
    double h_pred_ = 0.0, h_ex_ = 0.0;
    std::vector<double> nodes_u_, nodes_v_;
    std::vector<double> lu_lo_, lu_di_, lu_hi_;
    std::vector<double> lv_lo_, lv_di_, lv_hi_;
    std::vector<double> wu_, wv_;
};

inline DualGrid build_grid(double a, double L, int n_pred, int n_ex) {
    return DualGrid(a, L, n_pred, n_ex);
}

// Node counts giving max(h_pred, h_ex) <= min(0.005 L, 0.1 sqrt(d_u/r)),
// resolving the interface layer at the default run resolution.
inline DualGrid default_grid(double a, double L, double d_u, double r,
                             int min_nodes = 9) {
    const double h = std::min(0.005 * L, 0.1 * std::sqrt(d_u / r));
    const int n_pred = std::max(min_nodes, static_cast<int>(std::ceil(a / h)) + 1);
    const int n_ex = std::max(min_nodes, static_cast<int>(std::ceil((L - a) / h)) + 1);
    return DualGrid(a, L, n_pred, n_ex);
}

} // namespace exzone

#endif
