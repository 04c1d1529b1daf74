#ifndef EXZONE_MODEL_HPP
#define EXZONE_MODEL_HPP

#include <vector>

#include "exzone/errors.hpp"
#include "exzone/grid1d.hpp"
#include "exzone/growth.hpp"

namespace exzone {

struct ModelParams {
    double alpha = 14.0; // conversion rate
    double beta = 12.0;  // predation rate
    double gamma = 5.0;  // predator mortality
    double d_u = 0.1;
    double d_v = 0.05;
    GrowthFn growth{1.0, 0.05};
    double a = 0.4;
    double L = 1.0;

    void validate() const {
        if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0))
            throw DomainError("rates alpha, beta, gamma must be positive");
        if (!(d_u > 0.0 && d_v > 0.0))
            throw DomainError("diffusivities must be positive");
        if (!(a > 0.0 && a < L))
            throw DomainError("geometry must satisfy 0 < a < L");
    }
};

struct State {
    std::vector<double> u; // prey on nodes_u
    std::vector<double> v; // predators on nodes_v
    double t = 0.0;
};

// Spatially homogeneous default initial data: prey at carrying capacity,
// a moderate predator load on the predator domain.
inline State default_initial_state(const DualGrid& grid) {
    State s;
    s.u.assign(grid.n_u(), 1.0);
    s.v.assign(grid.n_v(), 0.5);
    return s;
}

} // namespace exzone

#endif
