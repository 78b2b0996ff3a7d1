#pragma once

#include <cmath>

#include "moyo/linear_system.hpp"
#include "moyo/potential.hpp"
#include "moyo/types.hpp"
#include "moyo/yosida.hpp"

namespace moyo {

// Finite-difference Dirichlet Laplacian on (0,1) with d interior nodes,
// dx = 1/(d+1). Grid functions live in the weighted space with
// <a,b> = dx * a.dot(b), the discrete L^2 pairing, so the driving noise is
// space-time white at the grid scale.
struct HeatGrid {
    int d = 0;
    double dx = 0.0;
    double barrier = 0.0;  // state constrained to x_i >= -barrier
    Mat laplacian;

    static double eigenvalue(int d, int k) {
        const double dx = 1.0 / (d + 1);
        return -(2.0 / (dx * dx)) * (1.0 - std::cos(k * 3.1415926535897932384626433832795 * dx));
    }
};

struct HeatGridSystem {
    HeatGrid grid;
    LinearSystem system;
    ConvexPotential constraint;  // orthant shifted by the barrier
};

inline HeatGridSystem build_heat_grid(int d, double barrier) {
    if (d < 1) throw ConfigError("heat grid needs at least one interior node");
    if (barrier < 0) throw ConfigError("barrier must be nonnegative");
    HeatGrid g;
    g.d = d;
    g.dx = 1.0 / (d + 1);
    g.barrier = barrier;
    g.laplacian = Mat::Zero(d, d);
    const double s = 1.0 / (g.dx * g.dx);
    for (int i = 0; i < d; ++i) {
        g.laplacian(i, i) = -2.0 * s;
        if (i > 0) g.laplacian(i, i - 1) = s;
        if (i + 1 < d) g.laplacian(i, i + 1) = s;
    }
    LinearSystem sys = LinearSystem::from_matrix(g.laplacian, g.dx);
    ConvexPotential constraint = indicator_orthant(d, barrier);
    return {std::move(g), std::move(sys), std::move(constraint)};
}

inline YosidaEnvelope heat_grid_envelope(const HeatGridSystem& h, double penalty) {
    return YosidaEnvelope(h.constraint, penalty, h.grid.dx);
}

}  // namespace moyo
