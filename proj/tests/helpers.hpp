#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "moyo/potential.hpp"
#include "moyo/rng.hpp"
#include "moyo/types.hpp"
#include "moyo/yosida.hpp"

namespace moyo::testutil {

// Brute-force envelope: min over a fine y-grid of U(y) + p * |x - y|^2.
inline double envelope_grid_1d(const ConvexPotential& u, double x, double p, double lo,
                               double hi, int pts = 400001) {
    double best = std::numeric_limits<double>::infinity();
    const double h = (hi - lo) / (pts - 1);
    for (int i = 0; i < pts; ++i) {
        const double y = lo + i * h;
        const double v = u.value(vec1(y));
        if (!std::isfinite(v)) continue;
        best = std::min(best, v + p * (x - y) * (x - y));
    }
    return best;
}

inline double envelope_grid_2d(const ConvexPotential& u, const Vec& x, double p, const Vec& lo,
                               const Vec& hi, int pts = 801) {
    double best = std::numeric_limits<double>::infinity();
    const double hx = (hi[0] - lo[0]) / (pts - 1);
    const double hy = (hi[1] - lo[1]) / (pts - 1);
    Vec y(2);
    for (int i = 0; i < pts; ++i) {
        y[0] = lo[0] + i * hx;
        for (int j = 0; j < pts; ++j) {
            y[1] = lo[1] + j * hy;
            const double v = u.value(y);
            if (!std::isfinite(v)) continue;
            best = std::min(best, v + p * (x - y).squaredNorm());
        }
    }
    return best;
}

inline Vec fd_gradient(const YosidaEnvelope& env, const Vec& x, double step = 1e-6) {
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        g[i] = (env.value(xp) - env.value(xm)) / (2.0 * step);
    }
    return g;
}

inline std::vector<Vec> sample_points(int dim, int count, std::uint64_t seed, double scale) {
    std::vector<Vec> pts;
    pts.reserve(count);
    rng::Stream s(seed);
    for (int k = 0; k < count; ++k) {
        Vec x(dim);
        for (int i = 0; i < dim; ++i) x[i] = scale * s.gaussian();
        pts.push_back(std::move(x));
    }
    return pts;
}

inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return ks;
}

}  // namespace moyo::testutil
