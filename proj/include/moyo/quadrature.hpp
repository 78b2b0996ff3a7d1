#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "moyo/errors.hpp"

namespace moyo {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum; }
};

inline double normal_pdf(double x, double sigma = 1.0) {
    const double z = x / sigma;
    return std::exp(-0.5 * z * z) / (sigma * 2.5066282746310005024157652848110);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485); }

// Gauss-Legendre nodes and weights on [-1,1], computed once per order by
// Newton iteration on the Legendre recurrence.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussLegendre& order(int m) {
        static std::map<int, GaussLegendre> cache;
        auto it = cache.find(m);
        if (it != cache.end()) return it->second;
        GaussLegendre rule;
        rule.nodes.resize(m);
        rule.weights.resize(m);
        for (int i = 0; i < m; ++i) {
            double x = std::cos(3.1415926535897932384626433832795 * (i + 0.75) / (m + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= m; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            rule.nodes[i] = x;
            rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return cache.emplace(m, std::move(rule)).first->second;
    }
};

// One-dimensional rule: panels of Gauss-Legendre points tiled over [a,b],
// with panel edges aligned to the supplied breakpoints so that integrands
// that are smooth between breakpoints are integrated at spectral accuracy.
struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;

    static Rule1D composite(double a, double b, std::vector<double> breakpoints,
                            int target_points, int gl_order = 16) {
        if (!(b > a)) throw ConfigError("composite rule: empty interval");
        std::vector<double> cuts{a, b};
        for (double c : breakpoints)
            if (c > a && c < b) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        const GaussLegendre& gl = GaussLegendre::order(gl_order);
        const int total_panels = std::max<int>(1, target_points / gl_order);
        const double span = b - a;

        Rule1D rule;
        rule.x.reserve(total_panels * gl_order + gl_order);
        rule.w.reserve(total_panels * gl_order + gl_order);
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            const double lo = cuts[s], hi = cuts[s + 1];
            const int panels =
                std::max<int>(1, static_cast<int>(std::ceil(total_panels * (hi - lo) / span)));
            const double h = (hi - lo) / panels;
            for (int p = 0; p < panels; ++p) {
                const double mid = lo + (p + 0.5) * h;
                for (int k = 0; k < gl_order; ++k) {
                    rule.x.push_back(mid + 0.5 * h * gl.nodes[k]);
                    rule.w.push_back(0.5 * h * gl.weights[k]);
                }
            }
        }
        return rule;
    }

    // Uniform periodic trapezoid over [0, period); spectrally accurate for
    // smooth periodic integrands.
    static Rule1D periodic(double period, int points) {
        Rule1D rule;
        rule.x.resize(points);
        rule.w.resize(points);
        const double h = period / points;
        for (int i = 0; i < points; ++i) {
            rule.x[i] = i * h;
            rule.w[i] = h;
        }
        return rule;
    }

    template <class F>
    double integrate(F&& f) const {
        KahanSum acc;
        for (std::size_t i = 0; i < x.size(); ++i) acc.add(w[i] * f(x[i]));
        return acc.value();
    }
};

struct ScalarMin {
    double t;
    double value;
};

// Golden-section minimization of a convex scalar function. The bracket is
// grown by doubling from t=0; a minimizer escaping past |t| = cap signals a
// non-coercive objective.
template <class F>
ScalarMin minimize_convex(F&& f, double tol = 1e-10, double cap = 1e6) {
    double m = 0.0, fm = f(0.0);
    if (std::isinf(fm)) {
        // Hard domain constraints can leave the origin infeasible: hunt for a
        // finite value on a geometric grid before bracketing.
        bool found = false;
        for (double r = 1.0 / 1024.0; r <= cap && !found; r *= 2.0)
            for (double s : {r, -r})
                if (double v = f(s); v < fm) {
                    m = s;
                    fm = v;
                    found = true;
                    break;
                }
        if (!found) return {0.0, fm};
    }
    double a = m - 1.0, fa = f(a);
    double b = m + 1.0, fb = f(b);
    if (fa < fm || fb < fm) {
        const double dir = (fa < fb) ? -1.0 : 1.0;
        double prev_t = m;
        double cur_t = m + dir, fcur = (dir < 0) ? fa : fb;
        double prev_f = fm;
        double step = dir;
        while (true) {
            step *= 2.0;
            const double next_t = cur_t + step;
            if (std::abs(next_t) > cap)
                throw CoercivityError("scalar minimization: objective keeps decreasing past cap");
            const double fnext = f(next_t);
            if (fnext > fcur) {
                a = std::min(prev_t, next_t);
                b = std::max(prev_t, next_t);
                m = cur_t;
                fm = fcur;
                break;
            }
            prev_t = cur_t;
            prev_f = fcur;
            cur_t = next_t;
            fcur = fnext;
        }
        (void)prev_f;
    }
    const double phi = 0.61803398874989484820458683436564;
    double x1 = b - phi * (b - a), f1 = f(x1);
    double x2 = a + phi * (b - a), f2 = f(x2);
    while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    const double t = 0.5 * (a + b);
    return {t, std::min(std::min(f1, f2), f(t))};
}

}  // namespace moyo
