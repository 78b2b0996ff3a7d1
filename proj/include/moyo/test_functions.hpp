#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "moyo/types.hpp"

namespace moyo {

// Observable with enough metadata for error bands: a Lipschitz constant and
// a sup bound (either may be infinite).
struct TestFunction {
    std::string name;
    std::function<double(const Vec&)> f;
    std::function<Vec(const Vec&)> grad;
    double lip = std::numeric_limits<double>::infinity();
    double sup = std::numeric_limits<double>::infinity();

    double operator()(const Vec& x) const { return f(x); }
};

inline TestFunction tf_constant(double c) {
    TestFunction t;
    t.name = "const";
    t.f = [c](const Vec&) { return c; };
    t.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    t.lip = 0.0;
    t.sup = std::abs(c);
    return t;
}

inline TestFunction tf_coordinate(int i) {
    TestFunction t;
    t.name = "coord" + std::to_string(i);
    t.f = [i](const Vec& x) { return x[i]; };
    t.grad = [i](const Vec& x) {
        Vec g = Vec::Zero(x.size());
        g[i] = 1.0;
        return g;
    };
    t.lip = 1.0;
    return t;
}

// Smooth saturation m * tanh(x_i / m): bounded, 1-Lipschitz, close to the
// coordinate near the origin.
inline TestFunction tf_coordinate_clipped(int i, double m) {
    TestFunction t;
    t.name = "clip" + std::to_string(i);
    t.f = [i, m](const Vec& x) { return m * std::tanh(x[i] / m); };
    t.grad = [i, m](const Vec& x) {
        Vec g = Vec::Zero(x.size());
        const double c = std::cosh(x[i] / m);
        g[i] = 1.0 / (c * c);
        return g;
    };
    t.lip = 1.0;
    t.sup = m;
    return t;
}

inline TestFunction tf_cosine(Vec h) {
    TestFunction t;
    t.name = "cos_h";
    t.lip = h.norm();
    t.sup = 1.0;
    auto hp = std::make_shared<Vec>(std::move(h));
    t.f = [hp](const Vec& x) { return std::cos(hp->dot(x)); };
    t.grad = [hp](const Vec& x) { return Vec(-std::sin(hp->dot(x)) * *hp); };
    return t;
}

inline TestFunction tf_sine(Vec h) {
    TestFunction t;
    t.name = "sin_h";
    t.lip = h.norm();
    t.sup = 1.0;
    auto hp = std::make_shared<Vec>(std::move(h));
    t.f = [hp](const Vec& x) { return std::sin(hp->dot(x)); };
    t.grad = [hp](const Vec& x) { return Vec(std::cos(hp->dot(x)) * *hp); };
    return t;
}

inline TestFunction tf_cos_product(Vec h1, Vec h2) {
    TestFunction t;
    t.name = "cos_h1_cos_h2";
    t.lip = h1.norm() + h2.norm();
    t.sup = 1.0;
    auto a = std::make_shared<Vec>(std::move(h1));
    auto b = std::make_shared<Vec>(std::move(h2));
    t.f = [a, b](const Vec& x) { return std::cos(a->dot(x)) * std::cos(b->dot(x)); };
    t.grad = [a, b](const Vec& x) {
        const double ca = std::cos(a->dot(x)), sa = std::sin(a->dot(x));
        const double cb = std::cos(b->dot(x)), sb = std::sin(b->dot(x));
        return Vec(-sa * cb * *a - ca * sb * *b);
    };
    return t;
}

// Logistic ramp approximating the indicator of {x_i > c}.
inline TestFunction tf_smooth_step(int i, double c, double eps) {
    TestFunction t;
    t.name = "step" + std::to_string(i);
    t.f = [i, c, eps](const Vec& x) { return 1.0 / (1.0 + std::exp(-(x[i] - c) / eps)); };
    t.grad = [i, c, eps](const Vec& x) {
        Vec g = Vec::Zero(x.size());
        const double s = 1.0 / (1.0 + std::exp(-(x[i] - c) / eps));
        g[i] = s * (1.0 - s) / eps;
        return g;
    };
    t.lip = 0.25 / eps;
    t.sup = 1.0;
    return t;
}

}  // namespace moyo
