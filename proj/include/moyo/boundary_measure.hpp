#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "moyo/gibbs.hpp"
#include "moyo/potential.hpp"
#include "moyo/quadrature.hpp"
#include "moyo/test_functions.hpp"
#include "moyo/types.hpp"

namespace moyo {

// Signed measure with a density component (a weight against a Gibbs measure)
// and a surface component (facet integrals). Either part may be absent.
struct SignedMeasure {
    std::shared_ptr<const GibbsMeasure> density_base;
    std::function<double(const Vec&)> density_weight;

    struct SurfaceFacet {
        std::string label;
        double signed_mass = 0.0;
        double abs_mass = 0.0;
        std::function<double(const std::function<double(const Vec&)>&)> integrate_signed;
        std::function<double(const std::function<double(const Vec&)>&)> integrate_abs;
    };
    std::vector<SurfaceFacet> facets;

    double integrate(const std::function<double(const Vec&)>& phi) const {
        double total = 0.0;
        if (density_base)
            total += density_base->integrate(
                [&](const Vec& x) { return density_weight(x) * phi(x); });
        for (const auto& f : facets) total += f.integrate_signed(phi);
        return total;
    }

    double total_variation() const {
        double tv = 0.0;
        if (density_base) {
            auto abs_weight = [&](const Vec& x) { return std::abs(density_weight(x)); };
            if (density_base->dim() == 1) {
                // Split quadrature panels at the sign changes of the weight so
                // the absolute value stays analytic piecewise.
                tv += density_base->integrate_with_cuts(abs_weight, weight_roots_1d());
            } else {
                tv += density_base->integrate(abs_weight);
            }
        }
        for (const auto& f : facets) tv += f.abs_mass;
        return tv;
    }

    // |density part| mass outside the centered ball of the given radius.
    double density_tail_mass(double radius) const {
        if (!density_base) return 0.0;
        return density_base->integrate([&](const Vec& x) {
            return x.norm() > radius ? std::abs(density_weight(x)) : 0.0;
        });
    }

  private:
    // Sign changes of the 1D weight, located by scan plus bisection.
    std::vector<double> weight_roots_1d() const {
        const auto [lo, hi] = density_base->window(0);
        auto w = [&](double t) { return density_weight(vec1(t)); };
        std::vector<double> roots;
        const int scan = 4096;
        double prev_t = lo, prev_v = w(lo);
        for (int i = 1; i <= scan; ++i) {
            const double t = lo + (hi - lo) * i / scan;
            const double v = w(t);
            if ((prev_v < 0.0) != (v < 0.0) && prev_v != 0.0) {
                double a = prev_t, b = t, fa = prev_v;
                for (int k = 0; k < 80; ++k) {
                    const double mid = 0.5 * (a + b);
                    const double fm = w(mid);
                    if ((fa < 0.0) == (fm < 0.0)) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push_back(0.5 * (a + b));
            }
            prev_t = t;
            prev_v = v;
        }
        return roots;
    }
};

// Boundary-flux measure of a penalized Gibbs measure in the direction h,
// acting on smooth cylindrical test functions through integration by parts:
// integral of d_h phi dnu = - integral of phi dSigma.
inline SignedMeasure sigma_n(std::shared_ptr<const GibbsMeasure> g, Vec h) {
    if (!g->smooth()) throw ConfigError("sigma_n needs a penalized (smooth) measure");
    if (h.size() != g->dim()) throw ConfigError("direction dimension mismatch");
    SignedMeasure sigma;
    sigma.density_base = g;
    auto hp = std::make_shared<Vec>(std::move(h));
    if (g->base() == BaseMeasure::gaussian) {
        const LinearSystem& sys = g->system();
        auto ah = std::make_shared<Vec>(sys.drift() * *hp);
        const double w = sys.h_weight();
        sigma.density_weight = [g, hp, ah, w](const Vec& x) {
            return 2.0 * w * (x.dot(*ah) - g->envelope().gradient(x).dot(*hp));
        };
    } else {
        sigma.density_weight = [g, hp](const Vec& x) {
            return -2.0 * g->envelope().gradient(x).dot(*hp);
        };
    }
    return sigma;
}

// Limit boundary measure of the uniform law on a bounded convex body:
// -(1/|K|) <normal, h> d(surface measure). Facets carry their own rules.
inline SignedMeasure sigma_limit_convex_body(const ConvexBody& body, const Vec& h,
                                             int facet_points = 512) {
    if (!body.bounded()) throw ConfigError("limit boundary measure needs a bounded body");
    if (h.size() != body.dim()) throw ConfigError("direction dimension mismatch");
    const double vol = body.volume();
    SignedMeasure sigma;

    auto add_point_atom = [&](const std::string& label, const Vec& at, double coeff) {
        SignedMeasure::SurfaceFacet f;
        f.label = label;
        f.signed_mass = coeff;
        f.abs_mass = std::abs(coeff);
        const Vec loc = at;
        f.integrate_signed = [loc, coeff](const std::function<double(const Vec&)>& phi) {
            return coeff * phi(loc);
        };
        f.integrate_abs = [loc, coeff](const std::function<double(const Vec&)>& phi) {
            return std::abs(coeff) * phi(loc);
        };
        sigma.facets.push_back(std::move(f));
    };

    auto add_segment = [&](const std::string& label, const Vec& a, const Vec& b,
                           const Vec& normal) {
        const double len = (b - a).norm();
        const double coeff = -normal.dot(h) / vol;
        SignedMeasure::SurfaceFacet f;
        f.label = label;
        f.signed_mass = coeff * len;
        f.abs_mass = std::abs(coeff) * len;
        Rule1D rule = Rule1D::composite(0.0, len, {}, facet_points);
        const Vec dir = (b - a) / len;
        const Vec start = a;
        f.integrate_signed = [rule, start, dir, coeff](
                                 const std::function<double(const Vec&)>& phi) {
            return coeff * rule.integrate([&](double s) { return phi(start + s * dir); });
        };
        f.integrate_abs = [rule, start, dir, coeff](
                              const std::function<double(const Vec&)>& phi) {
            return std::abs(coeff) * rule.integrate([&](double s) { return phi(start + s * dir); });
        };
        sigma.facets.push_back(std::move(f));
    };

    switch (body.kind()) {
        case ConvexBody::Kind::box: {
            if (body.dim() == 1) {
                add_point_atom("lo", vec1(body.lo()[0]), h[0] / vol);
                add_point_atom("hi", vec1(body.hi()[0]), -h[0] / vol);
            } else if (body.dim() == 2) {
                const Vec lo = body.lo(), hi = body.hi();
                add_segment("x_lo", vec2(lo[0], lo[1]), vec2(lo[0], hi[1]), vec2(-1.0, 0.0));
                add_segment("x_hi", vec2(hi[0], lo[1]), vec2(hi[0], hi[1]), vec2(1.0, 0.0));
                add_segment("y_lo", vec2(lo[0], lo[1]), vec2(hi[0], lo[1]), vec2(0.0, -1.0));
                add_segment("y_hi", vec2(lo[0], hi[1]), vec2(hi[0], hi[1]), vec2(0.0, 1.0));
            } else {
                throw ConfigError("facet decomposition implemented for d <= 2");
            }
            break;
        }
        case ConvexBody::Kind::ball: {
            if (body.dim() == 1) {
                const double c = body.center()[0], r = body.radius();
                add_point_atom("lo", vec1(c - r), h[0] / vol);
                add_point_atom("hi", vec1(c + r), -h[0] / vol);
                break;
            }
            if (body.dim() != 2) throw ConfigError("facet decomposition implemented for d <= 2");
            const double r = body.radius();
            const Vec c = body.center();
            const Vec hh = h;
            const double pi = 3.1415926535897932384626433832795;
            Rule1D rule = Rule1D::periodic(2.0 * pi, 4096);
            // |n(th) . h| has kinks where the normal is orthogonal to h;
            // panels for absolute integrals are split there.
            const double ph = std::atan2(hh[1], hh[0]);
            Rule1D abs_rule = Rule1D::composite(ph - 0.5 * pi, ph + 1.5 * pi,
                                                {ph + 0.5 * pi}, facet_points);
            SignedMeasure::SurfaceFacet f;
            f.label = "circle";
            f.signed_mass = 0.0;
            f.abs_mass =
                (r / vol) * abs_rule.integrate([&](double th) {
                    return std::abs(std::cos(th) * hh[0] + std::sin(th) * hh[1]);
                });
            f.integrate_signed = [rule, r, c, hh, vol](
                                     const std::function<double(const Vec&)>& phi) {
                return rule.integrate([&](double th) {
                    const Vec n = vec2(std::cos(th), std::sin(th));
                    return -(n.dot(hh) / vol) * phi(c + r * n) * r;
                });
            };
            f.integrate_abs = [abs_rule, r, c, hh, vol](
                                  const std::function<double(const Vec&)>& phi) {
                return abs_rule.integrate([&](double th) {
                    const Vec n = vec2(std::cos(th), std::sin(th));
                    return std::abs(n.dot(hh) / vol) * phi(c + r * n) * r;
                });
            };
            sigma.facets.push_back(std::move(f));
            break;
        }
        case ConvexBody::Kind::polytope: {
            if (body.dim() != 2) throw ConfigError("facet decomposition implemented for d <= 2");
            const auto& vs = body.vertices();
            if (vs.size() < 3) throw ConfigError("degenerate polytope");
            double orient = 0.0;
            for (std::size_t i = 0; i < vs.size(); ++i) {
                const Vec& a = vs[i];
                const Vec& b = vs[(i + 1) % vs.size()];
                orient += a[0] * b[1] - b[0] * a[1];
            }
            for (std::size_t i = 0; i < vs.size(); ++i) {
                Vec a = vs[i], b = vs[(i + 1) % vs.size()];
                if (orient < 0) std::swap(a, b);
                Vec edge = b - a;
                Vec normal = vec2(edge[1], -edge[0]);
                normal /= normal.norm();
                add_segment("edge" + std::to_string(i), a, b, normal);
            }
            break;
        }
    }
    return sigma;
}

// One-dimensional gaussian-restriction limit on [m, inf): a boundary atom at
// m of mass h rho(m) / Z plus the interior drift density -(h x / Q) dnu.
inline SignedMeasure sigma_limit_halfline(std::shared_ptr<const GibbsMeasure> g, double h) {
    if (g->dim() != 1 || g->base() != BaseMeasure::gaussian || g->smooth())
        throw ConfigError("halfline limit measure needs a 1D gaussian-restriction law");
    const auto& body = *g->limit_constraint().body();
    if (body.kind() != ConvexBody::Kind::box || !std::isinf(body.hi()[0]))
        throw ConfigError("halfline limit measure needs the body [m, inf)");
    const double m = body.lo()[0];
    const double c = g->system().stationary_cov()(0, 0);
    const double atom = h * normal_pdf(m, std::sqrt(c)) / g->z();

    SignedMeasure sigma;
    sigma.density_base = g;
    sigma.density_weight = [h, c](const Vec& x) { return -h * x[0] / c; };
    SignedMeasure::SurfaceFacet f;
    f.label = "boundary";
    f.signed_mass = atom;
    f.abs_mass = std::abs(atom);
    const Vec at = vec1(m);
    f.integrate_signed = [at, atom](const std::function<double(const Vec&)>& phi) {
        return atom * phi(at);
    };
    f.integrate_abs = [at, atom](const std::function<double(const Vec&)>& phi) {
        return std::abs(atom) * phi(at);
    };
    sigma.facets.push_back(std::move(f));
    return sigma;
}

// Residual of the integration-by-parts identity for one test function:
// integral of d_h phi dnu + integral of phi dSigma.
inline double ibp_residual(const GibbsMeasure& g, const SignedMeasure& sigma,
                           const TestFunction& phi, const Vec& h) {
    if (!phi.grad) throw ConfigError("test function needs a gradient");
    const double lhs = g.integrate([&](const Vec& x) { return phi.grad(x).dot(h); });
    const double rhs = sigma.integrate(phi.f);
    return lhs + rhs;
}

// Rescale a direction so that <-2Ah, h>_H = 1.
inline Vec tv_normalize_direction(const LinearSystem& sys, Vec h) {
    const double s = sys.h_inner(Vec(-2.0 * (sys.drift() * h)), h);
    if (!(s > 0)) throw ConfigError("direction must be nontrivial");
    return h / std::sqrt(s);
}

// Total variation of sigma_n via scalar minimization along the direction:
//   gaussian base: (1/Z) sqrt(2/pi) E_y exp(-min_t [2V(ht+y) + t^2/2]),
//                  y ~ N(0, Q - h (x) h), with <-2Ah,h>_H = 1;
//   lebesgue base: (2/Z) integral over the orthogonal hyperplane of
//                  exp(-min_t 2V(ht+y)) dy, with |h| = 1.
// Works for penalized and limit potentials alike.
inline double tv_by_min_formula(const GibbsMeasure& g, const Vec& h, int outer_points = 4096) {
    const int d = g.dim();
    if (h.size() != d) throw ConfigError("direction dimension mismatch");
    auto objective_base = [&](const Vec& x) { return g.tilt(x); };

    if (g.base() == BaseMeasure::gaussian) {
        const LinearSystem& sys = g.system();
        if (std::abs(sys.h_weight() - 1.0) > 1e-12)
            throw ConfigError("minimization formula implemented for unit-weight systems");
        const double norm_check = sys.h_inner(Vec(-2.0 * (sys.drift() * h)), h);
        if (std::abs(norm_check - 1.0) > 1e-8)
            throw ConfigError("direction must satisfy <-2Ah,h>_H = 1");
        const Mat s = sys.q() - h * h.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(s);
        std::vector<std::pair<double, Vec>> dirs;
        const double tol = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        for (int i = 0; i < d; ++i)
            if (es.eigenvalues()[i] > tol)
                dirs.emplace_back(es.eigenvalues()[i], Vec(es.eigenvectors().col(i)));
        if (dirs.size() > 2)
            throw ConfigError("minimization formula implemented for d <= 3");

        auto inner = [&](const Vec& y) {
            const auto mr = minimize_convex(
                [&](double t) { return objective_base(y + t * h) + 0.5 * t * t; });
            return std::exp(-mr.value);
        };
        const double pref = std::sqrt(2.0 / 3.1415926535897932384626433832795) / g.z();
        if (dirs.empty()) return pref * inner(Vec::Zero(d));
        if (dirs.size() == 1) {
            const double sd = std::sqrt(dirs[0].first);
            const Vec e = dirs[0].second;
            // Align outer panels with kink loci projected onto the direction.
            std::vector<double> cuts;
            for (int axis = 0; axis < d; ++axis)
                if (std::abs(e[axis]) > 1e-12)
                    for (double c : g.smooth() ? g.envelope().axis_breakpoints(axis)
                                               : g.limit_constraint().axis_breakpoints(axis))
                        cuts.push_back(c / e[axis]);
            Rule1D rule = Rule1D::composite(-8.0 * sd, 8.0 * sd, cuts, outer_points);
            return pref * rule.integrate([&](double s1) {
                return normal_pdf(s1, sd) * inner(s1 * e);
            });
        }
        const double sd0 = std::sqrt(dirs[0].first), sd1 = std::sqrt(dirs[1].first);
        const Vec e0 = dirs[0].second, e1 = dirs[1].second;
        Rule1D r0 = Rule1D::composite(-8.0 * sd0, 8.0 * sd0, {}, outer_points);
        Rule1D r1 = Rule1D::composite(-8.0 * sd1, 8.0 * sd1, {}, outer_points);
        KahanSum acc;
        for (std::size_t i = 0; i < r0.x.size(); ++i)
            for (std::size_t j = 0; j < r1.x.size(); ++j)
                acc.add(r0.w[i] * r1.w[j] * normal_pdf(r0.x[i], sd0) *
                        normal_pdf(r1.x[j], sd1) * inner(r0.x[i] * e0 + r1.x[j] * e1));
        return pref * acc.value();
    }

    // Lebesgue base.
    if (std::abs(h.norm() - 1.0) > 1e-8)
        throw ConfigError("direction must be unit length for the lebesgue variant");
    auto inner = [&](const Vec& y) {
        const auto mr = minimize_convex([&](double t) { return objective_base(y + t * h); });
        return std::exp(-mr.value);
    };
    const double pref = 2.0 / g.z();
    if (d == 1) return pref * inner(Vec::Zero(1));
    if (d != 2) throw ConfigError("lebesgue minimization formula implemented for d <= 2");

    const Vec e = vec2(-h[1], h[0]);
    const auto [lo, hi] = g.smooth()
                              ? g.envelope().base().support_box(
                                    g.envelope().penalty() * g.envelope().h_weight(), 41.0)
                              : g.limit_constraint().support_box(kInf, 41.0);
    double smin = kInf, smax = -kInf;
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy) {
            const double s = (cx ? hi[0] : lo[0]) * e[0] + (cy ? hi[1] : lo[1]) * e[1];
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
    std::vector<double> cuts;
    for (int axis = 0; axis < 2; ++axis)
        if (std::abs(e[axis]) > 1e-12)
            for (double c : g.smooth() ? g.envelope().axis_breakpoints(axis)
                                       : g.limit_constraint().axis_breakpoints(axis))
                cuts.push_back(c / e[axis]);
    Rule1D rule = Rule1D::composite(smin, smax, cuts, outer_points);
    return pref * rule.integrate([&](double s) { return inner(s * e); });
}

struct WeakReportRow {
    double penalty = 0.0;
    std::string quantity;
    double value = 0.0;
};

// Weak-convergence diagnostics: expectation gaps to the limit law and tail
// masses of the boundary-flux measures (a tightness profile over n).
inline std::vector<WeakReportRow> weak_convergence_report(
    const std::vector<std::shared_ptr<const GibbsMeasure>>& sequence, const GibbsMeasure& limit,
    const std::vector<TestFunction>& phis, const std::vector<Vec>& directions,
    const std::vector<double>& radii) {
    std::vector<WeakReportRow> rows;
    std::vector<double> limit_values;
    for (const auto& phi : phis) limit_values.push_back(limit.integrate(phi.f));
    for (const auto& g : sequence) {
        const double n = g->penalty();
        for (std::size_t i = 0; i < phis.size(); ++i) {
            const double v = g->integrate(phis[i].f);
            rows.push_back({n, "gap[" + phis[i].name + "]", std::abs(v - limit_values[i])});
        }
        for (const auto& h : directions) {
            const SignedMeasure s = sigma_n(g, h);
            for (double r : radii) {
                rows.push_back({n, "sigma_tail[r=" + std::to_string(r) + "]",
                                s.density_tail_mass(r)});
            }
        }
    }
    return rows;
}

}  // namespace moyo
