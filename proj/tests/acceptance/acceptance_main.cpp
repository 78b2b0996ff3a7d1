// Acceptance gate: verifies the numbered release criteria end to end and
// prints one pass/fail line per criterion. Exit status is the number of
// failed criteria, so any nonzero exit marks a red gate.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "../helpers.hpp"
#include "moyo/experiments.hpp"
#include "moyo/heat_grid.hpp"

using namespace moyo;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

struct Clause {
    bool ok = true;
    std::string detail;
    void add(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
    void require(bool pass, const std::string& what) {
        if (!pass) {
            ok = false;
            add(what);
        }
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
}

void run_criterion(int idx, const char* name, double budget_s,
                   const std::function<Clause()>& fn, int& failed) {
    const auto t0 = std::chrono::steady_clock::now();
    Clause c;
    try {
        c = fn();
    } catch (const std::exception& e) {
        c.ok = false;
        c.add(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0)
        c.require(secs < budget_s,
                  "runtime " + fmt(secs) + "s exceeds the " + fmt(budget_s) + "s budget");
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", idx, name, secs,
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failed;
}

// -----------------------------------------------------------------------
// 1. Envelope family: monotone in the penalty on a dense grid, analytic
//    gradients against central differences, and the 2n Lipschitz bound.
// -----------------------------------------------------------------------

Clause criterion_envelopes() {
    Clause c;
    std::vector<ConvexPotential> family;
    family.push_back(indicator_interval(-0.5, 2.0));
    family.push_back(indicator_box(vec2(-1.0, 0.0), vec2(1.0, 2.0)));
    family.push_back(indicator_ball(vec2(0.5, -0.5), 1.5));
    family.push_back(indicator_orthant(2, 0.3));
    family.push_back(ConvexPotential::quadratic(vec1(1.0), vec1(0.0)));
    family.push_back(ConvexPotential::quadratic(vec2(0.5, 2.0), vec2(0.2, -0.3)));

    // adjacent rungs include literal n -> n+1 steps at several scales
    const std::vector<double> ladder = {1.0, 2.0, 3.0, 4.0, 8.0, 9.0, 64.0, 65.0, 1024.0, 1025.0};
    long grid_checks = 0;
    bool monotone = true;
    double worst_fd = 0.0, worst_lip = 0.0;
    for (const auto& u : family) {
        std::vector<Vec> grid;
        if (u.dim() == 1) {
            for (int i = 0; i < 1000; ++i) grid.push_back(vec1(-3.0 + 6.0 * i / 999.0));
        } else {
            for (int i = 0; i < 32; ++i)
                for (int k = 0; k < 32; ++k)
                    grid.push_back(vec2(-3.0 + 6.0 * i / 31.0, -3.0 + 6.0 * k / 31.0));
        }
        std::vector<YosidaEnvelope> envs;
        envs.reserve(ladder.size());
        for (double n : ladder) envs.emplace_back(u, n);
        for (const Vec& x : grid) {
            double prev = -std::numeric_limits<double>::infinity();
            for (const auto& env : envs) {
                const double v = env.value(x);
                if (v < prev) monotone = false;
                prev = v;
                ++grid_checks;
            }
        }

        for (double n : {6.0, 24.0}) {
            const YosidaEnvelope env(u, n);
            for (const Vec& x : testutil::sample_points(u.dim(), 200, 57, 2.0)) {
                const Vec g = env.gradient(x);
                const Vec fd = testutil::fd_gradient(env, x);
                worst_fd = std::max(worst_fd,
                                    (g - fd).lpNorm<Eigen::Infinity>() / (1.0 + g.norm()));
            }
        }

        for (double n : {1.0, 512.0, 4096.0}) {
            const YosidaEnvelope env(u, n);
            const auto pts = testutil::sample_points(u.dim(), 20000, 71, 2.5);
            for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
                const double den = (pts[i] - pts[i + 1]).norm();
                if (den <= 0) continue;
                const double num = (env.gradient(pts[i]) - env.gradient(pts[i + 1])).norm();
                worst_lip = std::max(worst_lip, num / (2.0 * n * den));
            }
        }
    }
    c.require(monotone, "envelope values not monotone in the penalty");
    c.require(worst_fd <= 1e-5,
              "gradient vs central difference deviation " + fmt(worst_fd) + " > 1e-5");
    c.require(worst_lip <= 1.0 + 1e-9,
              "gradient Lipschitz ratio " + fmt(worst_lip) + " exceeds 2n(1+1e-9)");
    c.add(std::to_string(grid_checks) + " grid values monotone, fd dev " + fmt(worst_fd) +
          ", lipschitz ratio " + fmt(worst_lip));
    return c;
}

// -----------------------------------------------------------------------
// 2. Integration by parts: residuals under quadrature for the shipped
//    1D/2D (potential, phi, direction) set, including the limit laws.
// -----------------------------------------------------------------------

Clause criterion_ibp() {
    Clause c;
    double worst = 0.0;
    int combos = 0;
    auto check = [&](const GibbsMeasure& g, const SignedMeasure& sigma, const TestFunction& phi,
                     const Vec& h) {
        worst = std::max(worst, std::abs(ibp_residual(g, sigma, phi, h)));
        ++combos;
    };

    // penalized gaussian laws in one dimension
    const Vec h1 = vec1(0.8);
    const std::vector<TestFunction> phis1 = {tf_cosine(vec1(0.7)), tf_coordinate_clipped(0, 2.0),
                                             tf_smooth_step(0, 0.4, 0.5)};
    auto smooth1 = [](YosidaEnvelope env) {
        return std::make_shared<GibbsMeasure>(
            GibbsMeasure::gaussian_base(ou_system(0.5), std::move(env)));
    };
    const std::vector<std::shared_ptr<const GibbsMeasure>> gs1 = {
        smooth1(YosidaEnvelope(indicator_halfline(0.0), 4.0)),
        smooth1(YosidaEnvelope(indicator_halfline(0.0), 1024.0)),
        smooth1(YosidaEnvelope(indicator_interval(-2.0, 2.0), 64.0)),
        smooth1(YosidaEnvelope(quadratic_iso(1, 1.0, vec1(0.3)), 16.0)),
        smooth1(YosidaEnvelope(ConvexPotential::sum({quadratic_iso(1, 0.5, vec1(0.2)),
                                                     indicator_halfline(-1.0)}),
                               64.0)),
    };
    for (const auto& g : gs1) {
        const SignedMeasure sigma = sigma_n(g, h1);
        for (const auto& phi : phis1) check(*g, sigma, phi, h1);
    }

    // two dimensions: gaussian box and disc, lebesgue box
    const std::vector<TestFunction> phis2 = {tf_cos_product(vec2(0.6, 0.0), vec2(0.0, 0.9)),
                                             tf_cosine(vec2(0.5, -0.3))};
    const std::vector<Vec> dirs2 = {vec2(0.7, -0.4), vec2(1.0, 0.0)};
    const std::vector<std::shared_ptr<const GibbsMeasure>> gs2 = {
        std::make_shared<GibbsMeasure>(GibbsMeasure::gaussian_base(
            LinearSystem::diagonal(vec2(-0.5, -1.0)),
            YosidaEnvelope(indicator_box(vec2(0.0, -1.0), vec2(2.0, 1.0)), 16.0))),
        std::make_shared<GibbsMeasure>(GibbsMeasure::gaussian_base(
            LinearSystem::diagonal(vec2(-0.5, -0.5)),
            YosidaEnvelope(indicator_ball(vec2(0.0, 0.0), 1.5), 32.0))),
        std::make_shared<GibbsMeasure>(GibbsMeasure::lebesgue_base(
            YosidaEnvelope(indicator_box(vec2(-2.0, -1.5), vec2(2.0, 1.5)), 64.0))),
    };
    for (const auto& g : gs2)
        for (const Vec& h : dirs2) {
            const SignedMeasure sigma = sigma_n(g, h);
            for (const auto& phi : phis2) check(*g, sigma, phi, h);
        }

    // divergence-theorem limits: interval, box, disc
    {
        const GibbsMeasure g = GibbsMeasure::lebesgue_limit(indicator_interval(-2.0, 2.0));
        const SignedMeasure sigma =
            sigma_limit_convex_body(*g.limit_constraint().body(), vec1(0.8));
        check(g, sigma, tf_cosine(vec1(0.7)), vec1(0.8));
    }
    const Vec h2 = vec2(0.6, 0.8);
    {
        const GibbsMeasure g =
            GibbsMeasure::lebesgue_limit(indicator_box(vec2(-2.0, -1.5), vec2(2.0, 1.5)));
        const SignedMeasure sigma = sigma_limit_convex_body(*g.limit_constraint().body(), h2);
        for (const auto& phi : phis2) check(g, sigma, phi, h2);
    }
    {
        const GibbsMeasure g = GibbsMeasure::lebesgue_limit(indicator_ball(vec2(0.0, 0.0), 1.5));
        const SignedMeasure sigma = sigma_limit_convex_body(*g.limit_constraint().body(), h2);
        for (const auto& phi : phis2) check(g, sigma, phi, h2);
    }

    // gaussian half-line limit: boundary atom plus drift density
    {
        auto g = std::make_shared<GibbsMeasure>(
            GibbsMeasure::gaussian_limit(ou_system(0.5), indicator_halfline(0.0)));
        const SignedMeasure sigma = sigma_limit_halfline(g, 0.8);
        for (const auto& phi : phis1) check(*g, sigma, phi, vec1(0.8));
        auto gm = std::make_shared<GibbsMeasure>(
            GibbsMeasure::gaussian_limit(ou_system(0.5), indicator_halfline(0.5)));
        check(*gm, sigma_limit_halfline(gm, 1.0), tf_cosine(vec1(0.9)), vec1(1.0));
    }

    c.require(worst <= 1e-6, "worst |ibp residual| " + fmt(worst) + " > 1e-6");
    c.add(std::to_string(combos) + " combinations, worst |residual| " + fmt(worst));
    return c;
}

// -----------------------------------------------------------------------
// 3. Total-variation formula: closed forms, direct quadrature agreement,
//    monotonicity in the penalty, and facet-formula convergence at n=2^12.
// -----------------------------------------------------------------------

Clause criterion_total_variation() {
    Clause c;
    const double root2pi = std::sqrt(2.0 / kPi);

    const GibbsMeasure gf = GibbsMeasure::gaussian_base(
        ou_system(0.5), YosidaEnvelope(ConvexPotential::zero(1), 4.0));
    const double tv_free = tv_by_min_formula(gf, tv_normalize_direction(gf.system(), vec1(3.0)));
    c.require(std::abs(tv_free - root2pi) <= 1e-6,
              "free gaussian tv " + fmt(tv_free) + " != sqrt(2/pi)");

    auto gl = std::make_shared<GibbsMeasure>(
        GibbsMeasure::gaussian_limit(ou_system(0.5), indicator_halfline(0.0)));
    const double tv_lim =
        tv_by_min_formula(*gl, tv_normalize_direction(gl->system(), vec1(1.0)));
    c.require(std::abs(tv_lim - 2.0 * root2pi) <= 1e-6,
              "half-line limit tv " + fmt(tv_lim) + " != 2 sqrt(2/pi)");

    double prev = 0.0, worst_direct = 0.0;
    bool nondecreasing = true;
    for (double n : {4.0, 16.0, 64.0, 256.0, 1024.0}) {
        auto g = std::make_shared<GibbsMeasure>(GibbsMeasure::gaussian_base(
            ou_system(0.5), YosidaEnvelope(indicator_halfline(0.0), n)));
        const double tv = tv_by_min_formula(*g, vec1(1.0));
        worst_direct = std::max(worst_direct, std::abs(tv - sigma_n(g, vec1(1.0)).total_variation()));
        if (tv < prev) nondecreasing = false;
        prev = tv;
    }
    {
        auto g = std::make_shared<GibbsMeasure>(GibbsMeasure::gaussian_base(
            LinearSystem::diagonal(vec2(-0.5, -1.0)),
            YosidaEnvelope(indicator_box(vec2(0.0, -1.0), vec2(2.0, 1.0)), 16.0)));
        const Vec h = tv_normalize_direction(g->system(), vec2(1.0, 0.0));
        worst_direct = std::max(
            worst_direct, std::abs(tv_by_min_formula(*g, h) - sigma_n(g, h).total_variation()));
    }
    c.require(worst_direct <= 1e-6,
              "min-formula vs direct quadrature gap " + fmt(worst_direct) + " > 1e-6");
    c.require(nondecreasing, "total variation decreases along the penalty ladder");

    const double n_facet = 4096.0;
    const GibbsMeasure gi =
        GibbsMeasure::lebesgue_base(YosidaEnvelope(indicator_interval(-2.0, 2.0), n_facet));
    const double tv_interval = tv_by_min_formula(gi, vec1(1.0));
    const double facet_interval =
        sigma_limit_convex_body(ConvexBody::box(vec1(-2.0), vec1(2.0)), vec1(1.0))
            .total_variation();
    const GibbsMeasure gb = GibbsMeasure::lebesgue_base(
        YosidaEnvelope(indicator_box(vec2(-2.0, -1.5), vec2(2.0, 1.5)), n_facet));
    const double tv_box = tv_by_min_formula(gb, vec2(1.0, 0.0));
    const double facet_box =
        sigma_limit_convex_body(ConvexBody::box(vec2(-2.0, -1.5), vec2(2.0, 1.5)),
                                vec2(1.0, 0.0))
            .total_variation();
    c.require(std::abs(tv_interval - facet_interval) <= 1e-2,
              "interval facet gap " + fmt(std::abs(tv_interval - facet_interval)) + " > 1e-2");
    c.require(std::abs(tv_box - facet_box) <= 1e-2,
              "box facet gap " + fmt(std::abs(tv_box - facet_box)) + " > 1e-2");
    c.add("free " + fmt(tv_free) + ", limit " + fmt(tv_lim) + ", direct gap " +
          fmt(worst_direct) + ", facet gaps " + fmt(std::abs(tv_interval - facet_interval)) +
          "/" + fmt(std::abs(tv_box - facet_box)));
    return c;
}

// -----------------------------------------------------------------------
// 4. Synchronous-coupling contraction across all shipped system kinds and
//    both schemes: worst ratio <= exp(-omega t)(1 + 5 dt omega).
// -----------------------------------------------------------------------

Clause criterion_contraction() {
    Clause c;
    double worst = 0.0;
    auto run = [&](const LinearSystem& sys, const YosidaEnvelope& env, Scheme scheme, double dt,
                   std::vector<double> times, const Vec& x0, const Vec& y0, const char* label) {
        IntegratorSpec spec;
        spec.scheme = scheme;
        spec.dt = dt;
        spec.record_times = std::move(times);
        const ContractionReport rep = coupled_contraction(sys, env, spec, x0, y0, 1000, 777);
        for (std::size_t i = 0; i < rep.times.size(); ++i)
            worst = std::max(worst, rep.max_ratio[i] / rep.bound[i]);
        c.require(rep.pass, std::string(label) + " exceeds the contraction bound");
    };

    const LinearSystem ou = ou_system(1.0);
    const YosidaEnvelope env1(indicator_halfline(0.0), 64.0);
    run(ou, env1, Scheme::explicit_euler, 1.0 / 2048.0, {0.25, 1.0}, vec1(1.2), vec1(-0.6),
        "ou/euler");
    run(ou, env1, Scheme::splitting_prox, 1.0 / 2048.0, {0.25, 1.0}, vec1(1.2), vec1(-0.6),
        "ou/splitting");

    Vec evs(3);
    evs << -0.5, -2.0, -8.0;
    const LinearSystem diag = LinearSystem::diagonal(evs);
    const YosidaEnvelope env3(indicator_orthant(3, 0.3), 64.0);
    Vec x3(3), y3(3);
    x3 << 1.5, 0.8, -0.4;
    y3 << 0.2, -0.6, 0.9;
    run(diag, env3, Scheme::explicit_euler, 1.0 / 2048.0, {0.25, 1.0}, x3, y3, "diagonal/euler");
    run(diag, env3, Scheme::splitting_prox, 1.0 / 2048.0, {0.25, 1.0}, x3, y3,
        "diagonal/splitting");

    const HeatGridSystem hg = build_heat_grid(64, 0.1);
    const YosidaEnvelope envh = heat_grid_envelope(hg, 16.0);
    Vec xh(64);
    for (int i = 0; i < 64; ++i) xh[i] = std::sin(kPi * (i + 1) / 65.0);
    const Vec yh = Vec::Zero(64);
    run(hg.system, envh, Scheme::splitting_prox, 1.0 / 1024.0, {0.0625, 0.25}, xh, yh,
        "heat/splitting");
    run(hg.system, envh, Scheme::explicit_euler, 1.0 / 32768.0, {0.0625, 0.125}, xh, yh,
        "heat/euler");

    c.add("worst ratio/bound " + fmt(worst) + " over 6 system/scheme pairs, 1000 paths each");
    return c;
}

// -----------------------------------------------------------------------
// 5. Semigroup convergence on the half-line: gaps to the reflected oracle
//    shrink along the penalty ladder and the final gap is statistically
//    zero; includes the two-time product functional.
// -----------------------------------------------------------------------

Clause criterion_semigroup_convergence() {
    Clause c;
    const LinearSystem sys = ou_system(0.5);
    const ConvexPotential constraint = indicator_halfline(0.0);
    const std::vector<double> penalties = {4.0, 16.0, 64.0, 256.0, 1024.0};
    const std::vector<double> times = {0.25, 1.0};
    const double dt = 1.0 / 2048.0;
    const Vec x0 = vec1(1.2);
    const int paths = 100000;
    const std::uint64_t seed = 3025;

    // A step may not rise by more than 4 combined standard errors; the final
    // gap must be within 4 of its standard errors of zero; and whenever the
    // first gap is statistically resolved the last must lie strictly below it.
    auto audit = [&](const std::string& label, const std::vector<const GapRow*>& series) {
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            const double slack =
                4.0 * std::hypot(series[i]->gap_se, series[i + 1]->gap_se);
            c.require(series[i + 1]->gap <= series[i]->gap + slack,
                      label + ": gap rises at n=" + fmt(series[i + 1]->penalty));
        }
        const GapRow* first = series.front();
        const GapRow* last = series.back();
        c.require(last->gap <= 4.0 * last->gap_se,
                  label + ": final gap " + fmt(last->gap) + " > 4se " +
                      fmt(4.0 * last->gap_se));
        if (first->gap > 4.0 * first->gap_se)
            c.require(last->gap < first->gap, label + ": no overall decrease");
        c.add(label + " gap " + fmt(first->gap) + " -> " + fmt(last->gap));
    };

    const std::vector<std::pair<std::string, TestFunction>> phis = {
        {"cos", tf_cosine(vec1(0.6))}, {"clip", tf_coordinate_clipped(0, 2.0)}};
    for (const auto& [name, phi] : phis) {
        const auto rows =
            semigroup_convergence_study(sys, constraint, penalties, Scheme::splitting_prox, dt,
                                        x0, times, phi, paths, seed, 1, paths);
        for (std::size_t t = 0; t < times.size(); ++t) {
            std::vector<const GapRow*> series;
            for (std::size_t i = t; i < rows.size(); i += times.size())
                series.push_back(&rows[i]);
            audit(name + " t=" + fmt(times[t]), series);
        }
    }
    {
        const TestFunction clip = tf_coordinate_clipped(0, 2.0);
        const auto rows =
            two_time_product_study(sys, constraint, penalties, Scheme::splitting_prox, dt, x0,
                                   0.25, 1.0, clip, clip, paths, seed, 1, paths);
        std::vector<const GapRow*> series;
        for (const auto& r : rows) series.push_back(&r);
        audit("clip(t1)*clip(t2)", series);
    }
    return c;
}

// -----------------------------------------------------------------------
// 6. Stationary regime: square-root modulus of increments against the
//    exact eigen-decomposition bound, and the penalized stationary law
//    against the reflected oracle at n=2^10.
// -----------------------------------------------------------------------

Clause criterion_stationary() {
    Clause c;
    const std::vector<double> taus = {1.0 / 128.0, 1.0 / 32.0, 1.0 / 8.0, 0.5, 1.0};
    const double dt = 1.0 / 4096.0;
    double worst_margin = -1e300;  // max of (ratio - bound) / (4 se)
    auto absorb = [&](const char* label, const std::vector<IncrementRow>& rows) {
        for (const auto& r : rows) {
            if (r.std_error > 0)
                worst_margin = std::max(worst_margin, (r.ratio - r.bound) / (4.0 * r.std_error));
            c.require(r.pass, std::string(label) + ": ratio " + fmt(r.ratio) +
                                  " above bound " + fmt(r.bound) + " at lag " + fmt(r.tau));
        }
    };

    {
        const LinearSystem sys = ou_system(1.0);
        const YosidaEnvelope flat(ConvexPotential::zero(1), 1.0);
        const Mat starts = sample_base_gaussian(sys, 4000, 611);
        absorb("free 1D", stationary_increment_check(sys, flat, Scheme::splitting_prox, dt,
                                                     taus, starts, 4000, 612));

        const YosidaEnvelope env(indicator_halfline(0.0), 1024.0);
        const GibbsMeasure g = GibbsMeasure::gaussian_base(sys, env);
        const Mat gstarts = sample_gibbs(g, 2000, 613);
        absorb("penalized 1D", stationary_increment_check(sys, env, Scheme::splitting_prox, dt,
                                                          taus, gstarts, 2000, 614));
    }
    {
        const HeatGridSystem hg = build_heat_grid(64, 0.1);
        LinearSystem sys = hg.system;
        sys.set_norm_weights(sobolev_mode_weights(sys));
        const YosidaEnvelope flat(ConvexPotential::zero(64), 1.0, sys.h_weight());
        const Mat starts = sample_base_gaussian(sys, 256, 615);
        absorb("heat d=64", stationary_increment_check(sys, flat, Scheme::splitting_prox, dt,
                                                       taus, starts, 256, 616));
    }
    c.add("worst increment margin " + fmt(worst_margin) + " (<=1 passes)");

    // stationary law vs the reflected oracle at n = 2^10: relax from a fixed
    // start for six relaxation times, then compare means of three functionals
    {
        const LinearSystem sys = ou_system(1.0);
        const ConvexPotential constraint = indicator_halfline(0.0);
        const YosidaEnvelope env(constraint, 1024.0);
        IntegratorSpec spec;
        spec.scheme = Scheme::splitting_prox;
        spec.dt = 1.0 / 4096.0;
        spec.record_times = {6.0};
        const TrajectoryBatch pen = simulate_batch(sys, env, spec, vec1(0.6), 1000, 617);
        const TrajectoryBatch orc =
            simulate_reflected_oracle(sys, constraint, spec, vec1(0.6), 1000, 618);
        const std::vector<std::pair<std::string, std::function<double(const Vec&)>>> fns = {
            {"x", [](const Vec& x) { return x[0]; }},
            {"x^2", [](const Vec& x) { return x[0] * x[0]; }},
            {"cos(0.8x)", [](const Vec& x) { return std::cos(0.8 * x[0]); }}};
        std::string gaps;
        for (const auto& [name, f] : fns) {
            const auto mp = pen.functional_mean(0, f);
            const auto mo = orc.functional_mean(0, f);
            const double gap = std::abs(mp.mean - mo.mean);
            const double lim = 4.0 * std::hypot(mp.std_error, mo.std_error);
            c.require(gap < lim, "stationary law gap for " + name + ": " + fmt(gap) +
                                     " >= 4se " + fmt(lim));
            gaps += (gaps.empty() ? "" : ", ") + name + " " + fmt(gap) + "/" + fmt(lim);
        }
        c.add("law gaps (vs 4se): " + gaps);
    }
    return c;
}

// -----------------------------------------------------------------------
// 7. Reflected heat-equation demonstration on the d=64 grid.
// -----------------------------------------------------------------------

Clause criterion_spde() {
    Clause c;
    const HeatGridSystem hg = build_heat_grid(64, 0.1);
    const double alpha = hg.grid.barrier;
    IntegratorSpec spec;
    spec.scheme = Scheme::splitting_prox;
    spec.dt = 1.0 / 1024.0;
    spec.record_times = {0.5};
    const int paths = 64;

    auto sweep = [&](double n) {
        const YosidaEnvelope env = heat_grid_envelope(hg, n);
        const TrajectoryBatch batch =
            simulate_batch(hg.system, env, spec, Vec(Vec::Zero(64)), paths, 4242);
        double min_all = 0.0;
        KahanSum depth;
        for (int p = 0; p < paths; ++p) {
            min_all = std::min(min_all, batch.min_component[p]);
            depth.add(std::max(0.0, -alpha - batch.min_component[p]));
        }
        return std::pair<double, double>(min_all, depth.value() / paths);
    };
    const auto [min16, pen16] = sweep(16.0);
    const auto [min256, pen256] = sweep(256.0);

    c.require(pen256 < pen16, "mean penetration not strictly decreasing: " + fmt(pen16) +
                                  " -> " + fmt(pen256));
    c.require(min256 >= -alpha - 0.2, "space-time min " + fmt(min256) +
                                          " in the n=256 run below the band " +
                                          fmt(-alpha - 0.2));

    // free-field covariance against the Lyapunov solution: exact stationary
    // draws pushed through one exact transition step, entrywise 3 sigma
    const int cov_paths = 4000;
    const double t_cov = 0.25;
    const int d = 64;
    const Mat l_cov = Eigen::LLT<Mat>(hg.system.transition_cov(t_cov)).matrixL();
    Mat ys(cov_paths, d);
    for (int p = 0; p < cov_paths; ++p) {
        rng::Stream init(4243, rng::kTagInitialState, static_cast<std::uint64_t>(p));
        rng::Stream noise(4243, rng::kTagMonteCarlo, static_cast<std::uint64_t>(p));
        Vec z(d);
        for (int i = 0; i < d; ++i) z[i] = noise.gaussian();
        ys.row(p) =
            (hg.system.semigroup_action(t_cov, hg.system.sample_stationary(init)) + l_cov * z)
                .transpose();
    }
    Vec mean = Vec::Zero(d);
    for (int p = 0; p < cov_paths; ++p) mean += ys.row(p).transpose();
    mean /= cov_paths;
    Mat chat = Mat::Zero(d, d);
    for (int p = 0; p < cov_paths; ++p) {
        const Vec v = ys.row(p).transpose() - mean;
        chat += v * v.transpose();
    }
    chat /= cov_paths - 1;
    const Mat cex = hg.system.stationary_cov();
    double worst = 0.0;
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const double se =
                std::sqrt((cex(i, i) * cex(k, k) + cex(i, k) * cex(i, k)) / cov_paths);
            worst = std::max(worst, std::abs(chat(i, k) - cex(i, k)) / se);
        }
    c.require(worst <= 3.0, "covariance deviates by " + fmt(worst) + " sigma (band 3)");
    c.add("min " + fmt(min16) + "/" + fmt(min256) + ", penetration " + fmt(pen16) + "/" +
          fmt(pen256) + ", cov dev " + fmt(worst) + " sigma");
    return c;
}

// -----------------------------------------------------------------------
// 8. Determinism: every experiment writes byte-identical CSVs (and
//    manifests) when rerun with a different worker count.
// -----------------------------------------------------------------------

Clause criterion_determinism() {
    Clause c;
    const fs::path base = fs::temp_directory_path() / "moyo_acceptance_det";
    std::error_code ec;
    fs::remove_all(base, ec);

    const std::vector<json> cfgs = {
        json{{"experiment", "yosida_scan"},
             {"master_seed", 5},
             {"potential", {{"kind", "box"}, {"lo", {-1.0, -0.5}}, {"hi", {1.0, 0.5}}}},
             {"penalties", {1.0, 4.0, 16.0}},
             {"grid", {{"lo", {-2.0, -1.5}}, {"hi", {2.0, 1.5}}, {"points", 9}}}},
        json{{"experiment", "simulate"},
             {"system", {{"kind", "ou"}, {"omega", 1.0}}},
             {"potential", {{"kind", "halfline"}, {"lo", 0.0}}},
             {"penalty", 64.0},
             {"integrator",
              {{"scheme", "splitting_prox"},
               {"dt", 0.0078125},
               {"record_times", {0.0, 0.25, 0.5}}}},
             {"mc", {{"count", 16}, {"master_seed", 11}}},
             {"x0", 0.5}},
        json{{"experiment", "semigroup_converge"},
             {"system", {{"kind", "ou"}, {"omega", 1.0}}},
             {"potential", {{"kind", "halfline"}, {"lo", 0.0}}},
             {"penalties", {8.0, 64.0}},
             {"integrator", {{"scheme", "splitting_prox"}, {"dt", 0.015625}}},
             {"times", {0.5}},
             {"phis", {"clip:0:2"}},
             {"x0", 0.4},
             {"mc", {{"count", 600}, {"master_seed", 21}}},
             {"assert_final_gap", false}},
        json{{"experiment", "ibp_check"},
             {"master_seed", 7},
             {"system", {{"kind", "ou"}, {"omega", 0.5}}},
             {"potential", {{"kind", "halfline"}, {"lo", 0.0}}},
             {"penalty", 16.0},
             {"phis", {"cos:0.7", "clip:0:2"}},
             {"directions", {{0.8}}}},
        json{{"experiment", "tv_formula"},
             {"master_seed", 3},
             {"system", {{"kind", "ou"}, {"omega", 0.5}}},
             {"potential", {{"kind", "zero"}}},
             {"penalties", {1.0}},
             {"direction", {1.0}}},
        json{{"experiment", "spde_reflect"},
             {"system", {{"kind", "heat_grid"}, {"dim", 16}, {"barrier", 0.1}}},
             {"penalties", {16.0, 64.0}},
             {"integrator", {{"scheme", "splitting_prox"}, {"dt", 0.00390625}, {"t_final", 0.25}}},
             {"mc", {{"count", 16}, {"master_seed", 13}}},
             {"cov_paths", 400}},
        json{{"experiment", "stationary_moments"},
             {"system", {{"kind", "diagonal"}, {"eigenvalues", {-0.5, -2.0}}}},
             {"integrator", {{"scheme", "splitting_prox"}, {"dt", 0.00048828125}}},
             {"taus", {0.03125, 0.125, 0.5}},
             {"mc", {{"count", 400}, {"master_seed", 17}}}},
    };

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    int compared = 0;
    for (const auto& cfg : cfgs) {
        const std::string name = cfg.at("experiment").get<std::string>();
        const fs::path d1 = base / (name + "_t1"), d4 = base / (name + "_t4");
        fs::create_directories(d1);
        fs::create_directories(d4);
        const auto o1 = run_experiment(cfg, d1.string(), 1);
        const auto o4 = run_experiment(cfg, d4.string(), 4);
        for (const auto& f : o1.outputs) {
            const std::string b1 = slurp(d1 / f), b4 = slurp(d4 / f);
            c.require(!b1.empty(), name + "/" + f + " missing");
            c.require(b1 == b4, name + "/" + f + " differs between 1 and 4 threads");
            ++compared;
        }
        c.require(o1.outputs == o4.outputs, name + ": output lists differ");
    }
    fs::remove_all(base, ec);
    c.add(std::to_string(compared) + " files byte-identical across 1 and 4 worker threads");
    return c;
}

}  // namespace

int main() {
    int failed = 0;
    run_criterion(1, "Moreau-Yosida envelope family", 10.0, criterion_envelopes, failed);
    run_criterion(2, "integration-by-parts residuals", 60.0, criterion_ibp, failed);
    run_criterion(3, "total-variation formula", 120.0, criterion_total_variation, failed);
    run_criterion(4, "synchronous-coupling contraction", 60.0, criterion_contraction, failed);
    run_criterion(5, "semigroup convergence to the reflected oracle", 600.0,
                  criterion_semigroup_convergence, failed);
    run_criterion(6, "stationary increments and stationary law", 600.0, criterion_stationary,
                  failed);
    run_criterion(7, "reflected heat-equation demonstration", 600.0, criterion_spde, failed);
    run_criterion(8, "byte-identical reports across worker counts", 0.0, criterion_determinism,
                  failed);
    if (failed > 0) std::printf("%d of 8 criteria failed\n", failed);
    else std::printf("all 8 criteria passed\n");
    return failed;
}
