#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boundary_measure.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "gibbs.hpp"
#include "semigroup.hpp"

namespace moyo {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct ExperimentOutcome {
    std::vector<std::string> failures;  // violated scientific bands, human readable
    std::vector<std::string> outputs;   // files written (relative to output dir)
    bool ok() const { return failures.empty(); }
};

struct ExperimentInfo {
    std::string name;
    std::string summary;
    std::string required_keys;
};

inline const std::vector<ExperimentInfo>& experiment_catalog() {
    static const std::vector<ExperimentInfo> catalog = {
        {"yosida_scan",
         "envelope values, gradients and proximal points over a grid; checks "
         "monotonicity in the penalty and the gradient Lipschitz bound",
         "potential, penalties, grid{lo,hi,points}"},
        {"simulate",
         "penalized SDE trajectories exported as CSV",
         "system, potential, penalty, integrator{dt,...}, mc.count"},
        {"semigroup_converge",
         "penalized-vs-reflected semigroup gaps over a penalty ladder, with "
         "optional two-time product functional",
         "system, potential, penalties, integrator{scheme,dt}, times, phis, x0, mc.count"},
        {"ibp_check",
         "integration-by-parts residuals of boundary measures under quadrature",
         "system (gaussian base), potential, penalty|limit, phis, directions"},
        {"tv_formula",
         "total variation of boundary measures via the minimization formula, "
         "direct quadrature, and facet sums",
         "system (gaussian base), potential, penalties|limit, direction"},
        {"spde_reflect",
         "reflected stochastic heat equation demonstration on the grid: "
         "penetration depths across penalties and the free-field covariance check",
         "system{kind=heat_grid,...}, penalties, integrator{dt,t_final}, mc.count"},
        {"stationary_moments",
         "square-root modulus of stationary increments against the exact "
         "eigen-decomposition bound",
         "system, integrator{dt}, taus, mc.count"},
    };
    return catalog;
}

namespace expdetail {

inline void check_top(const json& cfg, const std::vector<std::string>& extra) {
    std::vector<std::string> allowed = {"experiment", "master_seed", "output_dir"};
    allowed.insert(allowed.end(), extra.begin(), extra.end());
    cfg::check_keys(cfg, "$", allowed);
}

inline std::uint64_t resolve_seed(const json& cfg, std::optional<std::uint64_t> env_seed) {
    if (env_seed) return *env_seed;
    if (cfg.contains("mc") && cfg["mc"].is_object() && cfg["mc"].contains("master_seed")) {
        const json& v = cfg["mc"]["master_seed"];
        if (!v.is_number_integer()) cfg::fail("$.mc.master_seed", "expected an integer");
        return v.get<std::uint64_t>();
    }
    if (cfg.contains("master_seed")) {
        const json& v = cfg["master_seed"];
        if (!v.is_number_integer()) cfg::fail("$.master_seed", "expected an integer");
        return v.get<std::uint64_t>();
    }
    cfg::fail("$.master_seed", "missing required key (or set EXPERIMENT_SEED)");
}

inline Vec start_point(const json& cfg, int dim) {
    if (!cfg.contains("x0")) return Vec::Zero(dim);
    const json& v = cfg["x0"];
    if (v.is_number()) {
        if (dim != 1) cfg::fail("$.x0", "scalar start needs a 1D system");
        return vec1(v.get<double>());
    }
    const auto arr = cfg::num_array(v, "$.x0");
    if (static_cast<int>(arr.size()) != dim)
        cfg::fail("$.x0", "start length must match the system dimension");
    return cfg::to_vec(arr);
}

inline IntegratorSpec make_integrator(const json& cfg, bool need_times) {
    const json& j = cfg::need(cfg, "$", "integrator");
    cfg::check_keys(j, "$.integrator", {"scheme", "dt", "t_final", "record_times"});
    IntegratorSpec spec;
    const std::string scheme =
        j.contains("scheme") ? cfg::str(j, "$.integrator", "scheme") : "splitting_prox";
    if (scheme == "splitting_prox") spec.scheme = Scheme::splitting_prox;
    else if (scheme == "explicit_euler") spec.scheme = Scheme::explicit_euler;
    else cfg::fail("$.integrator.scheme", "expected splitting_prox or explicit_euler");
    spec.dt = cfg::num(j, "$.integrator", "dt");
    if (need_times) {
        if (j.contains("record_times"))
            spec.record_times = cfg::num_array(j, "$.integrator", "record_times");
        else if (j.contains("t_final"))
            spec.record_times = {cfg::num(j, "$.integrator", "t_final")};
        else
            cfg::fail("$.integrator", "needs record_times or t_final");
    }
    return spec;
}

inline json echo_integrator(const IntegratorSpec& spec) {
    return json{{"scheme", spec.scheme == Scheme::splitting_prox ? "splitting_prox"
                                                                 : "explicit_euler"},
                {"dt", spec.dt},
                {"record_times", spec.record_times}};
}

inline int mc_count(const json& cfg) {
    const json& j = cfg::need(cfg, "$", "mc");
    cfg::check_keys(j, "$.mc", {"count", "master_seed", "oracle_count"});
    const long long c = cfg::integer(j, "$.mc", "count");
    if (c < 1) cfg::fail("$.mc.count", "path count must be positive");
    return static_cast<int>(c);
}

inline QuadratureSpec measure_options(const json& cfg, json* echo, double* tolerance,
                                      long* mcmc_steps) {
    QuadratureSpec qs;
    double tol = 1e-6;
    long steps = 0;
    if (cfg.contains("measures")) {
        const json& j = cfg["measures"];
        cfg::check_keys(j, "$.measures",
                        {"base", "quadrature_points", "truncation_sigmas", "mcmc_steps",
                         "tolerance"});
        qs.points_per_axis = static_cast<int>(cfg::integer_or(j, "$.measures",
                                                              "quadrature_points", 0));
        qs.trunc_sigmas = cfg::num_or(j, "$.measures", "truncation_sigmas", 8.0);
        tol = cfg::num_or(j, "$.measures", "tolerance", 1e-6);
        steps = cfg::integer_or(j, "$.measures", "mcmc_steps", 0);
    }
    if (echo)
        *echo = json{{"quadrature_points", qs.points_per_axis},
                     {"truncation_sigmas", qs.trunc_sigmas},
                     {"tolerance", tol}};
    if (tolerance) *tolerance = tol;
    if (mcmc_steps) *mcmc_steps = steps;
    return qs;
}

inline std::string measure_base(const json& cfg) {
    if (!cfg.contains("measures") || !cfg["measures"].contains("base")) return "gaussian";
    const std::string b = cfg::str(cfg["measures"], "$.measures", "base");
    if (b != "gaussian" && b != "lebesgue")
        cfg::fail("$.measures.base", "expected gaussian or lebesgue");
    return b;
}

inline std::string fmt(double v) { return CsvWriter::format(CsvWriter::Cell(v)); }

inline std::string fmt_vec(const Vec& h) {
    std::string out;
    for (int i = 0; i < h.size(); ++i) out += (i ? "," : "") + fmt(h[i]);
    return out;
}

inline std::vector<TestFunction> phi_list(const json& cfg, int dim) {
    const json& v = cfg::need(cfg, "$", "phis");
    if (!v.is_array() || v.empty()) cfg::fail("$.phis", "expected a non-empty array");
    std::vector<TestFunction> out;
    for (const auto& e : v) {
        if (!e.is_string()) cfg::fail("$.phis", "expected strings");
        out.push_back(make_test_function(e.get<std::string>(), dim, "$.phis"));
    }
    return out;
}

}  // namespace expdetail

// ---------------------------------------------------------------------------
// yosida_scan
// ---------------------------------------------------------------------------

inline void run_yosida_scan(const json& cfg, const std::string& out_dir,
                            ExperimentOutcome& out, json& resolved) {
    expdetail::check_top(cfg, {"potential", "penalties", "grid"});

    const json& grid = cfg::need(cfg, "$", "grid");
    cfg::check_keys(grid, "$.grid", {"lo", "hi", "points"});
    const auto lo = cfg::num_array(grid, "$.grid", "lo");
    const auto hi = cfg::num_array(grid, "$.grid", "hi");
    const int dim = static_cast<int>(lo.size());
    if (dim < 1 || dim > 2) cfg::fail("$.grid.lo", "grid scans support 1 or 2 dimensions");
    if (hi.size() != lo.size()) cfg::fail("$.grid.hi", "lo/hi lengths differ");
    const int pts = static_cast<int>(cfg::integer(grid, "$.grid", "points"));
    if (pts < 2) cfg::fail("$.grid.points", "need at least 2 points per axis");

    json pot_echo;
    const ConvexPotential base =
        make_potential(cfg::need(cfg, "$", "potential"), "$.potential", dim, &pot_echo);
    auto penalties = cfg::num_array(cfg, "$", "penalties");
    std::sort(penalties.begin(), penalties.end());

    std::vector<Vec> nodes;
    if (dim == 1) {
        for (int i = 0; i < pts; ++i)
            nodes.push_back(vec1(lo[0] + (hi[0] - lo[0]) * i / (pts - 1)));
    } else {
        for (int i = 0; i < pts; ++i)
            for (int k = 0; k < pts; ++k) {
                Vec x(2);
                x[0] = lo[0] + (hi[0] - lo[0]) * i / (pts - 1);
                x[1] = lo[1] + (hi[1] - lo[1]) * k / (pts - 1);
                nodes.push_back(x);
            }
    }

    std::vector<std::string> header = {"penalty"};
    for (int a = 0; a < dim; ++a) header.push_back("x_" + std::to_string(a));
    header.push_back("value");
    for (int a = 0; a < dim; ++a) header.push_back("grad_" + std::to_string(a));
    for (int a = 0; a < dim; ++a) header.push_back("prox_" + std::to_string(a));
    CsvWriter csv(header);

    std::vector<double> prev_values;
    for (std::size_t pi = 0; pi < penalties.size(); ++pi) {
        const double n = penalties[pi];
        const YosidaEnvelope env(base, n);
        std::vector<double> values;
        for (const Vec& x : nodes) {
            const double v = env.value(x);
            const Vec g = env.gradient(x), px = env.prox_point(x);
            values.push_back(v);
            std::vector<CsvWriter::Cell> row{n};
            for (int a = 0; a < dim; ++a) row.emplace_back(x[a]);
            row.emplace_back(v);
            for (int a = 0; a < dim; ++a) row.emplace_back(g[a]);
            for (int a = 0; a < dim; ++a) row.emplace_back(px[a]);
            csv.add_row(std::move(row));

            const double bv = base.value(x);
            if (std::isfinite(bv) && v > bv + 1e-12)
                out.failures.push_back("envelope exceeds base potential at penalty " +
                                       expdetail::fmt(n));
        }
        if (pi > 0) {
            for (std::size_t k = 0; k < values.size(); ++k)
                if (prev_values[k] > values[k] + 1e-12) {
                    out.failures.push_back("envelope not monotone between penalties " +
                                           expdetail::fmt(penalties[pi - 1]) + " and " +
                                           expdetail::fmt(n));
                    break;
                }
        }
        // gradient Lipschitz constant 2n along adjacent grid nodes
        bool lip_ok = true;
        for (std::size_t k = 0; k + 1 < nodes.size() && lip_ok; ++k) {
            const Vec d = nodes[k + 1] - nodes[k];
            const double dist = d.norm();
            if (dist <= 0 || dist > (hi[0] - lo[0]))  // skip row wrap in 2D scans
                continue;
            const double gd = (env.gradient(nodes[k + 1]) - env.gradient(nodes[k])).norm();
            if (gd > 2.0 * n * dist * (1.0 + 1e-9) + 1e-12) lip_ok = false;
        }
        if (!lip_ok)
            out.failures.push_back("gradient Lipschitz bound violated at penalty " +
                                   expdetail::fmt(n));
        prev_values = std::move(values);
    }
    csv.write_file(out_dir + "/yosida_scan.csv");
    out.outputs.push_back("yosida_scan.csv");

    resolved["potential"] = pot_echo;
    resolved["penalties"] = penalties;
    resolved["grid"] = json{{"lo", lo}, {"hi", hi}, {"points", pts}};
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline void run_simulate(const json& cfg, const std::string& out_dir, std::uint64_t seed,
                         int threads, ExperimentOutcome& out, json& resolved) {
    expdetail::check_top(cfg, {"system", "potential", "penalty", "integrator", "mc", "x0"});
    SystemConfig sc = make_system(cfg::need(cfg, "$", "system"), "$.system");
    const int d = sc.system.dim();

    json pot_echo;
    const ConvexPotential pot =
        make_potential(cfg::need(cfg, "$", "potential"), "$.potential", d, &pot_echo);
    const double penalty = cfg::num_or(cfg, "$", "penalty", 1.0);
    if (pot.kind() != ConvexPotential::Kind::zero && !cfg.contains("penalty"))
        cfg::fail("$.penalty", "missing required key for a non-flat potential");
    const YosidaEnvelope env(pot, penalty, sc.system.h_weight());

    IntegratorSpec spec = expdetail::make_integrator(cfg, true);
    const int count = expdetail::mc_count(cfg);
    const Vec x0 = expdetail::start_point(cfg, d);

    const TrajectoryBatch batch = simulate_batch(sc.system, env, spec, x0, count, seed, threads);

    std::vector<std::string> header = {"path_id", "time"};
    for (int a = 0; a < d; ++a) header.push_back("x_" + std::to_string(a));
    CsvWriter csv(header);
    for (int p = 0; p < count; ++p)
        for (std::size_t i = 0; i < spec.record_times.size(); ++i) {
            std::vector<CsvWriter::Cell> row{static_cast<long long>(p),
                                             spec.record_times[i]};
            const Vec x = batch.state(p, static_cast<int>(i));
            for (int a = 0; a < d; ++a) row.emplace_back(x[a]);
            csv.add_row(std::move(row));
        }
    csv.write_file(out_dir + "/trajectories.csv");
    out.outputs.push_back("trajectories.csv");

    resolved["system"] = sc.resolved;
    resolved["potential"] = pot_echo;
    resolved["penalty"] = penalty;
    resolved["integrator"] = expdetail::echo_integrator(spec);
    resolved["mc"] = json{{"count", count}};
    resolved["x0"] = std::vector<double>(x0.data(), x0.data() + d);
}

// ---------------------------------------------------------------------------
// semigroup_converge
// ---------------------------------------------------------------------------

inline void run_semigroup_converge(const json& cfg, const std::string& out_dir,
                                   std::uint64_t seed, int threads, ExperimentOutcome& out,
                                   json& resolved) {
    expdetail::check_top(cfg, {"system", "potential", "penalties", "integrator", "mc", "times",
                               "phis", "x0", "two_time", "assert_final_gap",
                               "assert_decreasing"});
    SystemConfig sc = make_system(cfg::need(cfg, "$", "system"), "$.system");
    const int d = sc.system.dim();

    json pot_echo;
    const ConvexPotential pot =
        make_potential(cfg::need(cfg, "$", "potential"), "$.potential", d, &pot_echo);
    if (!pot.is_indicator())
        cfg::fail("$.potential", "the reflected oracle needs an indicator potential");

    const auto penalties = cfg::num_array(cfg, "$", "penalties");
    IntegratorSpec spec = expdetail::make_integrator(cfg, false);
    const auto times = cfg::num_array(cfg, "$", "times");
    const auto phis = expdetail::phi_list(cfg, d);
    const Vec x0 = expdetail::start_point(cfg, d);
    const int count = expdetail::mc_count(cfg);
    const int oracle_count =
        static_cast<int>(cfg::integer_or(cfg["mc"], "$.mc", "oracle_count", 0));
    const bool band_final = cfg::flag_or(cfg, "$", "assert_final_gap", true);
    const bool band_decreasing = cfg::flag_or(cfg, "$", "assert_decreasing", false);

    CsvWriter csv({"n", "t", "phi", "x_id", "gap", "std_error"});
    // "Decreasing" is asserted at the resolution the estimates support: a step
    // may not rise by more than 4 combined standard errors, and whenever the
    // first gap is significant the last one must lie strictly below it.
    auto audit = [&](const std::string& phi_name, const std::vector<GapRow>& rows,
                     std::size_t stride) {
        for (std::size_t t = 0; t < stride; ++t) {
            if (band_decreasing) {
                for (std::size_t i = t + stride; i < rows.size(); i += stride) {
                    const GapRow& prev = rows[i - stride];
                    const GapRow& cur = rows[i];
                    const double tol = 4.0 * std::sqrt(prev.gap_se * prev.gap_se +
                                                       cur.gap_se * cur.gap_se);
                    if (!(cur.gap <= prev.gap + tol))
                        out.failures.push_back("gap rises significantly for phi=" + phi_name +
                                               " t=" + expdetail::fmt(cur.time) + " at n=" +
                                               expdetail::fmt(cur.penalty));
                }
                const GapRow& first = rows[t];
                const GapRow& last = rows[rows.size() - stride + t];
                if (first.gap > 4.0 * first.gap_se && !(last.gap < first.gap))
                    out.failures.push_back("gap does not shrink overall for phi=" + phi_name +
                                           " t=" + expdetail::fmt(last.time));
            }
            const GapRow& last = rows[rows.size() - stride + t];
            if (band_final && !(last.gap <= 4.0 * last.gap_se))
                out.failures.push_back(
                    "final gap " + expdetail::fmt(last.gap) + " above 4 standard errors " +
                    expdetail::fmt(4.0 * last.gap_se) + " for phi=" + phi_name +
                    " t=" + expdetail::fmt(last.time));
        }
        for (const auto& r : rows)
            csv.add_row({r.penalty, r.time, phi_name, std::string("x0"), r.gap, r.gap_se});
    };

    for (const auto& phi : phis) {
        const auto rows =
            semigroup_convergence_study(sc.system, pot, penalties, spec.scheme, spec.dt, x0,
                                        times, phi, count, seed, threads, oracle_count);
        audit(phi.name, rows, times.size());
    }

    json two_echo;
    if (cfg.contains("two_time")) {
        const json& j = cfg["two_time"];
        cfg::check_keys(j, "$.two_time", {"t1", "t2", "phi1", "phi2"});
        const double t1 = cfg::num(j, "$.two_time", "t1"), t2 = cfg::num(j, "$.two_time", "t2");
        const TestFunction f1 =
            make_test_function(cfg::str(j, "$.two_time", "phi1"), d, "$.two_time.phi1");
        const TestFunction f2 =
            make_test_function(cfg::str(j, "$.two_time", "phi2"), d, "$.two_time.phi2");
        const auto rows = two_time_product_study(sc.system, pot, penalties, spec.scheme,
                                                 spec.dt, x0, t1, t2, f1, f2, count, seed,
                                                 threads, oracle_count);
        audit(f1.name + "*" + f2.name, rows, 1);
        two_echo = json{{"t1", t1}, {"t2", t2}, {"phi1", f1.name}, {"phi2", f2.name}};
    }

    csv.write_file(out_dir + "/semigroup_convergence.csv");
    out.outputs.push_back("semigroup_convergence.csv");

    resolved["system"] = sc.resolved;
    resolved["potential"] = pot_echo;
    resolved["penalties"] = penalties;
    resolved["integrator"] = json{{"scheme", expdetail::echo_integrator(spec)["scheme"]},
                                  {"dt", spec.dt}};
    resolved["times"] = times;
    json phi_names = json::array();
    for (const auto& p : phis) phi_names.push_back(p.name);
    resolved["phis"] = phi_names;
    resolved["x0"] = std::vector<double>(x0.data(), x0.data() + d);
    resolved["mc"] = json{{"count", count}, {"oracle_count", oracle_count}};
    resolved["assert_final_gap"] = band_final;
    resolved["assert_decreasing"] = band_decreasing;
    if (!two_echo.is_null()) resolved["two_time"] = two_echo;
}

// ---------------------------------------------------------------------------
// ibp_check
// ---------------------------------------------------------------------------

inline void run_ibp_check(const json& cfg, const std::string& out_dir, ExperimentOutcome& out,
                          json& resolved) {
    expdetail::check_top(cfg, {"system", "potential", "penalty", "limit", "measures", "phis",
                               "directions"});
    const std::string base = expdetail::measure_base(cfg);
    const bool limit = cfg::flag_or(cfg, "$", "limit", false);
    if (limit == cfg.contains("penalty"))
        cfg::fail("$", "need exactly one of penalty or limit:true");

    json meas_echo;
    double tol = 1e-6;
    const QuadratureSpec qs = expdetail::measure_options(cfg, &meas_echo, &tol, nullptr);

    std::optional<SystemConfig> sc;
    int d = 0;
    if (base == "gaussian") {
        sc = make_system(cfg::need(cfg, "$", "system"), "$.system");
        d = sc->system.dim();
    } else {
        // dimension comes from the potential itself
        const json& pj = cfg::need(cfg, "$", "potential");
        const json probe = pj.contains("lo") && pj["lo"].is_array()
                               ? pj["lo"]
                               : (pj.contains("center") ? pj["center"] : json());
        d = probe.is_array() ? static_cast<int>(probe.size()) : 1;
    }
    json pot_echo;
    const ConvexPotential pot =
        make_potential(cfg::need(cfg, "$", "potential"), "$.potential", d, &pot_echo);
    const double penalty = limit ? 0.0 : cfg::num(cfg, "$", "penalty");

    auto g = std::make_shared<GibbsMeasure>([&] {
        if (base == "gaussian")
            return limit ? GibbsMeasure::gaussian_limit(sc->system, pot, qs)
                         : GibbsMeasure::gaussian_base(
                               sc->system,
                               YosidaEnvelope(pot, penalty, sc->system.h_weight()), qs);
        return limit ? GibbsMeasure::lebesgue_limit(pot, qs)
                     : GibbsMeasure::lebesgue_base(YosidaEnvelope(pot, penalty), qs);
    }());

    const auto phis = expdetail::phi_list(cfg, d);
    const json& dirs = cfg::need(cfg, "$", "directions");
    if (!dirs.is_array() || dirs.empty()) cfg::fail("$.directions", "expected arrays");

    CsvWriter csv({"n", "quantity", "value", "std_error"});
    for (const auto& dj : dirs) {
        const auto hv = cfg::num_array(dj, "$.directions");
        if (static_cast<int>(hv.size()) != d)
            cfg::fail("$.directions", "direction length must match dimension");
        const Vec h = cfg::to_vec(hv);
        SignedMeasure sigma;
        if (!limit) {
            sigma = sigma_n(g, h);
        } else if (base == "lebesgue") {
            sigma = sigma_limit_convex_body(*pot.body(), h);
        } else if (d == 1 && pot.body() && !pot.body()->bounded()) {
            sigma = sigma_limit_halfline(g, h[0]);
        } else {
            cfg::fail("$.limit",
                      "gaussian limit boundary measures are available on the half-line only; "
                      "use measures.base=lebesgue for bounded bodies");
        }
        for (const auto& phi : phis) {
            const double res = ibp_residual(*g, sigma, phi, h);
            csv.add_row({limit ? CsvWriter::Cell(std::string("limit")) : CsvWriter::Cell(penalty),
                         "ibp_residual phi=" + phi.name + " h=" + expdetail::fmt_vec(h), res,
                         0.0});
            if (!(std::abs(res) <= tol))
                out.failures.push_back("ibp residual " + expdetail::fmt(res) +
                                       " above tolerance for phi=" + phi.name +
                                       " h=" + expdetail::fmt_vec(h));
        }
    }
    csv.write_file(out_dir + "/ibp_check.csv");
    out.outputs.push_back("ibp_check.csv");

    if (sc) resolved["system"] = sc->resolved;
    resolved["potential"] = pot_echo;
    if (!limit) resolved["penalty"] = penalty;
    resolved["limit"] = limit;
    meas_echo["base"] = base;
    resolved["measures"] = meas_echo;
    json phi_names = json::array();
    for (const auto& p : phis) phi_names.push_back(p.name);
    resolved["phis"] = phi_names;
    resolved["directions"] = dirs;
}

// ---------------------------------------------------------------------------
// tv_formula
// ---------------------------------------------------------------------------

inline void run_tv_formula(const json& cfg, const std::string& out_dir, ExperimentOutcome& out,
                           json& resolved) {
    expdetail::check_top(cfg,
                         {"system", "potential", "penalties", "limit", "direction", "measures",
                          "facet_tolerance"});
    const std::string base = expdetail::measure_base(cfg);
    json meas_echo;
    double tol = 1e-6;
    const QuadratureSpec qs = expdetail::measure_options(cfg, &meas_echo, &tol, nullptr);
    const double facet_tol = cfg::num_or(cfg, "$", "facet_tolerance", 1e-2);

    std::optional<SystemConfig> sc;
    int d = 1;
    if (base == "gaussian") {
        sc = make_system(cfg::need(cfg, "$", "system"), "$.system");
        d = sc->system.dim();
    } else if (cfg.contains("potential") && cfg["potential"].contains("lo") &&
               cfg["potential"]["lo"].is_array()) {
        d = static_cast<int>(cfg["potential"]["lo"].size());
    }
    json pot_echo;
    const ConvexPotential pot =
        make_potential(cfg::need(cfg, "$", "potential"), "$.potential", d, &pot_echo);

    Vec h = cfg::to_vec(cfg::num_array(cfg, "$", "direction"));
    if (h.size() != d) cfg::fail("$.direction", "direction length must match dimension");
    if (base == "gaussian") h = tv_normalize_direction(sc->system, h);
    else h /= h.norm();

    CsvWriter csv({"n", "quantity", "value", "std_error"});
    std::vector<double> penalties;
    if (cfg.contains("penalties")) {
        penalties = cfg::num_array(cfg, "$", "penalties");
        std::sort(penalties.begin(), penalties.end());
    }

    double prev_tv = 0.0, last_tv = 0.0;
    for (std::size_t i = 0; i < penalties.size(); ++i) {
        const double n = penalties[i];
        auto g = std::make_shared<GibbsMeasure>(
            base == "gaussian"
                ? GibbsMeasure::gaussian_base(
                      sc->system, YosidaEnvelope(pot, n, sc->system.h_weight()), qs)
                : GibbsMeasure::lebesgue_base(YosidaEnvelope(pot, n), qs));
        const double tv = tv_by_min_formula(*g, h);
        const double direct = sigma_n(g, h).total_variation();
        csv.add_row({n, std::string("tv_min_formula"), tv, 0.0});
        csv.add_row({n, std::string("tv_direct"), direct, 0.0});
        if (!(std::abs(tv - direct) <= tol))
            out.failures.push_back("minimization and direct total variations differ by " +
                                   expdetail::fmt(tv - direct) + " at penalty " +
                                   expdetail::fmt(n));
        if (i > 0 && tv < prev_tv - 1e-9)
            out.failures.push_back("total variation not nondecreasing at penalty " +
                                   expdetail::fmt(n));
        prev_tv = tv;
        last_tv = tv;
    }

    if (cfg::flag_or(cfg, "$", "limit", false)) {
        if (!pot.body() || !pot.body()->bounded())
            cfg::fail("$.limit", "facet totals need a bounded body");
        const double facet = sigma_limit_convex_body(*pot.body(), h).total_variation();
        csv.add_row({std::string("limit"), std::string("tv_facet"), facet, 0.0});
        if (!penalties.empty() && !(std::abs(facet - last_tv) <= facet_tol))
            out.failures.push_back("facet total variation " + expdetail::fmt(facet) +
                                   " differs from the largest-penalty value " +
                                   expdetail::fmt(last_tv) + " beyond " +
                                   expdetail::fmt(facet_tol));
    }

    csv.write_file(out_dir + "/tv_formula.csv");
    out.outputs.push_back("tv_formula.csv");

    if (sc) resolved["system"] = sc->resolved;
    resolved["potential"] = pot_echo;
    if (!penalties.empty()) resolved["penalties"] = penalties;
    resolved["limit"] = cfg::flag_or(cfg, "$", "limit", false);
    resolved["direction"] = std::vector<double>(h.data(), h.data() + d);
    meas_echo["base"] = base;
    meas_echo["facet_tolerance"] = facet_tol;
    resolved["measures"] = meas_echo;
}

// ---------------------------------------------------------------------------
// spde_reflect
// ---------------------------------------------------------------------------

inline void run_spde_reflect(const json& cfg, const std::string& out_dir, std::uint64_t seed,
                             int threads, ExperimentOutcome& out, json& resolved) {
    expdetail::check_top(cfg, {"system", "penalties", "integrator", "mc", "cov_paths"});
    SystemConfig sc = make_system(cfg::need(cfg, "$", "system"), "$.system");
    if (!sc.heat) cfg::fail("$.system.kind", "spde_reflect needs a heat_grid system");
    const HeatGridSystem& hg = *sc.heat;
    const double alpha = hg.grid.barrier;

    auto penalties = cfg::num_array(cfg, "$", "penalties");
    std::sort(penalties.begin(), penalties.end());
    IntegratorSpec spec = expdetail::make_integrator(cfg, true);
    const int count = expdetail::mc_count(cfg);
    const int d = sc.system.dim();

    CsvWriter csv({"n", "quantity", "value", "std_error"});
    std::vector<double> penetrations;
    double min_at_largest = 0.0;
    for (double n : penalties) {
        const YosidaEnvelope env = heat_grid_envelope(hg, n);
        const TrajectoryBatch batch =
            simulate_batch(sc.system, env, spec, Vec(Vec::Zero(d)), count, seed, threads);
        double min_all = 0.0;
        KahanSum pen_sum, pen_sq;
        for (int p = 0; p < count; ++p) {
            min_all = std::min(min_all, batch.min_component[p]);
            const double depth = std::max(0.0, -alpha - batch.min_component[p]);
            pen_sum.add(depth);
            pen_sq.add(depth * depth);
        }
        const double pen_mean = pen_sum.value() / count;
        const double pen_var =
            std::max(0.0, pen_sq.value() / count - pen_mean * pen_mean);
        csv.add_row({n, std::string("min_spacetime"), min_all, 0.0});
        csv.add_row({n, std::string("mean_penetration"), pen_mean,
                     std::sqrt(pen_var / count)});
        penetrations.push_back(pen_mean);
        min_at_largest = min_all;
    }
    for (std::size_t i = 1; i < penetrations.size(); ++i)
        if (!(penetrations[i] < penetrations[i - 1]))
            out.failures.push_back("mean penetration not strictly decreasing at penalty " +
                                   expdetail::fmt(penalties[i]));
    if (!penalties.empty() && !(min_at_largest >= -alpha - 0.2))
        out.failures.push_back("largest-penalty run dips to " +
                               expdetail::fmt(min_at_largest) + ", below the band " +
                               expdetail::fmt(-alpha - 0.2));

    // Free-field covariance check: push exact stationary draws through one
    // exact transition step, so the sampled law tests the Lyapunov identity
    // exp(At) Q exp(At)' + C_t = Q rather than echoing the sampler.
    const int cov_paths = static_cast<int>(cfg::integer_or(cfg, "$", "cov_paths", 4000));
    const double t_cov = 0.25;
    const Mat l_cov = Eigen::LLT<Mat>(sc.system.transition_cov(t_cov)).matrixL();
    Mat ys(cov_paths, d);
    for (int p = 0; p < cov_paths; ++p) {
        rng::Stream init(seed + 1, rng::kTagInitialState, static_cast<std::uint64_t>(p));
        rng::Stream noise(seed + 1, rng::kTagMonteCarlo, static_cast<std::uint64_t>(p));
        Vec z(d);
        for (int i = 0; i < d; ++i) z[i] = noise.gaussian();
        ys.row(p) = (sc.system.semigroup_action(t_cov, sc.system.sample_stationary(init)) +
                     l_cov * z)
                        .transpose();
    }
    Vec mean = Vec::Zero(d);
    for (int p = 0; p < cov_paths; ++p) mean += ys.row(p).transpose();
    mean /= cov_paths;
    Mat chat = Mat::Zero(d, d);
    for (int p = 0; p < cov_paths; ++p) {
        const Vec c = ys.row(p).transpose() - mean;
        chat += c * c.transpose();
    }
    chat /= cov_paths - 1;
    const Mat cex = sc.system.stationary_cov();
    double worst = 0.0;
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const double se =
                std::sqrt((cex(i, i) * cex(k, k) + cex(i, k) * cex(i, k)) / cov_paths);
            worst = std::max(worst, std::abs(chat(i, k) - cex(i, k)) / se);
        }
    csv.add_row({0.0, std::string("cov_max_normalized_dev"), worst, 0.0});
    if (!(worst <= 3.0))
        out.failures.push_back("free covariance deviates by " + expdetail::fmt(worst) +
                               " standard errors (band: 3)");

    csv.write_file(out_dir + "/spde_reflect.csv");
    out.outputs.push_back("spde_reflect.csv");

    resolved["system"] = sc.resolved;
    resolved["penalties"] = penalties;
    resolved["integrator"] = expdetail::echo_integrator(spec);
    resolved["mc"] = json{{"count", count}};
    resolved["cov_paths"] = cov_paths;
}

// ---------------------------------------------------------------------------
// stationary_moments
// ---------------------------------------------------------------------------

inline void run_stationary_moments(const json& cfg, const std::string& out_dir,
                                   std::uint64_t seed, int threads, ExperimentOutcome& out,
                                   json& resolved) {
    expdetail::check_top(cfg, {"system", "potential", "penalty", "integrator", "mc", "taus",
                               "p", "mode_weights"});
    SystemConfig sc = make_system(cfg::need(cfg, "$", "system"), "$.system");
    const int d = sc.system.dim();

    const std::string weights =
        cfg.contains("mode_weights") ? cfg::str(cfg, "$", "mode_weights") : "uniform";
    if (weights == "sobolev") sc.system.set_norm_weights(sobolev_mode_weights(sc.system));
    else if (weights != "uniform") cfg::fail("$.mode_weights", "expected uniform or sobolev");

    json pot_echo{{"kind", "zero"}};
    ConvexPotential pot = ConvexPotential::zero(d);
    double penalty = 0.0;
    if (cfg.contains("potential")) {
        pot = make_potential(cfg["potential"], "$.potential", d, &pot_echo);
        if (pot.kind() != ConvexPotential::Kind::zero)
            penalty = cfg::num(cfg, "$", "penalty");
    }
    const bool flat = pot.kind() == ConvexPotential::Kind::zero;
    const YosidaEnvelope env(pot, flat ? 1.0 : penalty, sc.system.h_weight());

    IntegratorSpec spec = expdetail::make_integrator(cfg, false);
    const auto taus = cfg::num_array(cfg, "$", "taus");
    const int count = expdetail::mc_count(cfg);
    const int p_order = static_cast<int>(cfg::integer_or(cfg, "$", "p", 2));

    Mat starts;
    if (env.flat()) {
        starts = sample_base_gaussian(sc.system, count, seed + 1);
    } else {
        if (d > 2)
            cfg::fail("$.potential",
                      "penalized stationary starts use the Langevin sampler (dimension <= 2)");
        GibbsMeasure g = GibbsMeasure::gaussian_base(sc.system, env);
        starts = sample_gibbs(g, count, seed + 1);
    }
    const auto rows = stationary_increment_check(sc.system, env, spec.scheme, spec.dt, taus,
                                                 starts, count, seed, threads, p_order);
    CsvWriter csv({"p", "t", "s", "ratio"});
    for (const auto& r : rows) {
        csv.add_row({static_cast<long long>(p_order), r.tau, 0.0, r.ratio});
        if (!r.pass)
            out.failures.push_back("increment ratio " + expdetail::fmt(r.ratio) +
                                   " above the stationary bound " + expdetail::fmt(r.bound) +
                                   " at lag " + expdetail::fmt(r.tau));
    }
    csv.write_file(out_dir + "/moments.csv");
    out.outputs.push_back("moments.csv");

    resolved["system"] = sc.resolved;
    resolved["potential"] = pot_echo;
    if (!flat) resolved["penalty"] = penalty;
    resolved["integrator"] = json{{"scheme", expdetail::echo_integrator(spec)["scheme"]},
                                  {"dt", spec.dt}};
    resolved["taus"] = taus;
    resolved["p"] = p_order;
    resolved["mode_weights"] = weights;
    resolved["mc"] = json{{"count", count}};
}

// ---------------------------------------------------------------------------
// front door
// ---------------------------------------------------------------------------

inline ExperimentOutcome run_experiment(const json& cfg, const std::string& out_dir,
                                        int threads,
                                        std::optional<std::uint64_t> env_seed = std::nullopt) {
    const std::string name = cfg::str(cfg, "$", "experiment");
    bool known = false;
    for (const auto& e : experiment_catalog()) known = known || e.name == name;
    if (!known) {
        std::string names;
        for (const auto& e : experiment_catalog()) names += (names.empty() ? "" : ", ") + e.name;
        cfg::fail("$.experiment", "unknown experiment '" + name + "' (valid: " + names + ")");
    }
    const std::uint64_t seed = expdetail::resolve_seed(cfg, env_seed);

    ExperimentOutcome out;
    json resolved;
    resolved["experiment"] = name;
    resolved["master_seed"] = seed;

    if (name == "yosida_scan") run_yosida_scan(cfg, out_dir, out, resolved);
    else if (name == "simulate") run_simulate(cfg, out_dir, seed, threads, out, resolved);
    else if (name == "semigroup_converge")
        run_semigroup_converge(cfg, out_dir, seed, threads, out, resolved);
    else if (name == "ibp_check") run_ibp_check(cfg, out_dir, out, resolved);
    else if (name == "tv_formula") run_tv_formula(cfg, out_dir, out, resolved);
    else if (name == "spde_reflect") run_spde_reflect(cfg, out_dir, seed, threads, out, resolved);
    else if (name == "stationary_moments")
        run_stationary_moments(cfg, out_dir, seed, threads, out, resolved);

    json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["experiment"] = name;
    manifest["config"] = resolved;
    manifest["outputs"] = out.outputs;
    std::ofstream mf(out_dir + "/manifest.json", std::ios::binary);
    if (!mf) throw ConfigError("cannot open output file: " + out_dir + "/manifest.json");
    mf << manifest.dump(2) << '\n';
    out.outputs.push_back("manifest.json");
    return out;
}

}  // namespace moyo
