#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "moyo/errors.hpp"
#include "moyo/linear_system.hpp"
#include "moyo/parallel.hpp"
#include "moyo/quadrature.hpp"
#include "moyo/potential.hpp"
#include "moyo/rng.hpp"
#include "moyo/types.hpp"
#include "moyo/yosida.hpp"

namespace moyo {

enum class Scheme { explicit_euler, splitting_prox };

inline const char* scheme_name(Scheme s) {
    return s == Scheme::explicit_euler ? "explicit_euler" : "splitting_prox";
}

struct IntegratorSpec {
    Scheme scheme = Scheme::splitting_prox;
    double dt = 1e-2;
    std::vector<double> record_times;
    bool zero_noise = false;
    bool track_penalization = false;

    void validate(double penalty) const {
        if (!(dt > 0)) throw ConfigError("dt must be positive");
        if (record_times.empty()) throw ConfigError("record_times must not be empty");
        for (double t : record_times)
            if (t < 0) throw ConfigError("record times must be nonnegative");
        if (scheme == Scheme::explicit_euler && penalty > 0 && dt > 1.0 / (4.0 * penalty) + 1e-15)
            throw ConfigError("explicit_euler requires dt <= 1/(4n) for penalty n");
    }

    // Record times snap to the nearest step.
    std::vector<long> record_steps() const {
        std::vector<long> steps;
        steps.reserve(record_times.size());
        for (double t : record_times) steps.push_back(std::lround(t / dt));
        return steps;
    }
};

class TrajectoryBatch {
  public:
    TrajectoryBatch(int count, int dim, std::vector<double> times)
        : count_(count), dim_(dim), times_(std::move(times)),
          data_(static_cast<std::size_t>(count) * dim * times_.size(), 0.0),
          min_component(count, std::numeric_limits<double>::infinity()),
          penalization_mass(count, 0.0) {}

    int count() const { return count_; }
    int dim() const { return dim_; }
    const std::vector<double>& times() const { return times_; }

    Eigen::Map<const Vec> state(int path, int time_index) const {
        return Eigen::Map<const Vec>(
            data_.data() + (static_cast<std::size_t>(time_index) * count_ + path) * dim_, dim_);
    }

    void set_state(int path, int time_index, const Vec& x) {
        Eigen::Map<Vec>(data_.data() +
                            (static_cast<std::size_t>(time_index) * count_ + path) * dim_,
                        dim_) = x;
    }

    struct MeanResult {
        double mean = 0.0;
        double std_error = 0.0;
    };

    template <class F>
    MeanResult functional_mean(int time_index, F&& f) const {
        KahanSum sum, sumsq;
        for (int p = 0; p < count_; ++p) {
            const double v = f(Vec(state(p, time_index)));
            sum.add(v);
            sumsq.add(v * v);
        }
        const double m = sum.value() / count_;
        const double var = std::max(0.0, sumsq.value() / count_ - m * m);
        return {m, std::sqrt(var / count_)};
    }

    Vec mean_state(int time_index) const {
        Vec m = Vec::Zero(dim_);
        for (int p = 0; p < count_; ++p) m += state(p, time_index);
        return m / count_;
    }

    Mat covariance(int time_index) const {
        const Vec m = mean_state(time_index);
        Mat c = Mat::Zero(dim_, dim_);
        for (int p = 0; p < count_; ++p) {
            const Vec d = Vec(state(p, time_index)) - m;
            c += d * d.transpose();
        }
        return c / std::max(1, count_ - 1);
    }

    std::vector<double> min_component;     // per path, over every step and axis
    std::vector<double> penalization_mass; // per path, time integral of |grad U_n|_{l1,H}
    std::uint64_t master_seed = 0;

  private:
    int count_;
    int dim_;
    std::vector<double> times_;
    std::vector<double> data_;

  public:
    const std::vector<double>& raw() const { return data_; }
};

namespace detail {

struct StepPlan {
    Scheme scheme;
    double dt;
    double beta = 0.0;        // splitting averaging factor 2n dt / (1 + 2n dt)
    Mat exp_dt;               // dense e^{A dt} (splitting, non-diagonal)
    Vec exp_diag;             // diagonal fast path
    bool diagonal = false;
    bool flat = false;        // no potential term
    double noise_std = 0.0;   // per-coordinate std dev per step
    double h_weight = 1.0;

    StepPlan(const LinearSystem& sys, const YosidaEnvelope& env, const IntegratorSpec& spec) {
        scheme = spec.scheme;
        dt = spec.dt;
        diagonal = sys.is_diagonal();
        flat = env.flat();
        h_weight = sys.h_weight();
        noise_std = spec.zero_noise ? 0.0 : sys.noise_scale() * std::sqrt(spec.dt);
        if (scheme == Scheme::splitting_prox) {
            const double nd = 2.0 * env.penalty() * spec.dt;
            beta = nd / (1.0 + nd);
            if (diagonal)
                exp_diag = (sys.eigenvalues().array() * spec.dt).exp().matrix();
            else
                exp_dt = sys.exp_drift(spec.dt);
        }
    }
};

// One scheme step; `work` must have the state's size.
inline void step_state(const StepPlan& plan, const LinearSystem& sys, const YosidaEnvelope& env,
                       Vec& x, const Vec& noise, Vec& work) {
    if (plan.scheme == Scheme::explicit_euler) {
        if (plan.diagonal)
            work = x + plan.dt * sys.eigenvalues().cwiseProduct(x);
        else
            work = x + plan.dt * (sys.drift() * x);
        if (!plan.flat) work -= plan.dt * env.gradient(x);
        work += noise;
        x = work;
    } else {
        if (plan.diagonal)
            work = plan.exp_diag.cwiseProduct(x) + noise;
        else
            work.noalias() = plan.exp_dt * x, work += noise;
        if (!plan.flat) {
            x = work + plan.beta * (env.prox_point(work) - work);
        } else {
            x = work;
        }
    }
}

}  // namespace detail

// Advance one step of the penalized dynamics from `state` with the given
// noise increment (already scaled; pass a zero vector for the drift flow).
inline Vec step_penalized(const LinearSystem& sys, const YosidaEnvelope& env,
                          const IntegratorSpec& spec, const Vec& state, const Vec& noise) {
    spec.validate(env.penalty());
    if (state.size() != sys.dim()) throw ConfigError("state dimension mismatch");
    detail::StepPlan plan(sys, env, spec);
    Vec x = state, work(state.size());
    detail::step_state(plan, sys, env, x, noise, work);
    return x;
}

namespace detail {

template <class StartFn>
TrajectoryBatch run_batch(const LinearSystem& sys, const YosidaEnvelope& env,
                          const IntegratorSpec& spec, StartFn&& start, int count,
                          std::uint64_t master_seed, int threads, std::uint64_t tag,
                          const ConvexPotential* projector) {
    spec.validate(env.flat() ? 0.0 : env.penalty());
    if (count < 1) throw ConfigError("path count must be positive");
    const int dim = sys.dim();
    const auto rec_steps = spec.record_steps();
    const long total_steps = *std::max_element(rec_steps.begin(), rec_steps.end());
    std::vector<double> actual_times(rec_steps.size());
    for (std::size_t i = 0; i < rec_steps.size(); ++i) actual_times[i] = rec_steps[i] * spec.dt;

    TrajectoryBatch batch(count, dim, actual_times);
    batch.master_seed = master_seed;
    const StepPlan plan(sys, env, spec);

    // Sorted (step, record index) pairs let each path advance a single cursor
    // instead of scanning every record time at every step, which matters when
    // callers record densely (e.g. one record per step).
    std::vector<std::pair<long, int>> rec_order(rec_steps.size());
    for (std::size_t i = 0; i < rec_steps.size(); ++i)
        rec_order[i] = {rec_steps[i], static_cast<int>(i)};
    std::stable_sort(rec_order.begin(), rec_order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    parallel_for(0, count, threads, [&](int p) {
        const std::uint64_t key = rng::derive_key(master_seed, tag, static_cast<std::uint64_t>(p));
        Vec x = start(p);
        if (x.size() != dim) throw ConfigError("start dimension mismatch");
        Vec noise = Vec::Zero(dim), work(dim);
        double min_comp = x.minCoeff();
        double pen_mass = 0.0;
        std::size_t cursor = 0;
        while (cursor < rec_order.size() && rec_order[cursor].first == 0)
            batch.set_state(p, rec_order[cursor++].second, x);
        for (long k = 1; k <= total_steps; ++k) {
            if (plan.noise_std > 0.0) {
                const std::uint64_t base = static_cast<std::uint64_t>(k - 1) * dim;
                for (int j = 0; j < dim; ++j)
                    noise[j] = plan.noise_std * rng::gaussian_at(key, base + j);
            }
            step_state(plan, sys, env, x, noise, work);
            if (projector) x = project_onto_domain(*projector, x);
            if (!x.allFinite())
                throw DivergenceError("trajectory diverged", k, p);
            min_comp = std::min(min_comp, x.minCoeff());
            if (spec.track_penalization)
                pen_mass += spec.dt * plan.h_weight * env.gradient(x).template lpNorm<1>();
            while (cursor < rec_order.size() && rec_order[cursor].first == k)
                batch.set_state(p, rec_order[cursor++].second, x);
        }
        batch.min_component[p] = min_comp;
        batch.penalization_mass[p] = pen_mass;
    });
    return batch;
}

}  // namespace detail

inline TrajectoryBatch simulate_batch(const LinearSystem& sys, const YosidaEnvelope& env,
                                      const IntegratorSpec& spec, const Vec& x0, int count,
                                      std::uint64_t master_seed, int threads = 1) {
    return detail::run_batch(sys, env, spec, [&](int) { return x0; }, count, master_seed,
                             threads, rng::kTagSimulation, nullptr);
}

// Per-path start states: row p of `starts`.
inline TrajectoryBatch simulate_batch(const LinearSystem& sys, const YosidaEnvelope& env,
                                      const IntegratorSpec& spec, const Mat& starts, int count,
                                      std::uint64_t master_seed, int threads = 1) {
    if (starts.rows() < count) throw ConfigError("not enough start states");
    return detail::run_batch(sys, env, spec,
                             [&](int p) { return Vec(starts.row(p).transpose()); }, count,
                             master_seed, threads, rng::kTagSimulation, nullptr);
}

enum class OracleKind { exact_reflection, projected_euler };

// In one dimension with the constraint set [0, inf) the reflected process is
// |Z| for the unconstrained linear diffusion Z, which has exact Gaussian
// transitions; everywhere else fall back to projecting an Euler step.
inline OracleKind reflected_oracle_kind(const LinearSystem& sys,
                                        const ConvexPotential& constraint) {
    if (sys.dim() != 1) return OracleKind::projected_euler;
    if (constraint.kind() != ConvexPotential::Kind::indicator) return OracleKind::projected_euler;
    const auto& body = *constraint.body();
    if (body.kind() != ConvexBody::Kind::box) return OracleKind::projected_euler;
    if (body.lo()[0] == 0.0 && std::isinf(body.hi()[0])) return OracleKind::exact_reflection;
    return OracleKind::projected_euler;
}

namespace detail {

template <class StartFn>
TrajectoryBatch run_exact_reflection(const LinearSystem& sys, StartFn&& start,
                                     const std::vector<double>& record_times, int count,
                                     std::uint64_t master_seed, int threads) {
    std::vector<std::size_t> order(record_times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return record_times[a] < record_times[b]; });
    TrajectoryBatch batch(count, 1, record_times);
    batch.master_seed = master_seed;
    const double a = sys.eigenvalues()[0];
    const double s2 = sys.noise_scale() * sys.noise_scale();
    parallel_for(0, count, threads, [&](int p) {
        const std::uint64_t key =
            rng::derive_key(master_seed, rng::kTagOracle, static_cast<std::uint64_t>(p));
        double z = start(p)[0];
        double prev_t = 0.0;
        double min_comp = std::abs(z);
        for (std::size_t i = 0; i < order.size(); ++i) {
            const double gap = record_times[order[i]] - prev_t;
            if (gap > 0) {
                const double decay = std::exp(a * gap);
                const double var = s2 * (1.0 - decay * decay) / (-2.0 * a);
                z = decay * z + std::sqrt(var) * rng::gaussian_at(key, i);
            }
            prev_t = record_times[order[i]];
            min_comp = std::min(min_comp, std::abs(z));
            batch.set_state(p, static_cast<int>(order[i]), vec1(std::abs(z)));
        }
        batch.min_component[p] = min_comp;
    });
    return batch;
}

}  // namespace detail

template <class StartFn>
TrajectoryBatch simulate_reflected_oracle_from(const LinearSystem& sys,
                                               const ConvexPotential& constraint,
                                               const IntegratorSpec& spec, StartFn&& start,
                                               int count, std::uint64_t master_seed,
                                               int threads = 1) {
    if (spec.record_times.empty()) throw ConfigError("record_times must not be empty");
    auto projected_start = [&](int p) { return project_onto_domain(constraint, start(p)); };
    if (reflected_oracle_kind(sys, constraint) == OracleKind::exact_reflection &&
        !spec.zero_noise) {
        return detail::run_exact_reflection(sys, projected_start, spec.record_times, count,
                                            master_seed, threads);
    }
    IntegratorSpec euler = spec;
    euler.scheme = Scheme::explicit_euler;
    euler.track_penalization = false;
    const YosidaEnvelope none(ConvexPotential::zero(), 1.0, sys.h_weight());
    return detail::run_batch(sys, none, euler, projected_start, count, master_seed, threads,
                             rng::kTagSimulation, &constraint);
}

inline TrajectoryBatch simulate_reflected_oracle(const LinearSystem& sys,
                                                 const ConvexPotential& constraint,
                                                 const IntegratorSpec& spec, const Vec& x0,
                                                 int count, std::uint64_t master_seed,
                                                 int threads = 1) {
    return simulate_reflected_oracle_from(sys, constraint, spec, [&](int) { return x0; }, count,
                                          master_seed, threads);
}

struct ContractionReport {
    std::vector<double> times;
    std::vector<double> max_ratio;
    std::vector<double> bound;
    bool pass = true;
};

// Evolves two starts under shared noise and reports the worst ratio
// |X_t - Y_t|_H / |x - y|_H over paths at each record time.
inline ContractionReport coupled_contraction(const LinearSystem& sys, const YosidaEnvelope& env,
                                             const IntegratorSpec& spec, const Vec& x0,
                                             const Vec& y0, int count,
                                             std::uint64_t master_seed, int threads = 1) {
    spec.validate(env.penalty());
    const double base_dist = sys.h_norm(x0 - y0);
    if (base_dist <= 0) throw ConfigError("coupled starts must differ");
    const int dim = sys.dim();
    const auto rec_steps = spec.record_steps();
    const long total_steps = *std::max_element(rec_steps.begin(), rec_steps.end());
    const detail::StepPlan plan(sys, env, spec);

    Mat ratios(count, rec_steps.size());
    ratios.setZero();
    parallel_for(0, count, threads, [&](int p) {
        const std::uint64_t key =
            rng::derive_key(master_seed, rng::kTagSimulation, static_cast<std::uint64_t>(p));
        Vec x = x0, y = y0;
        Vec noise = Vec::Zero(dim), work(dim);
        for (std::size_t i = 0; i < rec_steps.size(); ++i)
            if (rec_steps[i] == 0) ratios(p, i) = 1.0;
        for (long k = 1; k <= total_steps; ++k) {
            if (plan.noise_std > 0.0) {
                const std::uint64_t base = static_cast<std::uint64_t>(k - 1) * dim;
                for (int j = 0; j < dim; ++j)
                    noise[j] = plan.noise_std * rng::gaussian_at(key, base + j);
            }
            detail::step_state(plan, sys, env, x, noise, work);
            detail::step_state(plan, sys, env, y, noise, work);
            if (!x.allFinite() || !y.allFinite())
                throw DivergenceError("coupled trajectory diverged", k, p);
            for (std::size_t i = 0; i < rec_steps.size(); ++i)
                if (rec_steps[i] == k) ratios(p, i) = sys.h_norm(x - y) / base_dist;
        }
    });

    ContractionReport report;
    report.times.resize(rec_steps.size());
    report.max_ratio.resize(rec_steps.size());
    report.bound.resize(rec_steps.size());
    for (std::size_t i = 0; i < rec_steps.size(); ++i) {
        report.times[i] = rec_steps[i] * spec.dt;
        report.max_ratio[i] = ratios.col(i).maxCoeff();
        report.bound[i] =
            std::exp(-sys.omega() * report.times[i]) * (1.0 + 5.0 * spec.dt * sys.omega());
        if (report.max_ratio[i] > report.bound[i]) report.pass = false;
    }
    return report;
}

}  // namespace moyo
