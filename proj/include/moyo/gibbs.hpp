#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "moyo/errors.hpp"
#include "moyo/linear_system.hpp"
#include "moyo/potential.hpp"
#include "moyo/quadrature.hpp"
#include "moyo/rng.hpp"
#include "moyo/types.hpp"
#include "moyo/yosida.hpp"

namespace moyo {

enum class BaseMeasure { gaussian, lebesgue };

struct QuadratureSpec {
    int points_per_axis = 0;  // 0: pick 4096 in 1D, 1024 in 2D
    double trunc_sigmas = 8.0;
    double tail_log = 41.0;  // lebesgue box margin: discarded density below e^{-41}
    int angular_points = 1024;
    std::optional<std::pair<Vec, Vec>> box;  // lebesgue override
};

// Probability measure (1/Z) e^{-2 V} d(base) with V either a penalized
// envelope (smooth) or a closed convex indicator (the limit object). The
// gaussian base is the stationary law of the free linear system. Normalizing
// constants and integrals use deterministic panel quadrature in d <= 2.
class GibbsMeasure {
  public:
    static GibbsMeasure gaussian_base(LinearSystem sys, YosidaEnvelope env,
                                      QuadratureSpec qs = {}) {
        if (std::abs(env.h_weight() - sys.h_weight()) > 1e-12 * sys.h_weight())
            throw ConfigError("envelope and system disagree on the inner product weight");
        GibbsMeasure g;
        g.base_ = BaseMeasure::gaussian;
        g.dim_ = sys.dim();
        g.sys_ = std::move(sys);
        g.env_ = std::move(env);
        g.qs_ = qs;
        return g;
    }

    static GibbsMeasure gaussian_limit(LinearSystem sys, ConvexPotential constraint,
                                       QuadratureSpec qs = {}) {
        if (!constraint.is_indicator())
            throw ConfigError("limit measure needs an indicator potential");
        GibbsMeasure g;
        g.base_ = BaseMeasure::gaussian;
        g.dim_ = sys.dim();
        g.sys_ = std::move(sys);
        g.limit_ = std::move(constraint);
        g.qs_ = qs;
        return g;
    }

    static GibbsMeasure lebesgue_base(YosidaEnvelope env, QuadratureSpec qs = {}) {
        if (env.h_weight() != 1.0)
            throw ConfigError("lebesgue-base measures use the unweighted inner product");
        GibbsMeasure g;
        g.base_ = BaseMeasure::lebesgue;
        g.dim_ = env.base().dim();
        if (g.dim_ < 1) throw ConfigError("lebesgue base needs a fixed dimension");
        g.env_ = std::move(env);
        g.qs_ = qs;
        return g;
    }

    static GibbsMeasure lebesgue_limit(ConvexPotential constraint, QuadratureSpec qs = {}) {
        if (!constraint.is_indicator() || !constraint.body())
            throw ConfigError("limit measure needs an indicator potential with a body");
        if (!constraint.body()->bounded())
            throw ConfigError("lebesgue limit measure needs a bounded body");
        GibbsMeasure g;
        g.base_ = BaseMeasure::lebesgue;
        g.dim_ = constraint.dim();
        g.limit_ = std::move(constraint);
        g.qs_ = qs;
        return g;
    }

    BaseMeasure base() const { return base_; }
    int dim() const { return dim_; }
    bool smooth() const { return env_.has_value(); }
    const YosidaEnvelope& envelope() const {
        if (!env_) throw ConfigError("limit measure has no envelope");
        return *env_;
    }
    const ConvexPotential& limit_constraint() const {
        if (!limit_) throw ConfigError("smooth measure has no limit constraint");
        return *limit_;
    }
    const LinearSystem& system() const {
        if (!sys_) throw ConfigError("lebesgue measure has no linear system");
        return *sys_;
    }

    double penalty() const { return env_ ? env_->penalty() : kInf; }

    // 2 V(x): exponent of the unnormalized density against the base.
    double tilt(const Vec& x) const {
        if (env_) return 2.0 * env_->value(x);
        return limit_->in_domain(x, 1e-12) ? 0.0 : kInf;
    }

    double z() const {
        ensure_grid();
        return z_;
    }

    template <class F>
    double integrate(F&& f) const {
        ensure_grid();
        KahanSum acc;
        Vec x(dim_);
        for (std::size_t i = 0; i < node_weight_.size(); ++i) {
            if (node_weight_[i] == 0.0) continue;
            for (int j = 0; j < dim_; ++j) x[j] = node_coord_[i * dim_ + j];
            acc.add(node_weight_[i] * f(x));
        }
        return acc.value() / z_;
    }

    // Quadrature window on one axis.
    std::pair<double, double> window(int axis) const {
        if (axis < 0 || axis >= dim_) throw ConfigError("axis out of range");
        if (base_ == BaseMeasure::gaussian) {
            const double s = qs_.trunc_sigmas * std::sqrt(sys_->stationary_cov()(axis, axis));
            return {-s, s};
        }
        const auto [lo, hi] = lebesgue_box();
        return {lo[axis], hi[axis]};
    }

    // 1D integral with extra panel cuts, for integrands that have kinks of
    // their own (such as absolute values of signed densities).
    template <class F>
    double integrate_with_cuts(F&& f, const std::vector<double>& extra_cuts) const {
        if (dim_ != 1) throw ConfigError("extra cuts are a 1D facility");
        ensure_grid();
        const auto [lo, hi] = window(0);
        std::vector<double> cuts = grid_breakpoints(0);
        cuts.insert(cuts.end(), extra_cuts.begin(), extra_cuts.end());
        Rule1D rule = Rule1D::composite(lo, hi, cuts, default_points());
        KahanSum acc;
        Vec x(1);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            x[0] = rule.x[i];
            acc.add(rule.w[i] * density_factor(x) * f(x));
        }
        return acc.value() / z_;
    }

    // Unnormalized integral against e^{-2V} d(base).
    template <class F>
    double integrate_raw(F&& f) const {
        ensure_grid();
        KahanSum acc;
        Vec x(dim_);
        for (std::size_t i = 0; i < node_weight_.size(); ++i) {
            if (node_weight_[i] == 0.0) continue;
            for (int j = 0; j < dim_; ++j) x[j] = node_coord_[i * dim_ + j];
            acc.add(node_weight_[i] * f(x));
        }
        return acc.value();
    }

    struct McEstimate {
        double value = 0.0;
        double std_error = 0.0;
    };

    // Z by Monte Carlo against the base measure (any dimension).
    McEstimate normalize_mc(int count, std::uint64_t seed) const {
        KahanSum sum, sumsq;
        rng::Stream stream(seed, rng::kTagMonteCarlo, 1);
        for (int k = 0; k < count; ++k) {
            const Vec x = sample_base(stream);
            const double v = std::exp(-tilt(x)) * base_volume_factor();
            sum.add(v);
            sumsq.add(v * v);
        }
        const double m = sum.value() / count;
        const double var = std::max(0.0, sumsq.value() / count - m * m);
        return {m, std::sqrt(var / count)};
    }

    // Piecewise-linear CDF of the marginal on one axis, from the grid.
    std::function<double(double)> marginal_cdf(int axis) const {
        ensure_grid();
        if (axis < 0 || axis >= dim_) throw ConfigError("marginal axis out of range");
        std::vector<std::pair<double, double>> mass;
        mass.reserve(node_weight_.size());
        for (std::size_t i = 0; i < node_weight_.size(); ++i)
            mass.emplace_back(node_coord_[i * dim_ + axis], node_weight_[i]);
        std::sort(mass.begin(), mass.end());
        auto xs = std::make_shared<std::vector<double>>();
        auto cum = std::make_shared<std::vector<double>>();
        KahanSum acc;
        for (const auto& [x, w] : mass) {
            acc.add(w);
            if (!xs->empty() && xs->back() == x) {
                cum->back() = acc.value();
            } else {
                xs->push_back(x);
                cum->push_back(acc.value());
            }
        }
        const double total = acc.value();
        return [xs, cum, total](double x) {
            if (xs->empty() || total <= 0) return 0.0;
            auto it = std::upper_bound(xs->begin(), xs->end(), x);
            if (it == xs->begin()) return 0.0;
            if (it == xs->end()) return 1.0;
            const std::size_t hi = it - xs->begin();
            const double x0 = (*xs)[hi - 1], x1 = (*xs)[hi];
            const double c0 = (*cum)[hi - 1], c1 = (*cum)[hi];
            return (c0 + (c1 - c0) * (x - x0) / (x1 - x0)) / total;
        };
    }

    // Log density against lebesgue (up to a constant) and its gradient.
    double log_target(const Vec& x) const {
        double v = -tilt(x);
        if (base_ == BaseMeasure::gaussian) v -= 0.5 * x.dot(cov_inverse() * x);
        return v;
    }

    Vec grad_log_target(const Vec& x) const {
        if (!env_) throw ConfigError("limit measure has no smooth density");
        Vec g = -2.0 * env_->h_weight() * env_->gradient(x);
        if (base_ == BaseMeasure::gaussian) g -= cov_inverse() * x;
        return g;
    }

    Vec sample_base(rng::Stream& stream) const {
        if (base_ == BaseMeasure::gaussian) return sys_->sample_stationary(stream);
        const auto [lo, hi] = lebesgue_box();
        Vec x(dim_);
        for (int j = 0; j < dim_; ++j) x[j] = lo[j] + (hi[j] - lo[j]) * stream.uniform();
        return x;
    }

    std::pair<Vec, Vec> lebesgue_box() const {
        if (qs_.box) return *qs_.box;
        const auto [lo, hi] = env_ ? env_->base().support_box(
                                         env_->penalty() * env_->h_weight(), qs_.tail_log)
                                   : limit_->support_box(kInf, qs_.tail_log);
        for (int j = 0; j < dim_; ++j)
            if (std::isinf(lo[j]) || std::isinf(hi[j]))
                throw TruncationError("unbounded effective support: supply a quadrature box");
        return {lo, hi};
    }

  private:
    double base_volume_factor() const {
        if (base_ == BaseMeasure::gaussian) return 1.0;
        const auto [lo, hi] = lebesgue_box();
        double v = 1.0;
        for (int j = 0; j < dim_; ++j) v *= hi[j] - lo[j];
        return v;
    }

    const Mat& cov_inverse() const {
        if (cov_inv_.size() == 0) {
            cov_inv_ = sys_->stationary_cov().llt().solve(Mat::Identity(dim_, dim_));
        }
        return cov_inv_;
    }

    int default_points() const {
        if (qs_.points_per_axis > 0) return qs_.points_per_axis;
        return dim_ == 1 ? 4096 : 1024;
    }

    const ConvexPotential& shape() const { return env_ ? env_->base() : *limit_; }

    std::vector<double> grid_breakpoints(int axis) const {
        return env_ ? env_->axis_breakpoints(axis) : limit_->axis_breakpoints(axis);
    }

    // The ball body governing polar integration, if any.
    const ConvexBody* ball_body() const {
        const ConvexPotential& s = shape();
        const ConvexBody* b = nullptr;
        if (s.body() && s.body()->kind() == ConvexBody::Kind::ball) b = &*s.body();
        if (s.kind() == ConvexPotential::Kind::sum)
            for (const auto& p : s.parts())
                if (p.body() && p.body()->kind() == ConvexBody::Kind::ball) b = &*p.body();
        return b;
    }

    double density_factor(const Vec& x) const {
        const double t = tilt(x);
        if (std::isinf(t)) return 0.0;
        double v = std::exp(-t);
        if (base_ == BaseMeasure::gaussian)
            for (int j = 0; j < dim_; ++j) v *= normal_pdf(x[j], axis_sigma_[j]);
        return v;
    }

    void ensure_grid() const {
        if (grid_ready_) return;
        if (dim_ > 2)
            throw ConfigError("deterministic quadrature covers d <= 2; use Monte Carlo ops");
        build_grid(1.0);
        const double z0 = z_;
        // Truncation audit: a 25% wider window must not add relative mass.
        build_grid(1.25);
        const double z1 = z_;
        if (std::abs(z1 - z0) > 1e-9 * std::max(z0, 1e-300))
            throw TruncationError("quadrature window too small: extending it changes Z");
        build_grid(1.0);
        grid_ready_ = true;
    }

    void build_grid(double widen) const {
        node_coord_.clear();
        node_weight_.clear();
        axis_sigma_ = Vec::Ones(dim_);

        if (base_ == BaseMeasure::gaussian) {
            const Mat& c = sys_->stationary_cov();
            if (dim_ > 1) {
                const ConvexBody* ball = ball_body();
                const bool need_iso = ball != nullptr;
                for (int i = 0; i < dim_; ++i)
                    for (int j = 0; j < dim_; ++j)
                        if (i != j && std::abs(c(i, j)) > 1e-12 * c(i, i))
                            throw ConfigError(
                                "grid quadrature needs a diagonal base covariance; use Monte "
                                "Carlo ops");
                if (need_iso && std::abs(c(0, 0) - c(1, 1)) > 1e-12 * c(0, 0))
                    throw ConfigError("polar quadrature needs an isotropic base covariance");
            }
            for (int j = 0; j < dim_; ++j) axis_sigma_[j] = std::sqrt(c(j, j));
        }

        const ConvexBody* ball = dim_ == 2 ? ball_body() : nullptr;
        if (ball) {
            build_polar(*ball, widen);
        } else {
            build_tensor(widen);
        }

        KahanSum zsum;
        for (double w : node_weight_) zsum.add(w);
        z_ = zsum.value();
        if (!(z_ > 0)) throw TruncationError("normalization vanished on the quadrature window");
    }

    void build_tensor(double widen) const {
        std::vector<Rule1D> axes(dim_);
        for (int j = 0; j < dim_; ++j) {
            double lo, hi;
            if (base_ == BaseMeasure::gaussian) {
                hi = qs_.trunc_sigmas * widen * axis_sigma_[j];
                lo = -hi;
            } else {
                auto [blo, bhi] = lebesgue_box();
                const double pad = (widen - 1.0) * (bhi[j] - blo[j]);
                lo = blo[j] - pad;
                hi = bhi[j] + pad;
            }
            axes[j] = Rule1D::composite(lo, hi, grid_breakpoints(j), default_points());
        }
        Vec x(dim_);
        if (dim_ == 1) {
            node_coord_.reserve(axes[0].x.size());
            node_weight_.reserve(axes[0].x.size());
            for (std::size_t i = 0; i < axes[0].x.size(); ++i) {
                x[0] = axes[0].x[i];
                node_coord_.push_back(x[0]);
                node_weight_.push_back(axes[0].w[i] * density_factor(x));
            }
        } else {
            node_coord_.reserve(axes[0].x.size() * axes[1].x.size() * 2);
            node_weight_.reserve(axes[0].x.size() * axes[1].x.size());
            for (std::size_t i = 0; i < axes[0].x.size(); ++i) {
                x[0] = axes[0].x[i];
                for (std::size_t k = 0; k < axes[1].x.size(); ++k) {
                    x[1] = axes[1].x[k];
                    node_coord_.push_back(x[0]);
                    node_coord_.push_back(x[1]);
                    node_weight_.push_back(axes[0].w[i] * axes[1].w[k] * density_factor(x));
                }
            }
        }
    }

    void build_polar(const ConvexBody& ball, double widen) const {
        const Vec& c = ball.center();
        double rmax;
        if (env_) {
            const double margin =
                std::sqrt(qs_.tail_log / (2.0 * env_->penalty() * env_->h_weight()));
            rmax = ball.radius() + margin;
        } else {
            rmax = ball.radius();
        }
        if (base_ == BaseMeasure::gaussian)
            rmax = std::min(rmax + (widen - 1.0) * rmax,
                            c.norm() + qs_.trunc_sigmas * widen * axis_sigma_[0]);
        else
            rmax *= widen;
        std::vector<double> radial_cuts = {ball.radius()};
        if (env_) {
            const double qw = env_->base().combined_quad_weight(0);
            if (qw > 0.0)
                radial_cuts.push_back(ball.radius() *
                                      (1.0 + qw / (env_->penalty() * env_->h_weight())));
        }
        Rule1D radial = Rule1D::composite(0.0, rmax, radial_cuts, default_points());
        Rule1D angular = Rule1D::periodic(2.0 * 3.1415926535897932384626433832795,
                                          qs_.angular_points);
        Vec x(2);
        node_coord_.reserve(radial.x.size() * angular.x.size() * 2);
        node_weight_.reserve(radial.x.size() * angular.x.size());
        for (std::size_t i = 0; i < radial.x.size(); ++i) {
            const double r = radial.x[i];
            for (std::size_t k = 0; k < angular.x.size(); ++k) {
                const double th = angular.x[k];
                x[0] = c[0] + r * std::cos(th);
                x[1] = c[1] + r * std::sin(th);
                node_coord_.push_back(x[0]);
                node_coord_.push_back(x[1]);
                node_weight_.push_back(radial.w[i] * angular.w[k] * r * density_factor(x));
            }
        }
    }

    BaseMeasure base_ = BaseMeasure::lebesgue;
    int dim_ = 0;
    std::optional<LinearSystem> sys_;
    std::optional<YosidaEnvelope> env_;
    std::optional<ConvexPotential> limit_;
    QuadratureSpec qs_;

    mutable bool grid_ready_ = false;
    mutable double z_ = 0.0;
    mutable std::vector<double> node_coord_;
    mutable std::vector<double> node_weight_;
    mutable Vec axis_sigma_;
    mutable Mat cov_inv_;
};

struct MalaOptions {
    long burnin = 20000;
    int thin = 5;
    double initial_step = 0.5;
    double target_low = 0.5;
    double target_high = 0.7;
    double hard_low = 0.05;
    double hard_high = 0.95;
};

// Samples: row k is draw k. Smooth targets run a step-tuned Metropolis
// adjusted Langevin chain; limit targets use exact rejection from the base.
inline Mat sample_gibbs(const GibbsMeasure& g, int count, std::uint64_t seed,
                        MalaOptions opt = {}) {
    const int d = g.dim();
    Mat out(count, d);
    rng::Stream stream(seed, rng::kTagMala, 0);

    if (!g.smooth()) {
        const auto& constraint = g.limit_constraint();
        for (int k = 0; k < count; ++k) {
            for (long guard = 0;; ++guard) {
                if (guard > 1000000) throw SolverFailure("rejection sampling starved", 1000000);
                const Vec x = g.sample_base(stream);
                if (constraint.in_domain(x, 0.0)) {
                    out.row(k) = x.transpose();
                    break;
                }
            }
        }
        return out;
    }

    double eps = opt.initial_step;
    Vec x = Vec::Zero(d);
    if (!g.envelope().base().in_domain(x))
        x = g.envelope().prox_point(x);
    double lp = g.log_target(x);
    Vec grad = g.grad_log_target(x);

    auto propose = [&](const Vec& from, const Vec& from_grad, Vec& to) {
        to = from + 0.5 * eps * eps * from_grad;
        for (int j = 0; j < d; ++j) to[j] += eps * stream.gaussian();
    };
    auto log_q = [&](const Vec& from, const Vec& from_grad, const Vec& to) {
        const Vec mean = from + 0.5 * eps * eps * from_grad;
        return -(to - mean).squaredNorm() / (2.0 * eps * eps);
    };

    long accepted = 0, window_accepted = 0, window_steps = 0;
    Vec prop(d);
    auto step_chain = [&](bool tuning) {
        propose(x, grad, prop);
        const double lp_prop = g.log_target(prop);
        const Vec grad_prop = g.grad_log_target(prop);
        const double log_alpha =
            lp_prop - lp + log_q(prop, grad_prop, x) - log_q(x, grad, prop);
        const double u = stream.uniform();
        if (std::log(u) < log_alpha) {
            x = prop;
            lp = lp_prop;
            grad = grad_prop;
            ++accepted;
            ++window_accepted;
        }
        ++window_steps;
        if (tuning && window_steps == 100) {
            const double rate = window_accepted / 100.0;
            if (rate < opt.target_low) eps *= 0.8;
            else if (rate > opt.target_high) eps *= 1.25;
            window_accepted = 0;
            window_steps = 0;
        }
    };

    for (long k = 0; k < opt.burnin; ++k) step_chain(true);
    accepted = 0;
    const long sampling_steps = static_cast<long>(count) * opt.thin;
    long written = 0;
    for (long k = 0; k < sampling_steps; ++k) {
        step_chain(false);
        if ((k + 1) % opt.thin == 0) out.row(written++) = x.transpose();
    }
    const double final_rate = static_cast<double>(accepted) / sampling_steps;
    if (final_rate < opt.hard_low || final_rate > opt.hard_high)
        throw TuningFailure("langevin chain acceptance rate " + std::to_string(final_rate) +
                            " left the acceptable window");
    return out;
}

}  // namespace moyo
