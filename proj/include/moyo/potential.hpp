#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "moyo/errors.hpp"
#include "moyo/types.hpp"

namespace moyo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Halfspace {
    Vec normal;  // unit length
    double offset;

    Halfspace(Vec n, double b) : normal(std::move(n)), offset(b) {
        const double len = normal.norm();
        if (len <= 0) throw ConfigError("halfspace: zero normal");
        normal /= len;
        offset /= len;
    }

    double violation(const Vec& x) const { return normal.dot(x) - offset; }

    Vec project(const Vec& x) const {
        const double v = violation(x);
        if (v <= 0) return x;
        return x - v * normal;
    }
};

inline Vec dykstra_project(const std::vector<Halfspace>& faces, const Vec& x,
                           double tol = 1e-10, int max_cycles = 10000) {
    const std::size_t m = faces.size();
    Vec z = x;
    std::vector<Vec> corrections(m, Vec::Zero(x.size()));
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec y = z + corrections[i];
            const Vec p = faces[i].project(y);
            corrections[i] = y - p;
            moved = std::max(moved, (p - z).lpNorm<Eigen::Infinity>());
            z = p;
        }
        if (moved < tol) return z;
    }
    double worst = 0.0;
    for (const auto& f : faces) worst = std::max(worst, f.violation(z));
    if (worst > 1e-8 * (1.0 + z.norm()))
        throw InfeasibleSet("halfspace intersection appears empty (residual violation " +
                            std::to_string(worst) + ")");
    throw SolverFailure("alternating projections failed to settle", max_cycles);
}

class ConvexBody {
  public:
    enum class Kind { box, ball, polytope };

    static ConvexBody box(Vec lo, Vec hi) {
        if (lo.size() != hi.size()) throw ConfigError("box: lo/hi dimension mismatch");
        for (int i = 0; i < lo.size(); ++i)
            if (!(lo[i] <= hi[i])) throw ConfigError("box: lo > hi on axis " + std::to_string(i));
        ConvexBody b;
        b.kind_ = Kind::box;
        b.dim_ = static_cast<int>(lo.size());
        b.lo_ = std::move(lo);
        b.hi_ = std::move(hi);
        return b;
    }

    static ConvexBody ball(Vec center, double radius) {
        if (radius <= 0) throw ConfigError("ball: radius must be positive");
        ConvexBody b;
        b.kind_ = Kind::ball;
        b.dim_ = static_cast<int>(center.size());
        b.center_ = std::move(center);
        b.radius_ = radius;
        return b;
    }

    static ConvexBody polytope(std::vector<Halfspace> faces) {
        if (faces.empty()) throw ConfigError("polytope: no faces");
        ConvexBody b;
        b.kind_ = Kind::polytope;
        b.dim_ = static_cast<int>(faces[0].normal.size());
        for (const auto& f : faces)
            if (f.normal.size() != b.dim_) throw ConfigError("polytope: mixed dimensions");
        b.faces_ = std::move(faces);
        if (b.dim_ == 2) b.compute_vertices_2d();
        return b;
    }

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    const Vec& center() const { return center_; }
    double radius() const { return radius_; }
    const std::vector<Halfspace>& faces() const { return faces_; }
    const std::vector<Vec>& vertices() const { return vertices_; }

    bool bounded() const {
        switch (kind_) {
            case Kind::ball:
                return true;
            case Kind::box:
                for (int i = 0; i < dim_; ++i)
                    if (std::isinf(lo_[i]) || std::isinf(hi_[i])) return false;
                return true;
            case Kind::polytope: {
                // Bounded iff every direction is blocked by some face normal.
                const int probes = 720;
                if (dim_ != 2) throw ConfigError("polytope geometry implemented in 2D only");
                for (int k = 0; k < probes; ++k) {
                    const double th = 2.0 * 3.1415926535897932384626433832795 * k / probes;
                    Vec u(2);
                    u << std::cos(th), std::sin(th);
                    double best = -kInf;
                    for (const auto& f : faces_) best = std::max(best, f.normal.dot(u));
                    if (best < 1e-9) return false;
                }
                return true;
            }
        }
        return false;
    }

    Vec project(const Vec& x) const {
        check_dim(x);
        switch (kind_) {
            case Kind::box: {
                Vec p = x;
                for (int i = 0; i < dim_; ++i) p[i] = std::min(std::max(p[i], lo_[i]), hi_[i]);
                return p;
            }
            case Kind::ball: {
                const Vec d = x - center_;
                const double r = d.norm();
                if (r <= radius_) return x;
                return center_ + d * (radius_ / r);
            }
            case Kind::polytope:
                return dykstra_project(faces_, x);
        }
        throw ConfigError("unreachable body kind");
    }

    bool contains(const Vec& x, double tol = 1e-9) const {
        check_dim(x);
        switch (kind_) {
            case Kind::box:
                for (int i = 0; i < dim_; ++i)
                    if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) return false;
                return true;
            case Kind::ball:
                return (x - center_).norm() <= radius_ + tol;
            case Kind::polytope:
                for (const auto& f : faces_)
                    if (f.violation(x) > tol) return false;
                return true;
        }
        return false;
    }

    double volume() const {
        if (!bounded()) throw ConfigError("volume of unbounded body");
        switch (kind_) {
            case Kind::box: {
                double v = 1.0;
                for (int i = 0; i < dim_; ++i) v *= hi_[i] - lo_[i];
                return v;
            }
            case Kind::ball: {
                if (dim_ == 1) return 2.0 * radius_;
                if (dim_ == 2) return 3.1415926535897932384626433832795 * radius_ * radius_;
                if (dim_ == 3)
                    return 4.0 / 3.0 * 3.1415926535897932384626433832795 * radius_ * radius_ *
                           radius_;
                throw ConfigError("ball volume implemented for d <= 3");
            }
            case Kind::polytope: {
                // Shoelace over the angularly ordered vertex ring.
                if (vertices_.size() < 3) throw ConfigError("degenerate polytope");
                double area = 0.0;
                for (std::size_t i = 0; i < vertices_.size(); ++i) {
                    const Vec& a = vertices_[i];
                    const Vec& b = vertices_[(i + 1) % vertices_.size()];
                    area += a[0] * b[1] - b[0] * a[1];
                }
                return 0.5 * std::abs(area);
            }
        }
        throw ConfigError("unreachable body kind");
    }

    // Bounding box, possibly with infinite entries.
    std::pair<Vec, Vec> bounding_box() const {
        switch (kind_) {
            case Kind::box:
                return {lo_, hi_};
            case Kind::ball:
                return {center_.array() - radius_, center_.array() + radius_};
            case Kind::polytope: {
                if (dim_ != 2 || vertices_.empty() || !bounded())
                    throw ConfigError("bounding box needs a bounded 2D polytope");
                Vec lo = vertices_[0], hi = vertices_[0];
                for (const auto& v : vertices_) {
                    lo = lo.cwiseMin(v);
                    hi = hi.cwiseMax(v);
                }
                return {lo, hi};
            }
        }
        throw ConfigError("unreachable body kind");
    }

  private:
    void check_dim(const Vec& x) const {
        if (x.size() != dim_) throw ConfigError("body: point dimension mismatch");
    }

    void compute_vertices_2d() {
        std::vector<Vec> found;
        const std::size_t m = faces_.size();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                Mat a(2, 2);
                a.row(0) = faces_[i].normal.transpose();
                a.row(1) = faces_[j].normal.transpose();
                const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
                if (std::abs(det) < 1e-12) continue;
                Vec b(2);
                b << faces_[i].offset, faces_[j].offset;
                Vec v = a.inverse() * b;
                bool ok = true;
                for (const auto& f : faces_)
                    if (f.violation(v) > 1e-9 * (1.0 + v.norm())) ok = false;
                if (!ok) continue;
                bool dup = false;
                for (const auto& u : found)
                    if ((u - v).norm() < 1e-9) dup = true;
                if (!dup) found.push_back(std::move(v));
            }
        }
        if (found.size() >= 3) {
            Vec c = Vec::Zero(2);
            for (const auto& v : found) c += v;
            c /= static_cast<double>(found.size());
            std::sort(found.begin(), found.end(), [&](const Vec& a, const Vec& b) {
                return std::atan2(a[1] - c[1], a[0] - c[0]) < std::atan2(b[1] - c[1], b[0] - c[0]);
            });
        }
        vertices_ = std::move(found);
    }

    Kind kind_ = Kind::box;
    int dim_ = 0;
    Vec lo_, hi_;
    Vec center_;
    double radius_ = 0.0;
    std::vector<Halfspace> faces_;
    std::vector<Vec> vertices_;
};

// Proper convex lower semicontinuous potential, nonnegative by construction,
// with an exact proximal map: prox(x, p) = argmin_y U(y) + p * |x - y|^2.
class ConvexPotential {
  public:
    enum class Kind { zero, indicator, quadratic, sum };

    struct Bound {
        double floor = 0.0;  // U(x) >= floor - slope * |x|
        double slope = 0.0;
    };

    static ConvexPotential zero(int dim = -1) {
        ConvexPotential u;
        u.kind_ = Kind::zero;
        u.dim_ = dim;
        u.name_ = "zero";
        return u;
    }

    static ConvexPotential indicator(ConvexBody body, std::string name = "") {
        ConvexPotential u;
        u.kind_ = Kind::indicator;
        u.dim_ = body.dim();
        u.name_ = name.empty() ? "indicator" : std::move(name);
        u.body_ = std::move(body);
        return u;
    }

    // U(x) = sum_i weights_i * (x_i - center_i)^2, all weights positive.
    static ConvexPotential quadratic(Vec weights, Vec center) {
        if (weights.size() != center.size()) throw ConfigError("quadratic: size mismatch");
        for (int i = 0; i < weights.size(); ++i)
            if (!(weights[i] > 0)) throw ConfigError("quadratic: weights must be positive");
        ConvexPotential u;
        u.kind_ = Kind::quadratic;
        u.dim_ = static_cast<int>(weights.size());
        u.name_ = "quadratic";
        u.quad_weights_ = std::move(weights);
        u.quad_center_ = std::move(center);
        return u;
    }

    static ConvexPotential sum(std::vector<ConvexPotential> parts);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const std::string& name() const { return name_; }
    bool is_indicator() const { return kind_ == Kind::indicator || kind_ == Kind::zero; }
    const std::optional<ConvexBody>& body() const { return body_; }
    const Vec& quad_weights() const { return quad_weights_; }
    const Vec& quad_center() const { return quad_center_; }

    // Aggregate quadratic part on one axis (zero for indicators).
    double combined_quad_weight(int axis) const {
        if (kind_ == Kind::quadratic) return quad_weights_[axis];
        if (kind_ == Kind::sum) return sum_weights_[axis];
        return 0.0;
    }
    double combined_quad_center(int axis) const {
        if (kind_ == Kind::quadratic) return quad_center_[axis];
        if (kind_ == Kind::sum) return sum_center_[axis];
        return 0.0;
    }

    Bound lower_bound() const { return {0.0, 0.0}; }

    double value(const Vec& x) const {
        switch (kind_) {
            case Kind::zero:
                return 0.0;
            case Kind::indicator:
                return body_->contains(x) ? 0.0 : kInf;
            case Kind::quadratic: {
                const Vec d = x - quad_center_;
                return d.cwiseProduct(d).dot(quad_weights_);
            }
            case Kind::sum: {
                double s = 0.0;
                for (const auto& p : parts_) {
                    const double v = p.value(x);
                    if (!std::isfinite(v)) return kInf;
                    s += v;
                }
                return s;
            }
        }
        throw ConfigError("unreachable potential kind");
    }

    Vec prox(const Vec& x, double penalty) const {
        if (!(penalty > 0)) throw ConfigError("prox: penalty must be positive");
        switch (kind_) {
            case Kind::zero:
                return x;
            case Kind::indicator:
                return body_->project(x);
            case Kind::quadratic:
                return ((penalty * x + quad_weights_.cwiseProduct(quad_center_)).array() /
                        (quad_weights_.array() + penalty))
                    .matrix();
            case Kind::sum: {
                const Vec w = sum_weights_;
                const Vec target =
                    ((penalty * x + w.cwiseProduct(sum_center_)).array() / (w.array() + penalty))
                        .matrix();
                if (!sum_body_) return target;
                return sum_body_->project(target);
            }
        }
        throw ConfigError("unreachable potential kind");
    }

    bool in_domain(const Vec& x, double tol = 1e-9) const {
        switch (kind_) {
            case Kind::zero:
            case Kind::quadratic:
                return true;
            case Kind::indicator:
                return body_->contains(x, tol);
            case Kind::sum:
                return !sum_body_ || sum_body_->contains(x, tol);
        }
        return false;
    }

    // Second-derivative breakpoints of x -> U(x + t e_axis) families; used to
    // align quadrature panels.
    std::vector<double> axis_breakpoints(int axis) const {
        std::vector<double> cuts;
        auto add_body = [&](const ConvexBody& b) {
            if (b.kind() == ConvexBody::Kind::box) {
                if (std::isfinite(b.lo()[axis])) cuts.push_back(b.lo()[axis]);
                if (std::isfinite(b.hi()[axis])) cuts.push_back(b.hi()[axis]);
            } else if (b.kind() == ConvexBody::Kind::ball) {
                cuts.push_back(b.center()[axis] - b.radius());
                cuts.push_back(b.center()[axis] + b.radius());
            } else {
                for (const auto& v : b.vertices()) cuts.push_back(v[axis]);
            }
        };
        if (body_) add_body(*body_);
        if (sum_body_) add_body(*sum_body_);
        if (kind_ == Kind::sum)
            for (const auto& p : parts_)
                for (double c : p.axis_breakpoints(axis)) cuts.push_back(c);
        return cuts;
    }

    // Conservative region outside which 2 * U_penalty(x) > tail_log, where
    // U_penalty is the envelope with the given euclidean penalty weight
    // (pass +inf for the raw potential). Entries may be infinite.
    std::pair<Vec, Vec> support_box(double penalty, double tail_log) const {
        switch (kind_) {
            case Kind::zero:
                throw TruncationError("flat potential has no finite support box");
            case Kind::indicator: {
                auto [lo, hi] = body_->bounding_box();
                const double margin =
                    std::isinf(penalty) ? 0.0 : std::sqrt(tail_log / (2.0 * penalty));
                return {lo.array() - margin, hi.array() + margin};
            }
            case Kind::quadratic: {
                Vec lo(dim_), hi(dim_);
                for (int i = 0; i < dim_; ++i) {
                    const double w = quad_weights_[i];
                    const double weff = std::isinf(penalty) ? w : penalty * w / (penalty + w);
                    const double margin = std::sqrt(tail_log / (2.0 * weff));
                    lo[i] = quad_center_[i] - margin;
                    hi[i] = quad_center_[i] + margin;
                }
                return {lo, hi};
            }
            case Kind::sum: {
                Vec lo = Vec::Constant(dim_, -kInf);
                Vec hi = Vec::Constant(dim_, kInf);
                for (const auto& p : parts_) {
                    auto [plo, phi] = p.support_box(penalty, tail_log);
                    lo = lo.cwiseMax(plo);
                    hi = hi.cwiseMin(phi);
                }
                return {lo, hi};
            }
        }
        throw ConfigError("unreachable potential kind");
    }

    const std::vector<ConvexPotential>& parts() const { return parts_; }

  private:
    Kind kind_ = Kind::zero;
    int dim_ = -1;
    std::string name_;
    std::optional<ConvexBody> body_;
    Vec quad_weights_, quad_center_;
    std::vector<ConvexPotential> parts_;
    std::optional<ConvexBody> sum_body_;
    Vec sum_weights_, sum_center_;
};

inline ConvexPotential ConvexPotential::sum(std::vector<ConvexPotential> parts) {
    if (parts.empty()) throw ConfigError("sum: no parts");
    int dim = -1;
    for (const auto& p : parts) {
        if (p.kind() == Kind::zero) continue;
        if (dim == -1) dim = p.dim();
        if (p.dim() != dim) throw ConfigError("sum: mixed dimensions");
    }
    if (dim == -1) return zero();

    std::optional<ConvexBody> body;
    Vec w = Vec::Zero(dim), wc = Vec::Zero(dim);
    std::vector<ConvexPotential> kept;
    for (auto& p : parts) {
        switch (p.kind()) {
            case Kind::zero:
                break;
            case Kind::quadratic:
                w += p.quad_weights();
                wc += p.quad_weights().cwiseProduct(p.quad_center());
                kept.push_back(std::move(p));
                break;
            case Kind::indicator:
                if (body) throw ConfigError("sum: at most one indicator part");
                body = p.body();
                kept.push_back(std::move(p));
                break;
            case Kind::sum:
                throw ConfigError("sum: flatten nested sums first");
        }
    }
    if (w.maxCoeff() <= 0) throw ConfigError("sum: needs a quadratic part (else use the parts directly)");
    if (body && body->kind() != ConvexBody::Kind::box) {
        const double spread = w.maxCoeff() - w.minCoeff();
        if (spread > 1e-12 * w.maxCoeff())
            throw ConfigError(
                "sum: a non-box indicator combined with an anisotropic quadratic has no exact "
                "proximal map here");
    }

    ConvexPotential u;
    u.kind_ = Kind::sum;
    u.dim_ = dim;
    u.name_ = "sum";
    u.parts_ = std::move(kept);
    u.sum_body_ = std::move(body);
    u.sum_weights_ = std::move(w);
    u.sum_center_ = Vec::Zero(dim);
    for (int i = 0; i < dim; ++i)
        u.sum_center_[i] = u.sum_weights_[i] > 0 ? wc[i] / u.sum_weights_[i] : 0.0;
    return u;
}

// Convenience builders.

inline ConvexPotential indicator_box(Vec lo, Vec hi) {
    return ConvexPotential::indicator(ConvexBody::box(std::move(lo), std::move(hi)), "box");
}

inline ConvexPotential indicator_interval(double lo, double hi) {
    return ConvexPotential::indicator(ConvexBody::box(vec1(lo), vec1(hi)), "interval");
}

inline ConvexPotential indicator_halfline(double lo) {
    return ConvexPotential::indicator(ConvexBody::box(vec1(lo), vec1(kInf)), "halfline");
}

inline ConvexPotential indicator_ball(Vec center, double radius) {
    return ConvexPotential::indicator(ConvexBody::ball(std::move(center), radius), "ball");
}

// {x : x_i >= -shift for all i}
inline ConvexPotential indicator_orthant(int dim, double shift = 0.0) {
    return ConvexPotential::indicator(
        ConvexBody::box(Vec::Constant(dim, -shift), Vec::Constant(dim, kInf)), "orthant");
}

inline ConvexPotential indicator_halfspaces(std::vector<Halfspace> faces) {
    return ConvexPotential::indicator(ConvexBody::polytope(std::move(faces)), "halfspaces");
}

inline ConvexPotential quadratic_iso(int dim, double weight, Vec center = Vec()) {
    if (center.size() == 0) center = Vec::Zero(dim);
    return ConvexPotential::quadratic(Vec::Constant(dim, weight), std::move(center));
}

// Metric projection onto the domain of an indicator potential.
inline Vec project_onto_domain(const ConvexPotential& u, const Vec& x) {
    if (u.kind() == ConvexPotential::Kind::zero) return x;
    if (u.kind() == ConvexPotential::Kind::indicator) return u.body()->project(x);
    throw ConfigError("projection requires an indicator potential");
}

}  // namespace moyo
