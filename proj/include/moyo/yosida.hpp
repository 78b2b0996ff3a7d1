#pragma once

#include <cmath>

#include "moyo/potential.hpp"
#include "moyo/types.hpp"

namespace moyo {

// Quadratic inf-convolution U_n(x) = min_y U(y) + n * |x - y|_H^2 over a
// space with inner product <a,b>_H = h_weight * a.dot(b). The minimizer is
// the proximal point; the gradient below is taken with respect to <.,.>_H
// and is 2n-Lipschitz.
class YosidaEnvelope {
  public:
    YosidaEnvelope(ConvexPotential base, double penalty, double h_weight = 1.0)
        : base_(std::move(base)), penalty_(penalty), h_weight_(h_weight) {
        if (!(penalty > 0)) throw ConfigError("envelope: penalty must be positive");
        if (!(h_weight > 0)) throw ConfigError("envelope: h_weight must be positive");
    }

    const ConvexPotential& base() const { return base_; }
    double penalty() const { return penalty_; }
    double h_weight() const { return h_weight_; }
    double gradient_lipschitz() const { return 2.0 * penalty_; }
    bool flat() const { return base_.kind() == ConvexPotential::Kind::zero; }

    // Kink locations of the envelope on one axis: base kinks pulled back
    // through the proximal target map (a quadratic part shifts them outward
    // by a factor 1 + w / n_eff around its center). The base kinks are kept
    // as well, so the list is a safe superset for panel alignment.
    std::vector<double> axis_breakpoints(int axis) const {
        std::vector<double> cuts = base_.axis_breakpoints(axis);
        const double neff = penalty_ * h_weight_;
        const double w = base_.combined_quad_weight(axis);
        if (w > 0.0) {
            const double c = base_.combined_quad_center(axis);
            const std::size_t m = cuts.size();
            for (std::size_t i = 0; i < m; ++i)
                cuts.push_back(cuts[i] + (w / neff) * (cuts[i] - c));
        }
        return cuts;
    }

    Vec prox_point(const Vec& x) const {
        if (flat()) return x;
        return base_.prox(x, penalty_ * h_weight_);
    }

    double value(const Vec& x) const {
        if (flat()) return 0.0;
        const Vec p = prox_point(x);
        const double base_val = base_.is_indicator() ? 0.0 : base_.value(p);
        return base_val + penalty_ * h_weight_ * (x - p).squaredNorm();
    }

    // Gradient with respect to the weighted inner product, in coordinates.
    Vec gradient(const Vec& x) const {
        if (flat()) return Vec::Zero(x.size());
        return 2.0 * penalty_ * (x - prox_point(x));
    }

  private:
    ConvexPotential base_;
    double penalty_;
    double h_weight_;
};

}  // namespace moyo
