#pragma once

#include <cmath>
#include <optional>

#include "moyo/errors.hpp"
#include "moyo/rng.hpp"
#include "moyo/types.hpp"

namespace moyo {

// Symmetric negative-definite drift A on R^d carrying the inner product
// <a,b>_H = h_weight * a.dot(b). The driving noise is cylindrical for H, so
// its coordinate covariance per unit time is (1/h_weight) * I. The centered
// Gaussian reference measure has operator covariance Q = (-2A)^{-1}; its
// coordinate covariance is Q / h_weight.
class LinearSystem {
  public:
    static LinearSystem from_matrix(Mat drift, double h_weight = 1.0) {
        if (drift.rows() != drift.cols()) throw ConfigError("drift must be square");
        if (!(h_weight > 0)) throw ConfigError("h_weight must be positive");
        const double scale = drift.cwiseAbs().maxCoeff();
        if ((drift - drift.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + scale))
            throw ConfigError("drift must be symmetric");
        LinearSystem sys;
        sys.h_weight_ = h_weight;
        sys.drift_ = std::move(drift);
        Eigen::SelfAdjointEigenSolver<Mat> es(sys.drift_);
        sys.eigenvalues_ = es.eigenvalues();
        sys.eigenvectors_ = es.eigenvectors();
        sys.diagonal_ = false;
        sys.finish();
        return sys;
    }

    // Diagonal drift given by its (negative) eigenvalues; keeps the fast path.
    static LinearSystem diagonal(Vec drift_eigenvalues, double h_weight = 1.0) {
        if (!(h_weight > 0)) throw ConfigError("h_weight must be positive");
        LinearSystem sys;
        sys.h_weight_ = h_weight;
        sys.drift_ = drift_eigenvalues.asDiagonal();
        sys.eigenvalues_ = std::move(drift_eigenvalues);
        sys.eigenvectors_ = Mat::Identity(sys.eigenvalues_.size(), sys.eigenvalues_.size());
        sys.diagonal_ = true;
        sys.finish();
        return sys;
    }

    int dim() const { return static_cast<int>(eigenvalues_.size()); }
    double h_weight() const { return h_weight_; }
    double omega() const { return omega_; }
    bool is_diagonal() const { return diagonal_; }
    const Mat& drift() const { return drift_; }
    const Vec& eigenvalues() const { return eigenvalues_; }
    const Mat& eigenvectors() const { return eigenvectors_; }

    // Coordinate standard deviation of the noise per unit time.
    double noise_scale() const { return 1.0 / std::sqrt(h_weight_); }

    // Operator covariance of the reference Gaussian, Q = (-2A)^{-1}.
    const Mat& q() const { return q_; }
    double trace_q() const { return trace_q_; }

    // Coordinate covariance of the reference Gaussian.
    const Mat& stationary_cov() const { return stationary_cov_; }

    double h_inner(const Vec& a, const Vec& b) const { return h_weight_ * a.dot(b); }
    double h_norm(const Vec& a) const { return std::sqrt(h_weight_) * a.norm(); }

    Vec semigroup_action(double t, const Vec& x) const {
        if (t < 0) throw ConfigError("semigroup time must be nonnegative");
        if (x.size() != dim()) throw ConfigError("state dimension mismatch");
        if (diagonal_) return (eigenvalues_.array() * t).exp().matrix().cwiseProduct(x);
        return eigenvectors_ *
               ((eigenvalues_.array() * t).exp().matrix().cwiseProduct(eigenvectors_.transpose() * x));
    }

    Mat exp_drift(double t) const {
        if (t < 0) throw ConfigError("semigroup time must be nonnegative");
        if (diagonal_) return Mat((eigenvalues_.array() * t).exp().matrix().asDiagonal());
        return eigenvectors_ * (eigenvalues_.array() * t).exp().matrix().asDiagonal() *
               eigenvectors_.transpose();
    }

    // Coordinate covariance of X_t given X_0 with zero potential.
    Mat transition_cov(double t) const {
        const Vec factors =
            (1.0 - (2.0 * t * eigenvalues_.array()).exp()).matrix().cwiseProduct(mode_variance_);
        if (diagonal_) return Mat(factors.asDiagonal());
        return eigenvectors_ * factors.asDiagonal() * eigenvectors_.transpose();
    }

    // Per-eigenmode stationary variance (coordinates).
    const Vec& mode_variance() const { return mode_variance_; }

    Vec sample_stationary(rng::Stream& stream) const {
        Vec z(dim());
        for (int i = 0; i < dim(); ++i)
            z[i] = std::sqrt(mode_variance_[i]) * stream.gaussian();
        if (diagonal_) return z;
        return eigenvectors_ * z;
    }

    // Optional diagnostic norm with per-eigenmode weights.
    void set_norm_weights(Vec w) {
        if (w.size() != dim()) throw ConfigError("norm weights dimension mismatch");
        if (w.minCoeff() <= 0) throw ConfigError("norm weights must be positive");
        norm_weights_ = std::move(w);
    }

    bool has_norm_weights() const { return norm_weights_.has_value(); }
    const Vec& norm_weights() const { return *norm_weights_; }

    double weighted_norm(const Vec& x) const {
        if (!norm_weights_) return h_norm(x);
        const Vec z = diagonal_ ? x : Vec(eigenvectors_.transpose() * x);
        return std::sqrt(h_weight_ * z.cwiseProduct(z).dot(*norm_weights_));
    }

    // c with (1/c) |x|_H <= |x|_weighted <= c |x|_H, attained on eigenmodes.
    double norm_equivalence_constant() const {
        if (!norm_weights_) return 1.0;
        const double wmax = norm_weights_->maxCoeff();
        const double wmin = norm_weights_->minCoeff();
        return std::max(std::sqrt(wmax), 1.0 / std::sqrt(wmin));
    }

  private:
    void finish() {
        if (eigenvalues_.size() == 0) throw ConfigError("empty system");
        if (eigenvalues_.maxCoeff() >= -1e-12)
            throw ConfigError("drift spectrum must be strictly negative");
        omega_ = -eigenvalues_.maxCoeff();
        const Vec q_modes = (-2.0 * eigenvalues_.array()).inverse().matrix();
        trace_q_ = q_modes.sum();
        mode_variance_ = q_modes / h_weight_;
        if (diagonal_) {
            q_ = q_modes.asDiagonal();
            stationary_cov_ = mode_variance_.asDiagonal();
        } else {
            q_ = eigenvectors_ * q_modes.asDiagonal() * eigenvectors_.transpose();
            stationary_cov_ = q_ / h_weight_;
        }
    }

    Mat drift_;
    Vec eigenvalues_;
    Mat eigenvectors_;
    bool diagonal_ = false;
    double h_weight_ = 1.0;
    double omega_ = 0.0;
    double trace_q_ = 0.0;
    Mat q_;
    Mat stationary_cov_;
    Vec mode_variance_;
    std::optional<Vec> norm_weights_;
};

// One-dimensional Ornstein-Uhlenbeck drift dX = -omega X dt + dW.
inline LinearSystem ou_system(double omega) {
    if (!(omega > 0)) throw ConfigError("omega must be positive");
    return LinearSystem::diagonal(vec1(-omega));
}

// Draw independent samples of the reference Gaussian; row p is sample p.
inline Mat sample_base_gaussian(const LinearSystem& sys, int count, std::uint64_t master_seed) {
    Mat out(count, sys.dim());
    for (int p = 0; p < count; ++p) {
        rng::Stream stream(master_seed, rng::kTagInitialState, static_cast<std::uint64_t>(p));
        out.row(p) = sys.sample_stationary(stream).transpose();
    }
    return out;
}

}  // namespace moyo
