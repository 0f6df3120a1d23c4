#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "clcp/core/error.hpp"
#include "clcp/nn/config.hpp"

namespace clcp::nn {

[[nodiscard]] inline double l2_norm(std::span<const double> v) noexcept {
    double acc = 0.0;
    for (const double x : v) acc += x * x;
    return std::sqrt(acc);
}

/// Factor that shrinks `grad` to norm clip_norm when it is longer (1 otherwise).
[[nodiscard]] inline double clip_scale(std::span<const double> grad, const OptimConfig& optim) {
    if (optim.clip_norm <= 0.0) return 1.0;
    const double norm = l2_norm(grad);
    require(std::isfinite(norm), ErrorCode::non_finite, "optimizer: non-finite gradient");
    return norm > optim.clip_norm ? optim.clip_norm / norm : 1.0;
}

/// theta <- theta - eta * g, with g rescaled to norm clip_norm when it is longer.
/// Returns the scale applied to the gradient.
inline double sgd_step(std::span<double> theta, std::span<const double> grad, const OptimConfig& optim) {
    require(theta.size() == grad.size(), ErrorCode::shape_mismatch, "sgd_step: length mismatch");
    const double scale = clip_scale(grad, optim);
    const double step = optim.learning_rate * scale;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= step * grad[i];
    return scale;
}

/// First-order optimizer with per-run state. Plain SGD keeps no state; Adam
/// keeps bias-corrected first and second moment estimates. Clipping applies
/// to the raw gradient before either rule.
class Optimizer {
public:
    Optimizer(OptimConfig config, std::size_t n_params) : config_(config) {
        config_.validate();
        if (config_.optimizer == OptimizerKind::adam) {
            m_.assign(n_params, 0.0);
            v_.assign(n_params, 0.0);
        }
    }

    [[nodiscard]] const OptimConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::size_t steps() const noexcept { return t_; }

    void step(std::span<double> theta, std::span<const double> grad) {
        require(theta.size() == grad.size(), ErrorCode::shape_mismatch, "optimizer: length mismatch");
        ++t_;
        if (config_.optimizer == OptimizerKind::sgd) {
            (void)sgd_step(theta, grad, config_);
            return;
        }
        require(theta.size() == m_.size(), ErrorCode::shape_mismatch, "optimizer: parameter count changed");
        const double scale = clip_scale(grad, config_);
        const double b1 = config_.adam_beta1;
        const double b2 = config_.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        const double eta = config_.learning_rate;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double g = scale * grad[i];
            m_[i] = b1 * m_[i] + (1.0 - b1) * g;
            v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
            theta[i] -= eta * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.adam_epsilon);
        }
    }

private:
    OptimConfig config_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_{0};
};

}  // namespace clcp::nn
