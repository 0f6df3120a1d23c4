#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace clcp::nn {

template <class Derived>
[[nodiscard]] Eigen::ArrayXXd sigmoid(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 / (1.0 + (-x).exp());
}

inline constexpr double gelu_k = 0.044715;

/// tanh approximation of GELU.
[[nodiscard]] inline double gelu(double u) noexcept {
    const double c = std::sqrt(2.0 / std::numbers::pi);
    return 0.5 * u * (1.0 + std::tanh(c * (u + gelu_k * u * u * u)));
}

[[nodiscard]] inline double gelu_grad(double u) noexcept {
    const double c = std::sqrt(2.0 / std::numbers::pi);
    const double t = std::tanh(c * (u + gelu_k * u * u * u));
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * c * (1.0 + 3.0 * gelu_k * u * u);
}

}  // namespace clcp::nn
