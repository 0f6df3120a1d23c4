#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "clcp/core/error.hpp"

namespace clcp {

/// Central-difference gradient, (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
/// Used as an independent oracle for the analytic gradients.
template <std::invocable<std::span<const double>> LossFn>
[[nodiscard]] std::vector<double> finite_diff_grad(LossFn&& loss_fn, std::span<const double> theta, double h) {
    require(h > 0.0, ErrorCode::invalid_argument, "finite_diff_grad: step must be positive");
    std::vector<double> probe(theta.begin(), theta.end());
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double original = probe[i];
        probe[i] = original + h;
        const double up = loss_fn(std::span<const double>(probe));
        probe[i] = original - h;
        const double down = loss_fn(std::span<const double>(probe));
        probe[i] = original;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw Error(ErrorCode::non_finite,
                        "finite_diff_grad: non-finite loss at coordinate " + std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace clcp
