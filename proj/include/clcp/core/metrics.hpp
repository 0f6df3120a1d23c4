#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "clcp/core/error.hpp"
#include "clcp/core/tensor.hpp"

namespace clcp {

/// Power ratio in decibels.
struct DbValue {
    double value{0.0};

    [[nodiscard]] static DbValue from_linear(double ratio) noexcept { return {10.0 * std::log10(ratio)}; }
    [[nodiscard]] static constexpr DbValue infinite() noexcept {
        return {std::numeric_limits<double>::infinity()};
    }

    [[nodiscard]] double linear() const noexcept { return std::pow(10.0, value / 10.0); }
    [[nodiscard]] bool is_infinite() const noexcept { return std::isinf(value) && value > 0; }

    auto operator<=>(const DbValue&) const = default;
};

[[nodiscard]] inline double to_db(double ratio) noexcept { return DbValue::from_linear(ratio).value; }
[[nodiscard]] inline double from_db(double db) noexcept { return DbValue{db}.linear(); }

/// ||H - H_hat||_F^2 / ||H||_F^2 for a single sample.
template <std::floating_point Real>
[[nodiscard]] double nmse(const BasicComplexTensor<Real>& truth, const BasicComplexTensor<Real>& prediction) {
    require(truth.shape() == prediction.shape(), ErrorCode::shape_mismatch,
            "nmse: " + shape_string(truth.shape()) + " vs " + shape_string(prediction.shape()));
    double err = 0.0;
    double ref = 0.0;
    const auto t = truth.data();
    const auto p = prediction.data();
    for (std::size_t i = 0; i < t.size(); ++i) {
        err += std::norm(std::complex<double>(t[i]) - std::complex<double>(p[i]));
        ref += std::norm(std::complex<double>(t[i]));
    }
    require(ref > 0.0, ErrorCode::degenerate_sample, "nmse: target has zero Frobenius norm");
    return err / ref;
}

/// Arithmetic mean of per-sample NMSE ratios (not a ratio of sums).
template <std::floating_point Real>
[[nodiscard]] double nmse_batch(std::span<const BasicComplexTensor<Real>> truths,
                                std::span<const BasicComplexTensor<Real>> predictions) {
    require(truths.size() == predictions.size(), ErrorCode::shape_mismatch,
            "nmse_batch: batch sizes differ");
    require(!truths.empty(), ErrorCode::invalid_argument, "nmse_batch: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) acc += nmse(truths[i], predictions[i]);
    return acc / static_cast<double>(truths.size());
}

}  // namespace clcp
