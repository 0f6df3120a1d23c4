#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "clcp/core/random.hpp"
#include "clcp/core/tensor.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/parameters.hpp"

namespace clcp::oracle {

/// Coordinates whose analytic and numeric derivatives are both below this
/// magnitude are compared absolutely: with h = 1e-5 and O(1) losses the
/// central difference carries roughly 1e-11 of rounding noise, so a floor of
/// 1e-6 keeps that noise two orders of magnitude under the 1e-4 tolerance.
inline constexpr double gradient_floor = 1e-6;

[[nodiscard]] inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), gradient_floor});
    return std::abs(analytic - numeric) / scale;
}

struct GradReport {
    double max_rel{0.0};
    std::string worst_block;
    std::size_t worst_index{0};
};

[[nodiscard]] inline GradReport compare_gradients(const nn::ParameterLayout& layout, std::span<const double> analytic,
                                                  std::span<const double> numeric) {
    GradReport r;
    for (const auto& b : layout.blocks()) {
        for (std::size_t i = b.offset; i < b.offset + b.size(); ++i) {
            const double e = relative_error(analytic[i], numeric[i]);
            if (e > r.max_rel) {
                r.max_rel = e;
                r.worst_block = b.name;
                r.worst_index = i;
            }
        }
    }
    return r;
}

/// Gaussian sample with a [T x n_rb x n_tx x n_rx] window and the next-slot target.
[[nodiscard]] inline nn::Sample random_sample(Rng& rng, std::size_t T, std::size_t n_rb, std::size_t n_tx,
                                              std::size_t n_rx) {
    std::normal_distribution<double> g(0.0, 1.0);
    nn::Sample s{ComplexTensor({T, n_rb, n_tx, n_rx}), ComplexTensor({n_rb, n_tx, n_rx})};
    for (auto& v : s.window.data()) v = {g(rng), g(rng)};
    for (auto& v : s.target.data()) v = {g(rng), g(rng)};
    return s;
}

/// Upper-tail p-value of Pearson's statistic for observed counts against a
/// uniform expectation over the cells.
[[nodiscard]] inline double chi_square_uniform_p(std::span<const std::size_t> counts) {
    double total = 0.0;
    for (const auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (const auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace clcp::oracle
