#pragma once

#include <cmath>
#include <random>

#include "clcp/core/error.hpp"
#include "clcp/core/metrics.hpp"
#include "clcp/core/random.hpp"
#include "clcp/core/tensor.hpp"

namespace clcp {

/// Adds circularly symmetric complex Gaussian noise whose per-entry variance
/// is the mean per-entry signal power divided by 10^(snr/10). An infinite SNR
/// returns the input unchanged and consumes no randomness.
template <std::floating_point Real>
[[nodiscard]] BasicComplexTensor<Real> awgn_corrupt(const BasicComplexTensor<Real>& x, DbValue snr, Rng& rng) {
    require(!x.empty(), ErrorCode::invalid_argument, "awgn_corrupt: empty tensor");
    const double power = static_cast<double>(x.squared_norm()) / static_cast<double>(x.size());
    require(power > 0.0, ErrorCode::degenerate_sample, "awgn_corrupt: zero-energy input");
    require(!std::isnan(snr.value), ErrorCode::invalid_argument, "awgn_corrupt: SNR is NaN");
    if (snr.is_infinite()) {
        return x;
    }
    const double variance = power / snr.linear();
    std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
    BasicComplexTensor<Real> out = x;
    for (auto& v : out.data()) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += std::complex<Real>(static_cast<Real>(re), static_cast<Real>(im));
    }
    require(out.all_finite(), ErrorCode::non_finite, "awgn_corrupt: produced non-finite values");
    return out;
}

}  // namespace clcp
