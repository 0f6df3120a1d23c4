#pragma once

#include <cmath>

namespace clcp {

/// Bessel function of the first kind, order zero. J0 is even, so the
/// argument is folded onto the non-negative axis before evaluation.
[[nodiscard]] inline double bessel_j0(double x) {
    return std::cyl_bessel_j(0.0, std::fabs(x));
}

}  // namespace clcp
