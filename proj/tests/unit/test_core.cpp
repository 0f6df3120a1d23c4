#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "clcp/core/error.hpp"
#include "clcp/core/finite_diff.hpp"
#include "clcp/core/metrics.hpp"
#include "clcp/core/noise.hpp"
#include "clcp/core/random.hpp"
#include "clcp/core/special.hpp"
#include "clcp/core/tensor.hpp"

using namespace clcp;

namespace {

// Power series J0(x) = sum_k (-1)^k (x/2)^{2k} / (k!)^2 in extended precision,
// summed until the terms vanish. Independent of the library implementation.
double j0_series(double x) {
    long double term = 1.0L;
    long double sum = 1.0L;
    const long double q = static_cast<long double>(x) * x / 4.0L;
    for (int k = 1; k < 400; ++k) {
        term *= -q / (static_cast<long double>(k) * k);
        sum += term;
        if (std::abs(term) < 1e-22L) break;
    }
    return static_cast<double>(sum);
}

// Root of the series between a and b by bisection.
double bisect_root(double a, double b) {
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        if ((j0_series(a) > 0) == (j0_series(m) > 0)) {
            a = m;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

ComplexTensor vec(std::vector<std::complex<double>> v) {
    const std::size_t n = v.size();
    return ComplexTensor({n}, std::move(v));
}

}  // namespace

TEST(Tensor, ShapeMustMatchStorage) {
    EXPECT_THROW(ComplexTensor({2, 3}, std::vector<std::complex<double>>(5)), Error);
    ComplexTensor t({2, 3});
    EXPECT_EQ(t.size(), 6u);
    t.at(1, 2) = {1.0, -1.0};
    EXPECT_EQ(t[5], std::complex<double>(1.0, -1.0));
    EXPECT_EQ(t.offset(1, 0), 3u);
}

TEST(Tensor, CastRoundTripsThroughFloat) {
    ComplexTensor t({3}, {{0.5, 0.25}, {-1.0, 2.0}, {0.0, 0.0}});
    EXPECT_EQ(t.cast<float>().cast<double>(), t);
}

TEST(Db, RoundTripIsTight) {
    for (const double x : {1e-9, 1e-3, 0.02, 1.0, 17.5, 1e6}) {
        const double back = DbValue::from_linear(x).linear();
        EXPECT_LE(std::abs(back - x) / x, 1e-12) << x;
    }
    EXPECT_NEAR(to_db(0.02), -16.9897, 1e-4);
    EXPECT_DOUBLE_EQ(to_db(1.0), 0.0);
}

TEST(Nmse, Examples) {
    const auto h = vec({{1.0, 0.0}, {0.0, 0.0}});
    EXPECT_DOUBLE_EQ(nmse(h, h), 0.0);
    EXPECT_DOUBLE_EQ(nmse(h, vec({{0.0, 0.0}, {0.0, 0.0}})), 1.0);
    // |1 - 0.9|^2 + |0 - 0.1|^2 = 0.02 over |1|^2.
    const double v = nmse(h, vec({{0.9, 0.0}, {0.1, 0.0}}));
    EXPECT_NEAR(v, 0.02, 1e-15);
    EXPECT_NEAR(to_db(v), -16.99, 0.005);
}

TEST(Nmse, Errors) {
    EXPECT_THROW((void)nmse(vec({{1, 0}}), vec({{1, 0}, {0, 0}})), Error);
    try {
        (void)nmse(vec({{0, 0}}), vec({{1, 0}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_sample);
    }
}

TEST(Nmse, ScaleCovarianceAndPhaseInvariance) {
    const auto h = vec({{1.0, 2.0}, {-0.5, 0.25}, {3.0, -1.0}});
    const auto e = vec({{0.1, -0.2}, {0.3, 0.0}, {-0.05, 0.4}});
    auto add = [](const ComplexTensor& a, const ComplexTensor& b, double c) {
        ComplexTensor out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * b[i];
        return out;
    };
    const double base = nmse(h, add(h, e, 1.0));
    EXPECT_NEAR(nmse(h, add(h, e, 3.0)), 9.0 * base, 1e-12);
    const std::complex<double> rot = std::polar(1.0, 0.7);
    ComplexTensor hr = h;
    ComplexTensor pr = add(h, e, 1.0);
    hr *= rot;
    pr *= rot;
    EXPECT_NEAR(nmse(hr, pr), base, 1e-14);
    EXPECT_GE(base, 0.0);
}

TEST(Nmse, BatchIsMeanOfRatios) {
    const std::vector<ComplexTensor> truth{vec({{1, 0}}), vec({{10, 0}})};
    const std::vector<ComplexTensor> pred{vec({{0, 0}}), vec({{10, 1}})};
    // Ratios 1 and 0.01; the ratio of sums would be 2/101.
    EXPECT_NEAR(nmse_batch<double>(truth, pred), 0.505, 1e-15);
}

TEST(BesselJ0, Examples) {
    EXPECT_DOUBLE_EQ(bessel_j0(0.0), 1.0);
    const double x = 2.0 * std::numbers::pi / 15.0;
    const double four_terms = 1 - x * x / 4 + std::pow(x, 4) / 64 - std::pow(x, 6) / 2304;
    EXPECT_NEAR(bessel_j0(x), four_terms, 1e-8);
    EXPECT_NEAR(bessel_j0(x), 0.9566, 5e-5);
    const double root = bisect_root(2.0, 3.0);
    EXPECT_NEAR(root, 2.404826, 1e-6);
    EXPECT_NEAR(bessel_j0(root), 0.0, 1e-10);
    EXPECT_NEAR(bessel_j0(2.404826), 0.0, 1e-6);
}

TEST(BesselJ0, MatchesSeriesOracle) {
    for (double x = -1.0; x <= 1.0; x += 0.01) EXPECT_NEAR(bessel_j0(x), j0_series(x), 1e-8) << x;
    // The alternating series cancels badly for large |x|; in extended
    // precision it stays well inside the 1e-10 contract up to |x| = 20.
    for (double x = 0.0; x <= 20.0; x += 0.37) EXPECT_NEAR(bessel_j0(x), j0_series(x), 1e-10) << x;
}

TEST(BesselJ0, LargeArgumentsAgainstAsymptotics) {
    // Hankel expansion J0 = sqrt(2/(pi x)) (P cos w - Q sin w), w = x - pi/4,
    // with a_k = prod_{j<=k} (2j-1)^2 / (k! (8x)^k); P and Q take the even and
    // odd terms with alternating signs. Twelve terms are ample for x >= 25.
    for (double x = 25.0; x <= 50.0; x += 0.7) {
        double a = 1.0;
        double P = 1.0;
        double Q = 0.0;
        for (int k = 1; k <= 12; ++k) {
            a *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * 8.0 * x);
            if (k % 2 == 0) {
                P += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * a;
            } else {
                Q += (((k + 1) / 2) % 2 == 0 ? 1.0 : -1.0) * a;
            }
        }
        const double w = x - std::numbers::pi / 4.0;
        const double approx = std::sqrt(2.0 / (std::numbers::pi * x)) * (P * std::cos(w) - Q * std::sin(w));
        EXPECT_NEAR(bessel_j0(x), approx, 1e-10) << x;
    }
}

TEST(Awgn, InfiniteSnrIsIdentity) {
    ComplexTensor x({4}, {{1, 2}, {3, 4}, {-1, 0}, {0, 0.5}});
    Rng rng(1);
    EXPECT_EQ(awgn_corrupt(x, DbValue::infinite(), rng), x);
}

TEST(Awgn, ZeroDbNoisePowerMatchesSignal) {
    const std::size_t n = 1'000'000;
    ComplexTensor x({n});
    for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(1.0 + 0.5 * std::sin(0.001 * i), 0.3 * i);
    const double signal = x.squared_norm() / static_cast<double>(n);
    Rng rng(7);
    const auto y = awgn_corrupt(x, DbValue{0.0}, rng);
    double noise = 0.0;
    std::complex<double> mean{};
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = y[i] - x[i];
        noise += std::norm(d);
        mean += d;
    }
    noise /= static_cast<double>(n);
    mean /= static_cast<double>(n);
    const double ratio = noise / signal;
    EXPECT_GE(ratio, 0.99);
    EXPECT_LE(ratio, 1.01);
    // Each component has variance signal/2; 3 sigma of the mean of n draws.
    const double sigma_mean = std::sqrt(signal / 2.0 / static_cast<double>(n));
    EXPECT_LE(std::abs(mean.real()), 3 * sigma_mean);
    EXPECT_LE(std::abs(mean.imag()), 3 * sigma_mean);
    EXPECT_EQ(y.shape(), x.shape());
}

TEST(Awgn, DeterministicUnderSeed) {
    ComplexTensor x({64});
    for (std::size_t i = 0; i < 64; ++i) x[i] = {std::cos(i * 0.1), std::sin(i * 0.3)};
    Rng a(42);
    Rng b(42);
    EXPECT_EQ(awgn_corrupt(x, DbValue{10.0}, a), awgn_corrupt(x, DbValue{10.0}, b));
}

TEST(Awgn, ZeroEnergyRejected) {
    ComplexTensor x({8});
    Rng rng(3);
    EXPECT_THROW((void)awgn_corrupt(x, DbValue{10.0}, rng), Error);
}

TEST(FiniteDiff, Examples) {
    const std::vector<double> p{1.0, 2.0};
    const auto zero = finite_diff_grad([](std::span<const double>) { return 3.5; }, p, 1e-5);
    EXPECT_EQ(zero, (std::vector<double>{0.0, 0.0}));

    const auto sq = finite_diff_grad(
        [](std::span<const double> t) { return t[0] * t[0] + t[1] * t[1]; }, p, 1e-5);
    EXPECT_NEAR(sq[0], 2.0, 1e-8);
    EXPECT_NEAR(sq[1], 4.0, 1e-8);

    const std::vector<double> q{3.0, 5.0};
    const auto prod = finite_diff_grad([](std::span<const double> t) { return t[0] * t[1]; }, q, 1e-5);
    EXPECT_NEAR(prod[0], 5.0, 1e-8);
    EXPECT_NEAR(prod[1], 3.0, 1e-8);
}

TEST(FiniteDiff, NonFiniteNamesCoordinate) {
    const std::vector<double> p{1.0, 0.0};
    try {
        (void)finite_diff_grad([](std::span<const double> t) { return t[1] > 0 ? std::log(-1.0) : 0.0; }, p, 1e-5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_finite);
        EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
    }
    EXPECT_THROW((void)finite_diff_grad([](std::span<const double>) { return 0.0; }, p, 0.0), Error);
}

TEST(Random, SubstreamsAreStableAndDistinct) {
    EXPECT_EQ(derive_seed(5, {1, 2}), derive_seed(5, {1, 2}));
    EXPECT_NE(derive_seed(5, {1, 2}), derive_seed(5, {2, 1}));
    EXPECT_NE(derive_seed(5, {1}), derive_seed(6, {1}));
}
