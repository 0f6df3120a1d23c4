#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "clcp/channel/scenario.hpp"
#include "clcp/core/error.hpp"
#include "clcp/core/metrics.hpp"
#include "clcp/core/random.hpp"
#include "clcp/core/special.hpp"

namespace clcp::channel {

using Vec3 = std::array<double, 3>;

/// Linear user track with equally spaced snapshots.
struct UserTrack {
    Vec3 p0{};
    double azimuth_rad{0.0};
    double length_m{2.0};
    std::size_t n_snapshots{1};
    double step_m{0.0};

    [[nodiscard]] Vec3 position(std::size_t t) const noexcept {
        const double s = step_m * static_cast<double>(t);
        return {p0[0] + s * std::cos(azimuth_rad), p0[1] + s * std::sin(azimuth_rad), p0[2]};
    }

    /// Horizontal distance of the track start from the base station at the origin.
    [[nodiscard]] double radius_m() const noexcept { return std::hypot(p0[0], p0[1]); }
};

[[nodiscard]] inline UserTrack make_track(double radius, double azimuth, double height, double length,
                                          std::size_t n_snapshots) {
    UserTrack track;
    track.p0 = {radius * std::cos(azimuth), radius * std::sin(azimuth), height};
    track.azimuth_rad = azimuth;
    track.length_m = length;
    track.n_snapshots = n_snapshots;
    track.step_m = n_snapshots > 1 ? length / static_cast<double>(n_snapshots - 1) : 0.0;
    return track;
}

/// Draws one user: radius ~ U[dmin, dmax], azimuth ~ U[0, 2pi).
[[nodiscard]] inline UserTrack drop_user(const ScenarioConfig& config, Rng& rng) {
    std::uniform_real_distribution<double> radius(config.dist_min_m, config.dist_max_m);
    std::uniform_real_distribution<double> azimuth(0.0, 2.0 * std::numbers::pi);
    const double d = radius(rng);
    const double phi = azimuth(rng);
    return make_track(d, phi, config.ue_height_m, config.track_length_m, config.n_snapshots);
}

[[nodiscard]] inline std::vector<UserTrack> drop_users(const ScenarioConfig& config, std::size_t n_users, Rng& rng) {
    config.validate();
    require(n_users >= 1, ErrorCode::invalid_argument, "drop_users: n_users must be >= 1");
    std::vector<UserTrack> tracks;
    tracks.reserve(n_users);
    for (std::size_t u = 0; u < n_users; ++u) tracks.push_back(drop_user(config, rng));
    return tracks;
}

enum class LinkState { los, nlos };

/// LOS with probability exp(-d / scale).
[[nodiscard]] inline LinkState los_state(double distance_m, Rng& rng, double scale_m = 300.0) {
    require(distance_m >= 0.0, ErrorCode::invalid_argument, "los_state: negative distance");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < std::exp(-distance_m / scale_m) ? LinkState::los : LinkState::nlos;
}

/// Vertical element pattern G(theta) = Gmax - min(12 ((theta - tilt) / theta3dB)^2, SLA_V).
[[nodiscard]] inline DbValue antenna_gain(double theta_deg, const ScenarioConfig& config) {
    const double x = (theta_deg - config.tilt_deg) / config.theta3db_deg;
    return {config.g_max_db - std::min(12.0 * x * x, config.sla_v_db)};
}

/// Depression angle from the array to a UE at horizontal range R.
[[nodiscard]] inline double elevation_deg(double range_m, const ScenarioConfig& config) {
    return std::atan((config.tx_height_m - config.ue_height_m) / range_m) * 180.0 / std::numbers::pi;
}

/// g_LS(R) = G(theta(R)) - 10 alpha log10(R) + X_sigma. Draws from rng only when sigma > 0.
[[nodiscard]] inline DbValue large_scale_gain(double range_m, const ScenarioConfig& config, Rng& rng) {
    require(range_m > 0.0, ErrorCode::invalid_argument, "large_scale_gain: range must be positive");
    double shadow = 0.0;
    if (config.shadowing_sigma_db > 0.0) {
        std::normal_distribution<double> gauss(0.0, config.shadowing_sigma_db);
        shadow = gauss(rng);
    }
    return {antenna_gain(elevation_deg(range_m, config), config).value -
            10.0 * config.pathloss_exponent * std::log10(range_m) + shadow};
}

/// Isotropic-ring small-scale correlation J0(2 pi |dr| / lambda).
[[nodiscard]] inline double spatial_correlation(double delta_r_m, double wavelength_m) {
    require(wavelength_m > 0.0, ErrorCode::invalid_argument, "spatial_correlation: wavelength must be positive");
    return bessel_j0(2.0 * std::numbers::pi * delta_r_m / wavelength_m);
}

/// Instantaneous-power variance term 2 sum_{k=1}^{N-1} (N-k) J0(2 pi d k)^2 of an
/// N-element uniform array with spacing d (in wavelengths).
[[nodiscard]] inline double gain_variance(std::size_t n_elements, double spacing_wavelengths) {
    require(n_elements >= 1, ErrorCode::invalid_argument, "gain_variance: n_elements must be >= 1");
    double acc = 0.0;
    for (std::size_t k = 1; k < n_elements; ++k) {
        const double rho = bessel_j0(2.0 * std::numbers::pi * spacing_wavelengths * static_cast<double>(k));
        acc += static_cast<double>(n_elements - k) * rho * rho;
    }
    return 2.0 * acc;
}

}  // namespace clcp::channel
