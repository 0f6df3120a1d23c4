#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "clcp/core/error.hpp"

namespace clcp::channel {

inline constexpr double speed_of_light = 299'792'458.0;

enum class Profile { los, nlos };

/// Full parameter set of one propagation scenario.
struct ScenarioConfig {
    std::string name;
    double carrier_hz{5e9};
    double bandwidth_hz{100e6};
    std::size_t n_tx{8};
    std::size_t n_rx{2};
    std::size_t n_rb{18};
    std::size_t n_snapshots{500};
    double track_length_m{2.0};
    double tilt_deg{0.0};
    double spacing_wavelengths{0.5};
    double rx_spacing_wavelengths{0.5};
    double tx_height_m{10.0};
    double ue_height_m{1.5};
    double dist_min_m{50.0};
    double dist_max_m{100.0};
    double pathloss_exponent{3.1};
    double shadowing_sigma_db{4.0};
    double theta3db_deg{10.0};
    double sla_v_db{20.0};
    double g_max_db{8.0};
    double los_scale_m{300.0};
    double los_power_fraction{0.6};
    std::size_t n_clusters{12};
    double delay_spread_s{50e-9};
    double jitter_m{0.1};
    Profile profile{Profile::los};

    [[nodiscard]] double wavelength_m() const noexcept { return speed_of_light / carrier_hz; }
    [[nodiscard]] double subcarrier_spacing_hz() const noexcept {
        return bandwidth_hz / static_cast<double>(n_rb);
    }

    void validate() const {
        require(dist_min_m < dist_max_m, ErrorCode::config, name + ": dist_min_m must be < dist_max_m");
        require(dist_min_m >= 0.0, ErrorCode::config, name + ": negative drop range");
        require(n_tx >= 1 && n_rx >= 1 && n_rb >= 1 && n_snapshots >= 1 && n_clusters >= 1,
                ErrorCode::config, name + ": all counts must be >= 1");
        require(spacing_wavelengths > 0.0 && rx_spacing_wavelengths > 0.0, ErrorCode::config,
                name + ": element spacing must be positive");
        require(theta3db_deg > 0.0, ErrorCode::config, name + ": theta3db_deg must be positive");
        require(carrier_hz > 0.0 && bandwidth_hz > 0.0, ErrorCode::config, name + ": non-positive frequency");
        require(track_length_m >= 0.0 && delay_spread_s >= 0.0 && shadowing_sigma_db >= 0.0 && jitter_m >= 0.0,
                ErrorCode::config, name + ": negative length, delay spread, shadowing or jitter");
        require(los_power_fraction >= 0.0 && los_power_fraction < 1.0, ErrorCode::config,
                name + ": los_power_fraction must be in [0, 1)");
        require(los_scale_m > 0.0, ErrorCode::config, name + ": los_scale_m must be positive");
    }

    bool operator==(const ScenarioConfig&) const = default;
};

/// Median delay spread of the 3GPP UMi street-canyon profile (log10 DS mean).
[[nodiscard]] inline double umi_delay_spread_s(double carrier_hz, Profile profile) {
    const double fc_ghz = carrier_hz / 1e9;
    const double mean = (profile == Profile::los ? -7.14 : -6.83) - 0.24 * std::log10(1.0 + fc_ghz);
    return std::pow(10.0, mean);
}

/// Median delay spread of the 3GPP UMa profile.
[[nodiscard]] inline double uma_delay_spread_s(double carrier_hz, Profile profile) {
    const double fc_ghz = carrier_hz / 1e9;
    const double mean = profile == Profile::los ? -6.955 - 0.0963 * std::log10(fc_ghz)
                                                : -6.28 - 0.204 * std::log10(fc_ghz);
    return std::pow(10.0, mean);
}

namespace detail {

struct Geometry {
    double tilt_deg;
    double spacing;
    std::size_t n_tx;
    double tx_height;
    double ue_height;
    double dist_min;
    double dist_max;
    Profile profile;
};

inline ScenarioConfig make_umi(std::string name, const Geometry& g) {
    ScenarioConfig c;
    c.name = std::move(name);
    c.carrier_hz = 5e9;
    c.bandwidth_hz = 100e6;
    c.n_rb = 18;
    c.n_snapshots = 500;
    c.n_tx = g.n_tx;
    c.n_rx = 2;
    c.tilt_deg = g.tilt_deg;
    c.spacing_wavelengths = g.spacing;
    c.tx_height_m = g.tx_height;
    c.ue_height_m = g.ue_height;
    c.dist_min_m = g.dist_min;
    c.dist_max_m = g.dist_max;
    c.profile = g.profile;
    c.pathloss_exponent = g.profile == Profile::los ? 2.1 : 3.1;
    c.shadowing_sigma_db = g.profile == Profile::los ? 4.0 : 7.82;
    c.delay_spread_s = umi_delay_spread_s(c.carrier_hz, g.profile);
    return c;
}

inline ScenarioConfig make_uma(std::string name, double tilt, double spacing, std::size_t n_tx, std::size_t n_rx) {
    ScenarioConfig c;
    c.name = std::move(name);
    c.carrier_hz = 2.6e9;
    c.bandwidth_hz = 20e6;
    c.n_rb = 18;
    c.n_snapshots = 30;
    c.n_tx = n_tx;
    c.n_rx = n_rx;
    c.tilt_deg = tilt;
    c.spacing_wavelengths = spacing;
    c.tx_height_m = 25.0;
    c.ue_height_m = 1.5;
    c.dist_min_m = 100.0;
    c.dist_max_m = 500.0;
    c.profile = Profile::nlos;
    c.pathloss_exponent = 3.9;
    c.shadowing_sigma_db = 6.0;
    c.delay_spread_s = uma_delay_spread_s(c.carrier_hz, Profile::nlos);
    return c;
}

}  // namespace detail

/// Names of every built-in scenario preset.
[[nodiscard]] inline std::vector<std::string> scenario_names() {
    return {"umi-standard",   "umi-dense",      "umi-compact",   "uma-standard",   "uma-large-hv",
            "uma-small-v",    "umi-standard-a", "umi-dense-a",   "umi-compact-a",  "umi-standard-b",
            "umi-dense-b",    "umi-compact-b",  "umi-standard-c", "umi-dense-c",   "umi-compact-c"};
}

/// Built-in presets: UMi and UMa flavours plus the nine cross-parameterization
/// cells (standard/dense/compact x A/B/C).
[[nodiscard]] inline ScenarioConfig scenario_preset(std::string_view name) {
    using detail::Geometry;
    using detail::make_umi;
    constexpr auto los = Profile::los;
    constexpr auto nlos = Profile::nlos;
    // UMi: 8 tx elements (2x2 dual-polarised panel), 2-element UE.
    if (name == "umi-standard") return make_umi("umi-standard", Geometry{30, 0.50, 8, 10, 1.5, 50, 100, los});
    if (name == "umi-dense") return make_umi("umi-dense", Geometry{10, 0.25, 8, 6, 1.0, 20, 60, nlos});
    if (name == "umi-compact") return make_umi("umi-compact", Geometry{0, 1.00, 8, 15, 2.0, 120, 200, los});

    if (name == "uma-standard") return detail::make_uma("uma-standard", 12, 0.50, 32, 2);
    if (name == "uma-large-hv") return detail::make_uma("uma-large-hv", 10, 0.60, 60, 2);
    if (name == "uma-small-v") return detail::make_uma("uma-small-v", 15, 0.50, 12, 1);

    if (name == "umi-standard-a") return make_umi("umi-standard-a", Geometry{6, 2.0 / 3.0, 16, 35, 1.5, 80, 150, los});
    if (name == "umi-dense-a") return make_umi("umi-dense-a", Geometry{0, 0.25, 4, 10, 1.5, 10, 60, nlos});
    if (name == "umi-compact-a") return make_umi("umi-compact-a", Geometry{30, 2.5, 32, 25, 1.5, 40, 100, los});
    if (name == "umi-standard-b") return make_umi("umi-standard-b", Geometry{8, 1.2, 64, 45, 1.5, 150, 300, los});
    if (name == "umi-dense-b") return make_umi("umi-dense-b", Geometry{0, 0.15, 2, 6, 1.5, 5, 30, nlos});
    // Mounting height of compact-B is not published; it shares compact-A's 25 m.
    if (name == "umi-compact-b") return make_umi("umi-compact-b", Geometry{35, 3.0, 32, 25, 1.5, 40, 120, los});
    if (name == "umi-standard-c") return make_umi("umi-standard-c", Geometry{0, 1.0, 16, 25, 1.5, 100, 180, los});
    if (name == "umi-dense-c") return make_umi("umi-dense-c", Geometry{-15, 0.5, 8, 3, 1.5, 2, 15, nlos});
    if (name == "umi-compact-c") return make_umi("umi-compact-c", Geometry{20, 2.0, 36, 30, 1.5, 60, 140, los});

    throw Error(ErrorCode::config, "unknown scenario preset '" + std::string(name) + "'");
}

}  // namespace clcp::channel
