#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "clcp/channel/geometry.hpp"
#include "clcp/channel/scenario.hpp"
#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"
#include "clcp/core/tensor.hpp"

namespace clcp::channel {

struct Cluster {
    std::complex<double> amplitude;
    double delay_s{0.0};
    double departure_rad{0.0};  ///< angle seen by the transmit array
    double arrival_rad{0.0};    ///< azimuth of the incoming plane wave at the UE
    Vec3 wavevector{};          ///< rad/m, |k| = 2 pi / lambda
};

using ClusterSet = std::vector<Cluster>;

/// Draws the cluster parameters of one link. Amplitudes are complex Gaussian
/// normalised to unit total power; delays are exponential with mean equal to
/// the configured delay spread; all angles are uniform on the scatterer ring.
/// A LOS link concentrates `los_power_fraction` of the power in a zero-delay
/// cluster (index 0).
[[nodiscard]] inline ClusterSet draw_clusters(const ScenarioConfig& config, LinkState state, Rng& rng) {
    const std::size_t n = config.n_clusters;
    const double k_mag = 2.0 * std::numbers::pi / config.wavelength_m();
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::exponential_distribution<double> delay(config.delay_spread_s > 0.0 ? 1.0 / config.delay_spread_s : 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

    ClusterSet clusters(n);
    for (auto& c : clusters) {
        c.amplitude = {gauss(rng), gauss(rng)};
        c.delay_s = config.delay_spread_s > 0.0 ? delay(rng) : 0.0;
        c.departure_rad = angle(rng);
        c.arrival_rad = angle(rng);
        c.wavevector = {k_mag * std::cos(c.arrival_rad), k_mag * std::sin(c.arrival_rad), 0.0};
    }

    const bool dominant = state == LinkState::los && n > 1;
    const std::size_t first_diffuse = dominant ? 1 : 0;
    double diffuse_power = 0.0;
    for (std::size_t l = first_diffuse; l < n; ++l) diffuse_power += std::norm(clusters[l].amplitude);
    require(diffuse_power > 0.0, ErrorCode::degenerate_sample, "draw_clusters: zero cluster power");

    const double diffuse_share = dominant ? 1.0 - config.los_power_fraction : 1.0;
    const double scale = std::sqrt(diffuse_share / diffuse_power);
    for (std::size_t l = first_diffuse; l < n; ++l) clusters[l].amplitude *= scale;
    if (dominant) {
        const double phase = std::arg(clusters[0].amplitude);
        clusters[0].amplitude = std::polar(std::sqrt(config.los_power_fraction), phase);
        clusters[0].delay_s = 0.0;
    }
    return clusters;
}

namespace detail {

/// Per-cluster space-frequency signature over [n_rb x n_tx x n_rx]:
/// exp(-j 2 pi k df tau) * exp(+j 2 pi d_tx m sin theta) * exp(+j 2 pi d_rx n sin psi).
inline std::vector<std::complex<double>> cluster_signature(const Cluster& c, const ScenarioConfig& config) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double df = config.subcarrier_spacing_hz();
    std::vector<std::complex<double>> sig(config.n_rb * config.n_tx * config.n_rx);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < config.n_rb; ++k) {
        const double ramp = -two_pi * static_cast<double>(k) * df * c.delay_s;
        for (std::size_t m = 0; m < config.n_tx; ++m) {
            const double tx =
                two_pi * config.spacing_wavelengths * static_cast<double>(m) * std::sin(c.departure_rad);
            for (std::size_t r = 0; r < config.n_rx; ++r) {
                const double rx =
                    two_pi * config.rx_spacing_wavelengths * static_cast<double>(r) * std::sin(c.arrival_rad);
                sig[idx++] = std::polar(1.0, ramp + tx + rx);
            }
        }
    }
    return sig;
}

inline std::complex<double> motion_phase(const Cluster& c, const Vec3& p) {
    const double phase = c.wavevector[0] * p[0] + c.wavevector[1] * p[1] + c.wavevector[2] * p[2];
    return std::polar(1.0, -phase);
}

}  // namespace detail

/// Cluster-sum channel of one snapshot, shape [n_rb x n_tx x n_rx].
[[nodiscard]] inline ComplexTensor synthesize_channel(const UserTrack& track, const ClusterSet& clusters,
                                                      const ScenarioConfig& config, std::size_t t) {
    require(!clusters.empty(), ErrorCode::invalid_argument, "synthesize_channel: empty cluster set");
    require(t < track.n_snapshots, ErrorCode::index_out_of_range, "synthesize_channel: snapshot out of range");
    ComplexTensor h({config.n_rb, config.n_tx, config.n_rx});
    const Vec3 p = track.position(t);
    for (const auto& c : clusters) {
        const auto coeff = c.amplitude * detail::motion_phase(c, p);
        const auto sig = detail::cluster_signature(c, config);
        for (std::size_t i = 0; i < sig.size(); ++i) h[i] += coeff * sig[i];
    }
    return h;
}

/// Whole track, shape [T x n_rb x n_tx x n_rx].
[[nodiscard]] inline ComplexTensor synthesize_track(const UserTrack& track, const ClusterSet& clusters,
                                                    const ScenarioConfig& config) {
    require(!clusters.empty(), ErrorCode::invalid_argument, "synthesize_track: empty cluster set");
    const std::size_t spatial = config.n_rb * config.n_tx * config.n_rx;
    ComplexTensor h({track.n_snapshots, config.n_rb, config.n_tx, config.n_rx});
    std::vector<std::vector<std::complex<double>>> sigs;
    sigs.reserve(clusters.size());
    for (const auto& c : clusters) sigs.push_back(detail::cluster_signature(c, config));
    auto out = h.data();
    for (std::size_t t = 0; t < track.n_snapshots; ++t) {
        const Vec3 p = track.position(t);
        auto* row = out.data() + t * spatial;
        for (std::size_t l = 0; l < clusters.size(); ++l) {
            const auto coeff = clusters[l].amplitude * detail::motion_phase(clusters[l], p);
            const auto& sig = sigs[l];
            for (std::size_t i = 0; i < spatial; ++i) row[i] += coeff * sig[i];
        }
    }
    return h;
}

}  // namespace clcp::channel
