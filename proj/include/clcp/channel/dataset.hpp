#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcp/channel/clusters.hpp"
#include "clcp/channel/ctns.hpp"
#include "clcp/channel/geometry.hpp"
#include "clcp/channel/scenario.hpp"
#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"
#include "clcp/core/tensor.hpp"

namespace clcp::channel {

NLOHMANN_JSON_SERIALIZE_ENUM(Profile, {{Profile::los, "los"}, {Profile::nlos, "nlos"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScenarioConfig, name, carrier_hz, bandwidth_hz, n_tx, n_rx, n_rb, n_snapshots,
                                   track_length_m, tilt_deg, spacing_wavelengths, rx_spacing_wavelengths, tx_height_m,
                                   ue_height_m, dist_min_m, dist_max_m, pathloss_exponent, shadowing_sigma_db,
                                   theta3db_deg, sla_v_db, g_max_db, los_scale_m, los_power_fraction, n_clusters,
                                   delay_spread_s, jitter_m, profile)

/// Generated channel tensor for one scenario and one Monte-Carlo iteration.
/// In memory the tensor is complex with axes [time, rb, tx, rx, user].
struct ChannelDataset {
    ComplexTensor32 tensor;
    ScenarioConfig config;
    std::uint64_t seed{0};
    std::uint32_t iteration{0};
    std::vector<bool> los;
    std::vector<double> gain_db;

    [[nodiscard]] std::size_t n_users() const noexcept { return los.size(); }

    /// Channel history of one user as a [T x n_rb x n_tx x n_rx] tensor.
    [[nodiscard]] ComplexTensor user_track(std::size_t user) const {
        require(user < n_users(), ErrorCode::index_out_of_range, "user_track: user index out of range");
        const std::size_t users = n_users();
        ComplexTensor out({config.n_snapshots, config.n_rb, config.n_tx, config.n_rx});
        auto src = tensor.data();
        auto dst = out.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::complex<double>(src[i * users + user]);
        return out;
    }

    bool operator==(const ChannelDataset&) const = default;
};

/// Axis order on disk: [time, rx, rb, tx, user]; the UMi preset therefore
/// serializes as [500 x 2 x 18 x 8 x 256] with interleaved real/imag floats.
[[nodiscard]] inline Shape on_disk_shape(const ScenarioConfig& config, std::size_t n_users) {
    return {config.n_snapshots, config.n_rx, config.n_rb, config.n_tx, n_users};
}

/// Deterministic per (config, n_users, seed, iteration). Every user draws from
/// its own substream, so user u is identical regardless of n_users. Iterations
/// beyond 0 displace each starting position by at most `jitter_m` while keeping
/// the clusters, LOS state and large-scale gain of the user.
[[nodiscard]] inline ChannelDataset generate_dataset(const ScenarioConfig& config, std::size_t n_users,
                                                     std::uint64_t seed, std::uint32_t iteration = 0) {
    config.validate();
    require(n_users >= 1, ErrorCode::invalid_argument, "generate_dataset: n_users must be >= 1");

    ChannelDataset ds;
    ds.config = config;
    ds.seed = seed;
    ds.iteration = iteration;
    ds.los.resize(n_users);
    ds.gain_db.resize(n_users);
    ds.tensor = ComplexTensor32({config.n_snapshots, config.n_rb, config.n_tx, config.n_rx, n_users});

    const std::size_t per_step = config.n_rb * config.n_tx * config.n_rx;
    auto out = ds.tensor.data();
    for (std::size_t u = 0; u < n_users; ++u) {
        Rng rng = make_rng(seed, {u});
        UserTrack track = drop_user(config, rng);
        const double radius = track.radius_m();
        const LinkState state = los_state(radius, rng, config.los_scale_m);
        const DbValue gain = large_scale_gain(radius, config, rng);
        const ClusterSet clusters = draw_clusters(config, state, rng);

        if (iteration > 0 && config.jitter_m > 0.0) {
            Rng jitter = make_rng(seed, {u, iteration, 0x6A17});
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double r = config.jitter_m * std::sqrt(unit(jitter));
            const double a = 2.0 * std::numbers::pi * unit(jitter);
            track.p0[0] += r * std::cos(a);
            track.p0[1] += r * std::sin(a);
        }

        ds.los[u] = state == LinkState::los;
        ds.gain_db[u] = gain.value;
        const double amplitude = std::pow(10.0, gain.value / 20.0);
        const ComplexTensor h = synthesize_track(track, clusters, config);
        const auto src = h.data();
        for (std::size_t t = 0; t < config.n_snapshots; ++t) {
            for (std::size_t i = 0; i < per_step; ++i) {
                const auto v = src[t * per_step + i] * amplitude;
                out[(t * per_step + i) * n_users + u] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
            }
        }
    }
    return ds;
}

[[nodiscard]] inline std::filesystem::path sidecar_path(const std::filesystem::path& ctns_path) {
    auto p = ctns_path;
    p.replace_extension(".json");
    return p;
}

[[nodiscard]] inline nlohmann::json dataset_metadata(const ChannelDataset& ds) {
    nlohmann::json meta;
    meta["format"] = "clcp-channel-dataset";
    meta["version"] = 1;
    meta["axes"] = {"time", "rx", "rb", "tx", "user"};
    meta["shape"] = on_disk_shape(ds.config, ds.n_users());
    meta["scenario"] = ds.config;
    meta["seed"] = ds.seed;
    meta["iteration"] = ds.iteration;
    meta["n_users"] = ds.n_users();
    meta["los"] = ds.los;
    meta["large_scale_gain_db"] = ds.gain_db;
    return meta;
}

/// Writes the CTNS tensor (32-bit) plus a JSON sidecar next to it.
inline void write_dataset(const ChannelDataset& ds, const std::filesystem::path& ctns_path) {
    const auto& c = ds.config;
    const std::size_t users = ds.n_users();
    std::ofstream out(ctns_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + ctns_path.string() + " for writing");
    io::write_ctns_header(out, io::CtnsHeader{io::ctns_version, on_disk_shape(c, users), io::Precision::f32});

    // Permute [t, rb, tx, rx, u] -> [t, rx, rb, tx, u] one snapshot at a time.
    const std::size_t per_step = c.n_rb * c.n_tx * c.n_rx * users;
    std::vector<std::complex<float>> slab(per_step);
    const auto src = ds.tensor.data();
    for (std::size_t t = 0; t < c.n_snapshots; ++t) {
        const auto* in = src.data() + t * per_step;
        std::size_t k = 0;
        for (std::size_t r = 0; r < c.n_rx; ++r)
            for (std::size_t b = 0; b < c.n_rb; ++b)
                for (std::size_t m = 0; m < c.n_tx; ++m)
                    for (std::size_t u = 0; u < users; ++u)
                        slab[k++] = in[((b * c.n_tx + m) * c.n_rx + r) * users + u];
        io::write_ctns_payload<float>(out, slab, io::Precision::f32);
    }
    if (!out) throw Error(ErrorCode::io, "write failed: " + ctns_path.string());

    std::ofstream side(sidecar_path(ctns_path), std::ios::trunc);
    if (!side) throw Error(ErrorCode::io, "cannot open sidecar for " + ctns_path.string());
    side << dataset_metadata(ds).dump(2) << '\n';
    if (!side) throw Error(ErrorCode::io, "sidecar write failed: " + ctns_path.string());
}

[[nodiscard]] inline ChannelDataset read_dataset(const std::filesystem::path& ctns_path) {
    std::ifstream side(sidecar_path(ctns_path));
    if (!side) throw Error(ErrorCode::io, "missing sidecar for " + ctns_path.string());
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format, std::string("sidecar: ") + e.what());
    }

    ChannelDataset ds;
    try {
        ds.config = meta.at("scenario").get<ScenarioConfig>();
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.iteration = meta.at("iteration").get<std::uint32_t>();
        ds.los = meta.at("los").get<std::vector<bool>>();
        ds.gain_db = meta.at("large_scale_gain_db").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format, std::string("sidecar: ") + e.what());
    }
    const auto& c = ds.config;
    const std::size_t users = ds.los.size();
    require(ds.gain_db.size() == users, ErrorCode::format, "sidecar: per-user arrays differ in length");

    std::ifstream in(ctns_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + ctns_path.string());
    const auto header = io::read_ctns_header(in);
    const Shape expected = on_disk_shape(c, users);
    require(header.dims == expected, ErrorCode::format,
            "header shape " + shape_string(header.dims) + " does not match sidecar " + shape_string(expected));

    ds.tensor = ComplexTensor32({c.n_snapshots, c.n_rb, c.n_tx, c.n_rx, users});
    const std::size_t per_step = c.n_rb * c.n_tx * c.n_rx * users;
    std::vector<std::complex<float>> slab(per_step);
    auto dst = ds.tensor.data();
    for (std::size_t t = 0; t < c.n_snapshots; ++t) {
        io::read_ctns_payload<float>(in, slab, header.precision);
        auto* outp = dst.data() + t * per_step;
        std::size_t k = 0;
        for (std::size_t r = 0; r < c.n_rx; ++r)
            for (std::size_t b = 0; b < c.n_rb; ++b)
                for (std::size_t m = 0; m < c.n_tx; ++m)
                    for (std::size_t u = 0; u < users; ++u)
                        outp[((b * c.n_tx + m) * c.n_rx + r) * users + u] = slab[k++];
    }
    require(ds.tensor.all_finite(), ErrorCode::format, "dataset payload contains non-finite values");
    return ds;
}

}  // namespace clcp::channel
