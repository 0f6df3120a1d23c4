#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "clcp/channel/dataset.hpp"
#include "clcp/channel/scenario.hpp"
#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"
#include "clcp/harness/config.hpp"
#include "clcp/nn/batch.hpp"

namespace clcp::harness {

/// Train/test windows of one scenario in the task sequence.
struct TaskData {
    std::string name;
    channel::ScenarioConfig scenario;
    std::vector<nn::Sample> train;
    std::vector<nn::Sample> test;

    [[nodiscard]] std::size_t d_in() const noexcept {
        return 2 * scenario.n_rb * scenario.n_tx * scenario.n_rx;
    }
};

[[nodiscard]] inline channel::ScenarioConfig scenario_for(const DataConfig& data, const std::string& name) {
    auto s = channel::scenario_preset(name);
    if (!data.full_scale) {
        s.n_tx = data.n_tx;
        s.n_rb = data.n_rb;
        s.n_rx = data.n_rx;
    }
    return s;
}

/// Sliding windows over one user track [T x n_rb x n_tx x n_rx]: `seq_len`
/// consecutive snapshots predict the next one. Each pair is divided by the
/// RMS amplitude of its window, which removes the large-scale gain without
/// looking at the target.
inline void append_windows(const ComplexTensor& track, std::size_t seq_len, std::size_t stride,
                           std::size_t max_windows, std::vector<nn::Sample>& out) {
    const std::size_t steps = track.shape().front();
    const std::size_t per_step = track.size() / steps;
    Shape window_shape = track.shape();
    window_shape.front() = seq_len;
    const Shape target_shape(track.shape().begin() + 1, track.shape().end());
    const auto src = track.data();
    std::size_t made = 0;
    for (std::size_t s = 0; s + seq_len < steps; s += stride) {
        if (max_windows != 0 && made == max_windows) break;
        nn::Sample sample{ComplexTensor(window_shape), ComplexTensor(target_shape)};
        auto w = sample.window.data();
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(s * per_step),
                  src.begin() + static_cast<std::ptrdiff_t>((s + seq_len) * per_step), w.begin());
        auto t = sample.target.data();
        std::copy(src.begin() + static_cast<std::ptrdiff_t>((s + seq_len) * per_step),
                  src.begin() + static_cast<std::ptrdiff_t>((s + seq_len + 1) * per_step), t.begin());
        const double energy = sample.window.squared_norm() / static_cast<double>(sample.window.size());
        if (!(energy > 0.0) || sample.target.squared_norm() == 0.0) continue;
        const double scale = 1.0 / std::sqrt(energy);
        sample.window *= scale;
        sample.target *= scale;
        out.push_back(std::move(sample));
        ++made;
    }
}

/// Users [0, n_train) train, the rest test, so test tracks are unseen.
[[nodiscard]] inline std::size_t train_user_count(std::size_t users, double fraction) {
    const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(users)));
    return std::clamp<std::size_t>(n, 1, users - 1);
}

[[nodiscard]] inline TaskData make_task(const channel::ChannelDataset& ds, const std::string& name,
                                        const DataConfig& data, std::size_t seq_len) {
    require(ds.n_users() >= 2, ErrorCode::missing_data, name + ": need at least two users for a train/test split");
    require(ds.config.n_snapshots > seq_len, ErrorCode::missing_data,
            name + ": tracks are shorter than the sequence length");
    TaskData task;
    task.name = name;
    task.scenario = ds.config;
    const std::size_t n_train = train_user_count(ds.n_users(), data.train_fraction);
    for (std::size_t u = 0; u < ds.n_users(); ++u) {
        auto& dst = u < n_train ? task.train : task.test;
        append_windows(ds.user_track(u), seq_len, data.window_stride, data.max_windows_per_user, dst);
    }
    require(!task.train.empty() && !task.test.empty(), ErrorCode::missing_data, name + ": no usable windows");
    return task;
}

/// Reads `<data_dir>/<name>.ctns` when a data directory is configured,
/// otherwise generates the scenario from `seed`.
[[nodiscard]] inline TaskData load_task(const ExperimentConfig& config, const std::string& name, std::uint64_t seed) {
    if (!config.data.data_dir.empty()) {
        const auto path = config.data.data_dir / (name + ".ctns");
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::missing_data, "dataset " + path.string() + " not found (run `clcp gen` first)");
        }
        return make_task(channel::read_dataset(path), name, config.data, config.model.seq_len);
    }
    const auto scenario = scenario_for(config.data, name);
    const auto ds = channel::generate_dataset(scenario, config.data.users, derive_seed(seed, {fnv1a("data"), fnv1a(name)}));
    return make_task(ds, name, config.data, config.model.seq_len);
}

}  // namespace clcp::harness
