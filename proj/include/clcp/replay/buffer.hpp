#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcp/channel/ctns.hpp"
#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"
#include "clcp/nn/batch.hpp"

namespace clcp::replay {

/// A stored training pair together with the NMSE it last produced.
struct Experience {
    nn::Sample sample;
    double stored_loss{0.0};

    bool operator==(const Experience&) const = default;
};

enum class EvictionPolicy { uniform, lars };

NLOHMANN_JSON_SERIALIZE_ENUM(EvictionPolicy, {{EvictionPolicy::uniform, "uniform"}, {EvictionPolicy::lars, "lars"}})

inline constexpr double default_lars_epsilon = 1e-8;

/// Eviction distribution Pr[v = i] proportional to 1 / (l_i + eps).
[[nodiscard]] inline std::vector<double> lars_distribution(std::span<const double> losses, double epsilon) {
    require(!losses.empty(), ErrorCode::invalid_argument, "lars: empty loss list");
    require(epsilon > 0.0, ErrorCode::invalid_argument, "lars: epsilon must be positive");
    std::vector<double> p(losses.size());
    double total = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        require(losses[i] >= 0.0 && std::isfinite(losses[i]), ErrorCode::invalid_argument,
                "lars: losses must be finite and nonnegative");
        p[i] = 1.0 / (losses[i] + epsilon);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

[[nodiscard]] inline std::size_t lars_victim(std::span<const double> losses, double epsilon, Rng& rng) {
    const auto p = lars_distribution(losses, epsilon);
    std::discrete_distribution<std::size_t> pick(p.begin(), p.end());
    return pick(rng);
}

/// Fixed-capacity rehearsal memory filled by reservoir sampling. Once full,
/// the t-th offered item is admitted with probability capacity / t and
/// replaces either a uniformly chosen slot or a LARS victim. Acceptance and
/// victim choice draw from two private streams derived from `seed`, so the
/// buffer never perturbs the caller's random sequence.
class ReplayBuffer {
public:
    ReplayBuffer() : ReplayBuffer(0, EvictionPolicy::uniform) {}

    ReplayBuffer(std::size_t capacity, EvictionPolicy policy, std::uint64_t seed = 0,
                 double epsilon = default_lars_epsilon)
        : capacity_(capacity),
          policy_(policy),
          epsilon_(epsilon),
          accept_rng_(make_rng(seed, {fnv1a("replay.accept")})),
          victim_rng_(make_rng(seed, {fnv1a("replay.victim")})) {
        require(epsilon > 0.0, ErrorCode::config, "replay: epsilon must be positive");
    }

    /// Returns true when the item was stored.
    bool insert(Experience e) {
        require(e.stored_loss >= 0.0 && std::isfinite(e.stored_loss), ErrorCode::invalid_argument,
                "replay insert: stored loss must be finite and nonnegative");
        ++stream_count_;
        if (capacity_ == 0) return false;
        if (items_.size() < capacity_) {
            items_.push_back(std::move(e));
            return true;
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double accept = static_cast<double>(capacity_) / static_cast<double>(stream_count_);
        if (unit(accept_rng_) >= accept) return false;
        items_[choose_victim()] = std::move(e);
        return true;
    }

    void refresh_loss(std::size_t index, double loss) {
        require(index < items_.size(), ErrorCode::index_out_of_range,
                "refresh_loss: index " + std::to_string(index) + " out of range");
        require(loss >= 0.0 && std::isfinite(loss), ErrorCode::invalid_argument,
                "refresh_loss: loss must be finite and nonnegative");
        items_[index].stored_loss = loss;
    }

    /// Up to `n` distinct indices, uniformly without replacement.
    [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
        std::vector<std::size_t> all(items_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        if (n >= all.size()) return all;
        // Partial Fisher-Yates: the first n slots end up as the sample.
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
            std::swap(all[i], all[pick(rng)]);
        }
        all.resize(n);
        return all;
    }

    [[nodiscard]] std::vector<double> losses() const {
        std::vector<double> out;
        out.reserve(items_.size());
        for (const auto& e : items_) out.push_back(e.stored_loss);
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::uint64_t stream_count() const noexcept { return stream_count_; }
    [[nodiscard]] EvictionPolicy policy() const noexcept { return policy_; }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] const Experience& operator[](std::size_t i) const { return items_[i]; }
    [[nodiscard]] const std::vector<Experience>& items() const noexcept { return items_; }

    bool operator==(const ReplayBuffer&) const = default;

    friend void save_buffer(const ReplayBuffer&, const std::filesystem::path&);
    friend ReplayBuffer load_buffer(const std::filesystem::path&);

private:
    std::size_t choose_victim() {
        if (policy_ == EvictionPolicy::lars) return lars_victim(losses(), epsilon_, victim_rng_);
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        return pick(victim_rng_);
    }

    std::size_t capacity_;
    EvictionPolicy policy_;
    double epsilon_;
    std::uint64_t stream_count_{0};
    std::vector<Experience> items_;
    Rng accept_rng_;
    Rng victim_rng_;
};

namespace detail {

inline std::string rng_state(const Rng& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

inline Rng parse_rng(const std::string& state) {
    Rng rng;
    std::istringstream in(state);
    in >> rng;
    if (!in) throw Error(ErrorCode::format, "replay snapshot: corrupt generator state");
    return rng;
}

inline std::filesystem::path items_path(const std::filesystem::path& manifest) {
    auto p = manifest;
    p.replace_extension(".ctns");
    return p;
}

}  // namespace detail

/// Writes `<stem>.json` (policy, counters, losses, generator states) and,
/// when the buffer is not empty, `<stem>.ctns` holding every item as one
/// [T + 1 x ...] slab: the window steps followed by the target. Payload is
/// 64-bit so a resumed run continues bit-for-bit.
inline void save_buffer(const ReplayBuffer& buffer, const std::filesystem::path& manifest) {
    nlohmann::json doc;
    doc["format"] = "clcp-replay";
    doc["capacity"] = buffer.capacity_;
    doc["policy"] = buffer.policy_;
    doc["epsilon"] = buffer.epsilon_;
    doc["stream_count"] = buffer.stream_count_;
    doc["losses"] = buffer.losses();
    doc["accept_rng"] = detail::rng_state(buffer.accept_rng_);
    doc["victim_rng"] = detail::rng_state(buffer.victim_rng_);

    if (!buffer.empty()) {
        const auto& first = buffer.items_.front().sample;
        const Shape& ws = first.window.shape();
        const std::size_t per_step = first.target.size();
        require(first.window.size() == ws.front() * per_step, ErrorCode::shape_mismatch,
                "save_buffer: target must have the shape of one window step");
        Shape slab{buffer.size(), ws.front() + 1};
        slab.insert(slab.end(), ws.begin() + 1, ws.end());
        ComplexTensor all(slab);
        auto out = all.data();
        std::size_t pos = 0;
        for (const auto& e : buffer.items_) {
            for (const auto v : e.sample.window.data()) out[pos++] = v;
            for (const auto v : e.sample.target.data()) out[pos++] = v;
        }
        io::write_ctns(detail::items_path(manifest), all, io::Precision::f64);
        doc["items"] = detail::items_path(manifest).filename().string();
        doc["target_shape"] = first.target.shape();
    }

    std::ofstream out(manifest, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + manifest.string() + " for writing");
    out << doc.dump(2) << '\n';
}

[[nodiscard]] inline ReplayBuffer load_buffer(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw Error(ErrorCode::io, "cannot open " + manifest.string());
    ReplayBuffer buffer;
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.at("format") != "clcp-replay") throw Error(ErrorCode::format, "not a replay snapshot");
        buffer = ReplayBuffer(doc.at("capacity").get<std::size_t>(), doc.at("policy").get<EvictionPolicy>(), 0,
                              doc.at("epsilon").get<double>());
        buffer.stream_count_ = doc.at("stream_count").get<std::uint64_t>();
        buffer.accept_rng_ = detail::parse_rng(doc.at("accept_rng").get<std::string>());
        buffer.victim_rng_ = detail::parse_rng(doc.at("victim_rng").get<std::string>());
        const auto losses = doc.at("losses").get<std::vector<double>>();
        if (losses.empty()) return buffer;

        const auto all = io::read_ctns<double>(manifest.parent_path() / doc.at("items").get<std::string>());
        const auto target_shape = doc.at("target_shape").get<Shape>();
        const Shape& slab = all.shape();
        if (slab.size() < 2 || slab[0] != losses.size() || losses.size() > buffer.capacity_) {
            throw Error(ErrorCode::format, "replay snapshot: item count disagrees with manifest");
        }
        const std::size_t steps = slab[1] - 1;
        Shape window_shape{steps};
        window_shape.insert(window_shape.end(), slab.begin() + 2, slab.end());
        const std::size_t per_step = element_count(target_shape);
        const auto src = all.data();
        std::size_t pos = 0;
        for (const double loss : losses) {
            Experience e{{ComplexTensor(window_shape), ComplexTensor(target_shape)}, loss};
            for (auto& v : e.sample.window.data()) v = src[pos++];
            for (auto& v : e.sample.target.data()) v = src[pos++];
            buffer.items_.push_back(std::move(e));
        }
        if (pos != all.size() || per_step * (steps + 1) * losses.size() != all.size()) {
            throw Error(ErrorCode::format, "replay snapshot: payload size disagrees with shapes");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format, std::string("replay snapshot: ") + e.what());
    }
    return buffer;
}

}  // namespace clcp::replay
