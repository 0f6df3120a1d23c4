#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "clcp/core/error.hpp"
#include "clcp/lwf/distill.hpp"
#include "clcp/nn/config.hpp"

namespace clcp::harness {

enum class Method { naive, er_reservoir, er_lars, ewc, si, lwf, joint, zero_shot };

NLOHMANN_JSON_SERIALIZE_ENUM(Method, {{Method::naive, "naive"},
                                      {Method::er_reservoir, "er-reservoir"},
                                      {Method::er_lars, "er-lars"},
                                      {Method::ewc, "ewc"},
                                      {Method::si, "si"},
                                      {Method::lwf, "lwf"},
                                      {Method::joint, "joint"},
                                      {Method::zero_shot, "zero-shot"}})

inline constexpr std::string_view method_names[] = {"naive", "er-reservoir", "er-lars", "ewc",
                                                    "si",    "lwf",          "joint",   "zero-shot"};

[[nodiscard]] inline std::string to_string(Method m) { return std::string(method_names[static_cast<int>(m)]); }

[[nodiscard]] inline Method parse_method(std::string_view name) {
    for (int i = 0; i < static_cast<int>(std::size(method_names)); ++i) {
        if (method_names[i] == name) return static_cast<Method>(i);
    }
    throw Error(ErrorCode::config, "unknown method '" + std::string(name) + "'");
}

[[nodiscard]] inline bool is_replay(Method m) noexcept { return m == Method::er_reservoir || m == Method::er_lars; }
[[nodiscard]] inline bool is_baseline(Method m) noexcept { return m == Method::joint || m == Method::zero_shot; }

/// Parses `start:stop:step` (stop included when the grid lands on it), a
/// single value, or a comma list. "inf" denotes the noiseless sentinel.
[[nodiscard]] inline std::vector<double> parse_snr_grid(std::string_view text) {
    auto number = [&](std::string_view s) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || end != s.data() + s.size()) {
            throw Error(ErrorCode::config, "bad SNR value '" + std::string(s) + "' in '" + std::string(text) + "'");
        }
        return v;
    };
    std::vector<double> grid;
    if (text.find(':') != std::string_view::npos) {
        const auto a = text.find(':');
        const auto b = text.find(':', a + 1);
        require(b != std::string_view::npos, ErrorCode::config, "SNR grid must be start:stop:step");
        const double start = number(text.substr(0, a));
        const double stop = number(text.substr(a + 1, b - a - 1));
        const double step = number(text.substr(b + 1));
        require(step > 0.0 && std::isfinite(start) && std::isfinite(stop) && stop >= start, ErrorCode::config,
                "SNR grid needs finite start <= stop and a positive step");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) grid.push_back(start + static_cast<double>(i) * step);
        return grid;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (!item.empty()) grid.push_back(number(item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    require(!grid.empty(), ErrorCode::config, "empty SNR grid");
    return grid;
}

template <class T>
[[nodiscard]] std::vector<T> parse_list(std::string_view text) {
    std::vector<T> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string item(text.substr(pos, comma - pos));
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) {
            if constexpr (std::is_same_v<T, std::string>) {
                out.push_back(item);
            } else {
                T v{};
                const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
                if (ec != std::errc{} || end != item.data() + item.size()) {
                    throw Error(ErrorCode::config, "bad list entry '" + item + "'");
                }
                out.push_back(v);
            }
        }
        pos = comma + 1;
    }
    return out;
}

/// Channel data used by an experiment. Without `data_dir` every task is
/// generated on demand from its preset, shrunk to the desk-scale array sizes
/// below unless `full_scale` is set.
struct DataConfig {
    std::filesystem::path data_dir;
    std::size_t users{64};
    std::size_t n_tx{4};
    std::size_t n_rb{2};
    std::size_t n_rx{1};
    bool full_scale{false};
    std::size_t window_stride{8};
    std::size_t max_windows_per_user{0};  ///< 0 keeps every window
    double train_fraction{0.8};

    bool operator==(const DataConfig&) const = default;
};

struct ExperimentConfig {
    Method method{Method::naive};
    nn::PredictorConfig model;
    nn::OptimConfig optim;
    DataConfig data;

    std::size_t buffer{5000};
    std::size_t replay_batch{0};  ///< 0 means "same as the current batch"
    double lambda{0.5};
    double alpha{0.4};
    double beta{0.6};
    double xi{1e-3};
    double epsilon{1e-8};
    lwf::Variant lwf_variant{lwf::Variant::convex};
    bool fisher_minibatch{false};

    std::vector<std::string> tasks{"umi-compact", "umi-dense", "umi-standard"};
    std::string zero_shot_task{"umi-dense"};
    std::vector<double> snr_grid{0, 5, 10, 15, 20, 25, 30};
    std::vector<std::uint64_t> seeds{1};
    std::size_t epochs{8};
    std::size_t threads{1};

    void validate() const {
        model.validate();
        optim.validate();
        require(!tasks.empty(), ErrorCode::config, "experiment: task sequence must not be empty");
        require(!seeds.empty(), ErrorCode::config, "experiment: at least one seed is required");
        require(!snr_grid.empty(), ErrorCode::config, "experiment: SNR grid must not be empty");
        require(epochs >= 1, ErrorCode::config, "experiment: epochs must be >= 1");
        require(threads >= 1, ErrorCode::config, "experiment: threads must be >= 1");
        require(alpha >= 0.0 && beta >= 0.0, ErrorCode::config, "experiment: alpha and beta must be >= 0");
        require(xi > 0.0 && epsilon > 0.0, ErrorCode::config, "experiment: xi and epsilon must be > 0");
        if (method == Method::lwf && lwf_variant == lwf::Variant::additive) {
            require(lambda >= 0.0, ErrorCode::config, "experiment: additive LwF needs lambda >= 0");
        } else {
            require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::config, "experiment: lambda must lie in [0, 1]");
        }
        require(data.train_fraction > 0.0 && data.train_fraction < 1.0, ErrorCode::config,
                "data: train_fraction must lie in (0, 1)");
        require(data.users >= 2 && data.window_stride >= 1, ErrorCode::config,
                "data: need >= 2 users and a positive window stride");
        require(data.n_tx >= 1 && data.n_rb >= 1 && data.n_rx >= 1, ErrorCode::config, "data: array sizes must be >= 1");
    }

    [[nodiscard]] std::size_t effective_replay_batch() const noexcept {
        return replay_batch == 0 ? optim.batch_size : replay_batch;
    }
};

namespace detail {

template <class T>
void read(const boost::property_tree::ptree& pt, const char* key, T& field) {
    const auto v = pt.get_optional<std::string>(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) {
        field = *v;
    } else if constexpr (std::is_same_v<T, bool>) {
        if (*v == "true" || *v == "1" || *v == "yes") {
            field = true;
        } else if (*v == "false" || *v == "0" || *v == "no") {
            field = false;
        } else {
            throw Error(ErrorCode::config, std::string(key) + ": expected a boolean, got '" + *v + "'");
        }
    } else {
        std::istringstream in(*v);
        T parsed{};
        in >> parsed;
        if (!in || !(in >> std::ws).eof()) {
            throw Error(ErrorCode::config, std::string(key) + ": cannot parse '" + *v + "'");
        }
        field = parsed;
    }
}

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "experiment.method", "experiment.tasks", "experiment.zero_shot_task", "experiment.seeds",
        "experiment.epochs", "experiment.threads", "model.backbone", "model.seq_len", "model.layers",
        "model.hidden", "model.d_model", "model.heads", "model.ffn_width", "optim.optimizer",
        "optim.learning_rate", "optim.batch_size", "optim.clip_norm", "optim.adam_beta1", "optim.adam_beta2",
        "optim.adam_epsilon", "method.buffer", "method.replay_batch", "method.lambda",
        "method.alpha", "method.beta", "method.xi", "method.epsilon", "method.lwf_variant",
        "method.fisher_minibatch", "data.dir", "data.users", "data.n_tx", "data.n_rb", "data.n_rx",
        "data.full_scale", "data.window_stride", "data.max_windows_per_user", "data.train_fraction", "eval.snr"};
    return keys;
}

}  // namespace detail

/// Applies an INI file on top of `base`. Unknown sections or keys are errors
/// so typos never silently fall back to defaults.
[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                                             ExperimentConfig base = {}) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(path.string(), pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorCode::config, e.what());
    }
    for (const auto& [section, body] : pt) {
        for (const auto& [key, value] : body) {
            const auto full = section + "." + key;
            const auto& keys = detail::known_keys();
            if (std::find(keys.begin(), keys.end(), full) == keys.end()) {
                throw Error(ErrorCode::config, path.string() + ": unknown key '" + full + "'");
            }
        }
    }
    using detail::read;
    auto& c = base;
    std::string text;
    if (const auto m = pt.get_optional<std::string>("experiment.method")) c.method = parse_method(*m);
    if (const auto t = pt.get_optional<std::string>("experiment.tasks")) c.tasks = parse_list<std::string>(*t);
    read(pt, "experiment.zero_shot_task", c.zero_shot_task);
    if (const auto s = pt.get_optional<std::string>("experiment.seeds")) c.seeds = parse_list<std::uint64_t>(*s);
    read(pt, "experiment.epochs", c.epochs);
    read(pt, "experiment.threads", c.threads);
    if (const auto b = pt.get_optional<std::string>("model.backbone")) c.model.backbone = nn::parse_backbone(*b);
    read(pt, "model.seq_len", c.model.seq_len);
    read(pt, "model.layers", c.model.n_layers);
    read(pt, "model.hidden", c.model.hidden);
    read(pt, "model.d_model", c.model.d_model);
    read(pt, "model.heads", c.model.n_heads);
    read(pt, "model.ffn_width", c.model.ffn_width);
    if (const auto o = pt.get_optional<std::string>("optim.optimizer")) c.optim.optimizer = nn::parse_optimizer(*o);
    read(pt, "optim.learning_rate", c.optim.learning_rate);
    read(pt, "optim.batch_size", c.optim.batch_size);
    read(pt, "optim.clip_norm", c.optim.clip_norm);
    read(pt, "optim.adam_beta1", c.optim.adam_beta1);
    read(pt, "optim.adam_beta2", c.optim.adam_beta2);
    read(pt, "optim.adam_epsilon", c.optim.adam_epsilon);
    read(pt, "method.buffer", c.buffer);
    read(pt, "method.replay_batch", c.replay_batch);
    read(pt, "method.lambda", c.lambda);
    read(pt, "method.alpha", c.alpha);
    read(pt, "method.beta", c.beta);
    read(pt, "method.xi", c.xi);
    read(pt, "method.epsilon", c.epsilon);
    if (const auto v = pt.get_optional<std::string>("method.lwf_variant")) c.lwf_variant = lwf::parse_variant(*v);
    read(pt, "method.fisher_minibatch", c.fisher_minibatch);
    if (const auto d = pt.get_optional<std::string>("data.dir")) c.data.data_dir = *d;
    read(pt, "data.users", c.data.users);
    read(pt, "data.n_tx", c.data.n_tx);
    read(pt, "data.n_rb", c.data.n_rb);
    read(pt, "data.n_rx", c.data.n_rx);
    read(pt, "data.full_scale", c.data.full_scale);
    read(pt, "data.window_stride", c.data.window_stride);
    read(pt, "data.max_windows_per_user", c.data.max_windows_per_user);
    read(pt, "data.train_fraction", c.data.train_fraction);
    if (const auto g = pt.get_optional<std::string>("eval.snr")) c.snr_grid = parse_snr_grid(*g);
    c.validate();
    return c;
}

[[nodiscard]] inline nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"method", c.method},
            {"model", c.model},
            {"optim", c.optim},
            {"buffer", c.buffer},
            {"replay_batch", c.effective_replay_batch()},
            {"lambda", c.lambda},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"xi", c.xi},
            {"epsilon", c.epsilon},
            {"lwf_variant", c.lwf_variant},
            {"fisher_minibatch", c.fisher_minibatch},
            {"tasks", c.tasks},
            {"zero_shot_task", c.zero_shot_task},
            {"epochs", c.epochs},
            {"data",
             {{"dir", c.data.data_dir.string()},
              {"users", c.data.users},
              {"n_tx", c.data.n_tx},
              {"n_rb", c.data.n_rb},
              {"n_rx", c.data.n_rx},
              {"full_scale", c.data.full_scale},
              {"window_stride", c.data.window_stride},
              {"max_windows_per_user", c.data.max_windows_per_user},
              {"train_fraction", c.data.train_fraction}}}};
}

}  // namespace clcp::harness
