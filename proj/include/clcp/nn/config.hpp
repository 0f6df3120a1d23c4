#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "clcp/core/error.hpp"

namespace clcp::nn {

enum class Backbone { lstm, gru, transformer };

NLOHMANN_JSON_SERIALIZE_ENUM(Backbone, {{Backbone::lstm, "lstm"}, {Backbone::gru, "gru"}, {Backbone::transformer, "transformer"}})

[[nodiscard]] inline std::string to_string(Backbone b) {
    switch (b) {
        case Backbone::lstm: return "lstm";
        case Backbone::gru: return "gru";
        case Backbone::transformer: return "transformer";
    }
    return "?";
}

[[nodiscard]] inline Backbone parse_backbone(std::string_view text) {
    if (text == "lstm") return Backbone::lstm;
    if (text == "gru") return Backbone::gru;
    if (text == "transformer") return Backbone::transformer;
    throw Error(ErrorCode::config, "unknown backbone '" + std::string(text) + "'");
}

/// Architecture description. `d_in` is the flattened real feature length of
/// one time step, 2 * n_rb * n_tx * n_rx; the output has the same length.
struct PredictorConfig {
    Backbone backbone{Backbone::gru};
    std::size_t n_layers{3};
    std::size_t hidden{32};
    std::size_t d_model{128};
    std::size_t n_heads{4};
    std::size_t ffn_width{256};
    std::size_t d_in{96};
    std::size_t seq_len{32};

    void validate() const {
        require(d_in >= 1, ErrorCode::config, "predictor: d_in must be >= 1");
        require(seq_len >= 1, ErrorCode::config, "predictor: seq_len must be >= 1");
        if (backbone == Backbone::transformer) {
            require(d_model >= 2 && n_heads >= 1 && d_model % n_heads == 0, ErrorCode::config,
                    "predictor: d_model must be divisible by n_heads");
            require(ffn_width >= 1, ErrorCode::config, "predictor: ffn_width must be >= 1");
        } else {
            require(n_layers >= 1 && hidden >= 1, ErrorCode::config, "predictor: recurrent sizes must be >= 1");
        }
    }

    bool operator==(const PredictorConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PredictorConfig, backbone, n_layers, hidden, d_model, n_heads, ffn_width, d_in,
                                   seq_len)

enum class OptimizerKind { sgd, adam };

NLOHMANN_JSON_SERIALIZE_ENUM(OptimizerKind, {{OptimizerKind::sgd, "sgd"}, {OptimizerKind::adam, "adam"}})

[[nodiscard]] inline OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw Error(ErrorCode::config, "unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

struct OptimConfig {
    OptimizerKind optimizer{OptimizerKind::adam};
    double learning_rate{3e-3};
    std::size_t batch_size{8};
    double clip_norm{5.0};  ///< <= 0 disables clipping
    double adam_beta1{0.9};
    double adam_beta2{0.999};
    double adam_epsilon{1e-8};

    void validate() const {
        require(learning_rate > 0.0, ErrorCode::config, "optim: learning_rate must be > 0");
        require(batch_size >= 1, ErrorCode::config, "optim: batch_size must be >= 1");
        require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, ErrorCode::config,
                "optim: Adam betas must lie in [0, 1)");
        require(adam_epsilon > 0.0, ErrorCode::config, "optim: adam_epsilon must be > 0");
    }

    bool operator==(const OptimConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OptimConfig, optimizer, learning_rate, batch_size, clip_norm, adam_beta1,
                                   adam_beta2, adam_epsilon)

/// Exact parameter count of one recurrent layer with `gates` gate blocks and a
/// single bias per gate: gates * H * (d_in + H) + gates * H. The often quoted
/// approximation 4 H (d_in + H) for an LSTM omits the biases.
[[nodiscard]] constexpr std::size_t recurrent_layer_params(std::size_t gates, std::size_t d_in,
                                                           std::size_t hidden) noexcept {
    return gates * hidden * (d_in + hidden) + gates * hidden;
}

}  // namespace clcp::nn
