#pragma once

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"
#include "clcp/core/tensor.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/config.hpp"
#include "clcp/nn/parameters.hpp"
#include "clcp/nn/recurrent.hpp"
#include "clcp/nn/transformer.hpp"

namespace clcp::nn {

/// Backbone-agnostic front end: owns the architecture and layout, while the
/// weights live in a separate ParameterVector so they can be copied, frozen
/// and serialized independently.
class Predictor {
public:
    using Tape = std::variant<RecurrentNet::Tape, TransformerNet::Tape>;

    explicit Predictor(const PredictorConfig& config) : config_(config), net_(make(config)) {}

    [[nodiscard]] const PredictorConfig& config() const noexcept { return config_; }
    [[nodiscard]] const ParameterLayout& layout() const {
        return std::visit([](const auto& n) -> const ParameterLayout& { return n.layout(); }, net_);
    }
    [[nodiscard]] std::size_t param_count() const { return layout().size(); }

    [[nodiscard]] ParameterVector initial_parameters(std::uint64_t seed) const {
        ParameterVector theta(layout());
        Rng rng = make_rng(seed, {fnv1a("init")});
        std::visit([&](const auto& n) { n.initialize(theta.flat(), rng); }, net_);
        return theta;
    }

    /// Output d_in x B.
    [[nodiscard]] Eigen::MatrixXd forward(const Batch& batch, std::span<const double> theta) const {
        return std::visit([&](const auto& n) { return n.forward(batch, theta); }, net_);
    }

    /// Forward pass that records what the reverse sweep needs.
    [[nodiscard]] Eigen::MatrixXd forward(const Batch& batch, std::span<const double> theta, Tape& tape) const {
        return std::visit(
            [&](const auto& n) -> Eigen::MatrixXd {
                using Net = std::decay_t<decltype(n)>;
                tape.emplace<typename Net::Tape>();
                return n.forward(batch, theta, &std::get<typename Net::Tape>(tape));
            },
            net_);
    }

    /// Adds dL/dtheta to `grad` given dL/dY for the batch recorded in `tape`.
    void backward(const Tape& tape, const Eigen::MatrixXd& dy, std::span<const double> theta,
                  std::span<double> grad) const {
        std::visit(
            [&](const auto& n) {
                using Net = std::decay_t<decltype(n)>;
                n.backward(std::get<typename Net::Tape>(tape), dy, theta, grad);
            },
            net_);
    }

    /// Single-window prediction: [T x n_rb x n_tx x n_rx] -> [n_rb x n_tx x n_rx].
    [[nodiscard]] ComplexTensor predict(const ComplexTensor& window, std::span<const double> theta) const {
        require(window.rank() >= 2, ErrorCode::shape_mismatch, "predict: window needs a time axis");
        Shape out_shape(window.shape().begin() + 1, window.shape().end());
        const Sample s{window, ComplexTensor(out_shape)};
        const Sample* ptr = &s;
        const Batch batch = pack_batch(std::span<const Sample* const>(&ptr, 1));
        return unflatten(forward(batch, theta).col(0), out_shape);
    }

private:
    using Net = std::variant<RecurrentNet, TransformerNet>;

    static Net make(const PredictorConfig& c) {
        switch (c.backbone) {
            case Backbone::lstm: return RecurrentNet(CellKind::lstm, c);
            case Backbone::gru: return RecurrentNet(CellKind::gru, c);
            case Backbone::transformer: return TransformerNet(c);
        }
        throw Error(ErrorCode::config, "unknown backbone");
    }

    PredictorConfig config_;
    Net net_;
};

[[nodiscard]] inline std::size_t param_count(const PredictorConfig& config) {
    return Predictor(config).param_count();
}

}  // namespace clcp::nn
