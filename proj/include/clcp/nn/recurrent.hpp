#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"
#include "clcp/nn/activations.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/config.hpp"
#include "clcp/nn/parameters.hpp"

namespace clcp::nn {

enum class CellKind { lstm, gru };

/// Stacked LSTM or GRU followed by a linear head on the last hidden state.
///
/// LSTM gates are ordered (i, f, g, o); GRU gates (r, z, n) with
///   n = tanh(Wx_n x + b_n + r * (Wh_n h)),  h' = (1 - z) * n + z * h.
/// Each layer has one bias vector per gate.
class RecurrentNet {
public:
    struct Tape {
        std::vector<Eigen::MatrixXd> input;                  // [T] d_in x B
        std::vector<std::vector<Eigen::MatrixXd>> h;         // [L][T + 1], h[l][0] = 0
        std::vector<std::vector<Eigen::MatrixXd>> c;         // [L][T + 1], LSTM only
        std::vector<std::vector<Eigen::MatrixXd>> gates;     // [L][T] activated gates
        std::vector<std::vector<Eigen::MatrixXd>> aux;       // [L][T] tanh(c) or Wh_n h
    };

    RecurrentNet(CellKind kind, const PredictorConfig& config) : kind_(kind), config_(config) {
        config_.validate();
        const std::size_t H = config_.hidden;
        const std::size_t G = gates() * H;
        for (std::size_t l = 0; l < config_.n_layers; ++l) {
            const std::size_t in = l == 0 ? config_.d_in : H;
            const std::string p = "l" + std::to_string(l) + ".";
            layout_.add(p + "w_x", G, in);
            layout_.add(p + "w_h", G, H);
            layout_.add(p + "b", G);
            layers_.push_back({layout_.block(p + "w_x"), layout_.block(p + "w_h"), layout_.block(p + "b")});
        }
        layout_.add("head.w", config_.d_in, H);
        layout_.add("head.b", config_.d_in);
        head_w_ = layout_.block("head.w");
        head_b_ = layout_.block("head.b");
    }

    [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] std::size_t gates() const noexcept { return kind_ == CellKind::lstm ? 4 : 3; }

    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for all weights and biases, where the
    /// fan-in of a gate is the hidden width; LSTM forget biases start at 1.
    void initialize(std::span<double> theta, Rng& rng) const {
        require(theta.size() == layout_.size(), ErrorCode::shape_mismatch, "initialize: parameter length");
        const double bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : theta) v = u(rng);
        if (kind_ == CellKind::lstm) {
            const std::size_t H = config_.hidden;
            for (const auto& layer : layers_) {
                for (std::size_t j = 0; j < H; ++j) theta[layer.b.offset + H + j] = 1.0;
            }
        }
    }

    Eigen::MatrixXd forward(const Batch& batch, std::span<const double> theta, Tape* tape = nullptr) const {
        check(batch, theta);
        const auto T = batch.seq_len();
        const auto B = static_cast<Eigen::Index>(batch.size());
        const auto H = static_cast<Eigen::Index>(config_.hidden);
        const std::size_t L = layers_.size();

        Tape local;
        Tape& tp = tape ? *tape : local;
        const bool keep = tape != nullptr;
        if (keep) tp.input = batch.steps;
        tp.h.assign(L, std::vector<Eigen::MatrixXd>(keep ? T + 1 : 2));
        tp.c.assign(L, std::vector<Eigen::MatrixXd>(kind_ == CellKind::lstm ? (keep ? T + 1 : 2) : 0));
        tp.gates.assign(L, std::vector<Eigen::MatrixXd>(keep ? T : 1));
        tp.aux.assign(L, std::vector<Eigen::MatrixXd>(keep ? T : 1));

        // Without a tape only the last two states are retained; layers are
        // processed time-major so each layer reads the previous layer's output
        // at the same step.
        for (std::size_t l = 0; l < L; ++l) {
            tp.h[l][0] = Eigen::MatrixXd::Zero(H, B);
            if (kind_ == CellKind::lstm) tp.c[l][0] = Eigen::MatrixXd::Zero(H, B);
        }
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t prev = keep ? t : t % 2;
            const std::size_t next = keep ? t + 1 : (t + 1) % 2;
            const std::size_t slot = keep ? t : 0;
            for (std::size_t l = 0; l < L; ++l) {
                const Eigen::MatrixXd& x = l == 0 ? batch.steps[t] : tp.h[l - 1][next];
                const auto& layer = layers_[l];
                const auto Wx = view(theta, layer.w_x);
                const auto Wh = view(theta, layer.w_h);
                const auto b = view(theta, layer.b);
                Eigen::MatrixXd a = Wx * x;
                a.colwise() += b.col(0);
                const Eigen::MatrixXd& hp = tp.h[l][prev];
                if (kind_ == CellKind::lstm) {
                    a.noalias() += Wh * hp;
                    Eigen::MatrixXd& g = tp.gates[l][slot];
                    g.resize(4 * H, B);
                    g.topRows(2 * H) = sigmoid(a.topRows(2 * H).array()).matrix();
                    g.middleRows(2 * H, H) = a.middleRows(2 * H, H).array().tanh().matrix();
                    g.bottomRows(H) = sigmoid(a.bottomRows(H).array()).matrix();
                    tp.c[l][next] = (g.middleRows(H, H).array() * tp.c[l][prev].array() +
                                     g.topRows(H).array() * g.middleRows(2 * H, H).array())
                                        .matrix();
                    tp.aux[l][slot] = tp.c[l][next].array().tanh().matrix();
                    tp.h[l][next] = (g.bottomRows(H).array() * tp.aux[l][slot].array()).matrix();
                } else {
                    Eigen::MatrixXd ah = Wh * hp;
                    Eigen::MatrixXd& g = tp.gates[l][slot];
                    g.resize(3 * H, B);
                    g.topRows(2 * H) = sigmoid((a.topRows(2 * H) + ah.topRows(2 * H)).array()).matrix();
                    tp.aux[l][slot] = ah.bottomRows(H);
                    g.bottomRows(H) =
                        (a.bottomRows(H).array() + g.topRows(H).array() * ah.bottomRows(H).array()).tanh().matrix();
                    const auto z = g.middleRows(H, H).array();
                    tp.h[l][next] = ((1.0 - z) * g.bottomRows(H).array() + z * hp.array()).matrix();
                }
            }
        }
        const auto Wo = view(theta, head_w_);
        const auto bo = view(theta, head_b_);
        Eigen::MatrixXd y = Wo * tp.h[L - 1][keep ? T : T % 2];
        y.colwise() += bo.col(0);
        return y;
    }

    /// Accumulates dL/dtheta into `grad` given dL/dY.
    void backward(const Tape& tp, const Eigen::MatrixXd& dy, std::span<const double> theta,
                  std::span<double> grad) const {
        require(grad.size() == layout_.size(), ErrorCode::shape_mismatch, "backward: gradient length");
        const std::size_t T = tp.input.size();
        const std::size_t L = layers_.size();
        const auto H = static_cast<Eigen::Index>(config_.hidden);
        const auto Wo = view(theta, head_w_);
        view(grad, head_w_).noalias() += dy * tp.h[L - 1][T].transpose();
        view(grad, head_b_).col(0) += dy.rowwise().sum();

        // dh coming from the layer above, per step.
        std::vector<Eigen::MatrixXd> from_above(T);
        from_above[T - 1] = Wo.transpose() * dy;
        for (std::size_t li = L; li-- > 0;) {
            const auto& layer = layers_[li];
            const auto G = static_cast<Eigen::Index>(layer.b.rows);
            const auto Wx = view(theta, layer.w_x);
            const auto Wh = view(theta, layer.w_h);
            auto dWx = view(grad, layer.w_x);
            auto dWh = view(grad, layer.w_h);
            auto db = view(grad, layer.b);

            std::vector<Eigen::MatrixXd> to_below(li > 0 ? T : 0);
            Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, dy.cols());
            Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, dy.cols());
            Eigen::MatrixXd da(G, dy.cols());
            for (std::size_t t = T; t-- > 0;) {
                Eigen::MatrixXd dh = dh_next;
                if (from_above[t].size() != 0) dh += from_above[t];
                const Eigen::MatrixXd& g = tp.gates[li][t];
                const Eigen::MatrixXd& hp = tp.h[li][t];
                const Eigen::MatrixXd& x = li == 0 ? tp.input[t] : tp.h[li - 1][t + 1];
                if (kind_ == CellKind::lstm) {
                    const auto i = g.topRows(H).array();
                    const auto f = g.middleRows(H, H).array();
                    const auto gg = g.middleRows(2 * H, H).array();
                    const auto o = g.bottomRows(H).array();
                    const auto tc = tp.aux[li][t].array();
                    const Eigen::ArrayXXd dc = dh.array() * o * (1.0 - tc * tc) + dc_next.array();
                    da.topRows(H) = (dc * gg * i * (1.0 - i)).matrix();
                    da.middleRows(H, H) = (dc * tp.c[li][t].array() * f * (1.0 - f)).matrix();
                    da.middleRows(2 * H, H) = (dc * i * (1.0 - gg * gg)).matrix();
                    da.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
                    dc_next = (dc * f).matrix();
                    dWh.noalias() += da * hp.transpose();
                    dh_next.noalias() = Wh.transpose() * da;
                } else {
                    const auto r = g.topRows(H).array();
                    const auto z = g.middleRows(H, H).array();
                    const auto n = g.bottomRows(H).array();
                    const Eigen::ArrayXXd dn = dh.array() * (1.0 - z) * (1.0 - n * n);
                    const Eigen::ArrayXXd dz = dh.array() * (hp.array() - n) * z * (1.0 - z);
                    const Eigen::ArrayXXd dr = dn * tp.aux[li][t].array() * r * (1.0 - r);
                    // Recurrent pre-activation gradients differ from the input ones
                    // in the n block, which is gated by r.
                    Eigen::MatrixXd dah(G, dy.cols());
                    da.topRows(H) = dr.matrix();
                    da.middleRows(H, H) = dz.matrix();
                    da.bottomRows(H) = dn.matrix();
                    dah.topRows(2 * H) = da.topRows(2 * H);
                    dah.bottomRows(H) = (dn * r).matrix();
                    dWh.noalias() += dah * hp.transpose();
                    dh_next = (dh.array() * z).matrix();
                    dh_next.noalias() += Wh.transpose() * dah;
                }
                dWx.noalias() += da * x.transpose();
                db.col(0) += da.rowwise().sum();
                if (li > 0) to_below[t] = Wx.transpose() * da;
            }
            from_above = std::move(to_below);
        }
    }

private:
    struct LayerBlocks {
        ParameterBlock w_x;
        ParameterBlock w_h;
        ParameterBlock b;
    };

    void check(const Batch& batch, std::span<const double> theta) const {
        require(theta.size() == layout_.size(), ErrorCode::shape_mismatch, "recurrent: parameter length mismatch");
        require(batch.seq_len() >= 1 && batch.size() >= 1, ErrorCode::invalid_argument, "recurrent: empty batch");
        require(batch.d_in() == config_.d_in, ErrorCode::shape_mismatch,
                "recurrent: window features " + std::to_string(batch.d_in()) + " != d_in " +
                    std::to_string(config_.d_in));
    }

    CellKind kind_;
    PredictorConfig config_;
    ParameterLayout layout_;
    std::vector<LayerBlocks> layers_;
    ParameterBlock head_w_;
    ParameterBlock head_b_;
};

}  // namespace clcp::nn
