#pragma once

#include <cmath>
#include <numbers>
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

/// Sinusoidal encoding of step `t`. Pair i holds (sin, cos) of 2 pi t / P_i
/// where the periods P_i are geometrically spaced from 2 to 4 * seq_len steps.
[[nodiscard]] inline Eigen::VectorXd positional_encoding(std::size_t t, std::size_t d_model, std::size_t seq_len) {
    require(d_model >= 1, ErrorCode::invalid_argument, "positional_encoding: d_model must be >= 1");
    Eigen::VectorXd pe(static_cast<Eigen::Index>(d_model));
    const std::size_t pairs = (d_model + 1) / 2;
    const double p_min = 2.0;
    const double p_max = 4.0 * static_cast<double>(std::max<std::size_t>(seq_len, 1));
    for (std::size_t i = 0; i < pairs; ++i) {
        const double frac = pairs > 1 ? static_cast<double>(i) / static_cast<double>(pairs - 1) : 0.0;
        const double period = p_min * std::pow(p_max / p_min, frac);
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / period;
        pe(static_cast<Eigen::Index>(2 * i)) = std::sin(phase);
        if (2 * i + 1 < d_model) pe(static_cast<Eigen::Index>(2 * i + 1)) = std::cos(phase);
    }
    return pe;
}

namespace detail {

struct LayerNormCache {
    Eigen::MatrixXd xhat;
    Eigen::VectorXd inv_std;
};

inline constexpr double layer_norm_eps = 1e-5;

/// Column-wise layer normalization.
inline Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const ConstMatrixMap& gamma, const ConstMatrixMap& beta,
                                  LayerNormCache& cache) {
    const auto D = static_cast<double>(x.rows());
    const Eigen::RowVectorXd mean = x.colwise().sum() / D;
    Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::RowVectorXd var = centered.array().square().colwise().sum() / D;
    cache.inv_std = (var.array() + layer_norm_eps).rsqrt().transpose();
    cache.xhat = centered * cache.inv_std.asDiagonal();
    Eigen::MatrixXd y = gamma.col(0).asDiagonal() * cache.xhat;
    y.colwise() += beta.col(0);
    return y;
}

inline Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const LayerNormCache& cache,
                                           const ConstMatrixMap& gamma, MatrixMap dgamma, MatrixMap dbeta) {
    const auto D = static_cast<double>(dy.rows());
    dgamma.col(0) += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
    dbeta.col(0) += dy.rowwise().sum();
    const Eigen::MatrixXd dxhat = gamma.col(0).asDiagonal() * dy;
    const Eigen::RowVectorXd m1 = dxhat.colwise().sum() / D;
    const Eigen::RowVectorXd m2 = (dxhat.array() * cache.xhat.array()).colwise().sum().matrix() / D;
    Eigen::MatrixXd dx = dxhat;
    dx.rowwise() -= m1;
    dx -= cache.xhat * m2.asDiagonal();
    return dx * cache.inv_std.asDiagonal();
}

/// Multi-head scaled dot-product attention with queries Q (D x Tq), keys and
/// values (D x Tk). Stores the per-head attention matrices (Tq x Tk).
inline Eigen::MatrixXd attention(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K, const Eigen::MatrixXd& V,
                                 std::size_t heads, std::vector<Eigen::MatrixXd>& weights) {
    const Eigen::Index dk = Q.rows() / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Eigen::MatrixXd out(Q.rows(), Q.cols());
    weights.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(h) * dk;
        Eigen::MatrixXd s = Q.middleRows(r0, dk).transpose() * K.middleRows(r0, dk) * scale;
        const Eigen::VectorXd row_max = s.rowwise().maxCoeff();
        s.colwise() -= row_max;
        s = s.array().exp().matrix();
        const Eigen::VectorXd row_sum = s.rowwise().sum();
        s = row_sum.cwiseInverse().asDiagonal() * s;
        out.middleRows(r0, dk).noalias() = V.middleRows(r0, dk) * s.transpose();
        weights[h] = std::move(s);
    }
    return out;
}

inline void attention_backward(const Eigen::MatrixXd& dO, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                               const Eigen::MatrixXd& V, const std::vector<Eigen::MatrixXd>& weights,
                               Eigen::MatrixXd& dQ, Eigen::MatrixXd& dK, Eigen::MatrixXd& dV) {
    const auto heads = static_cast<Eigen::Index>(weights.size());
    const Eigen::Index dk = Q.rows() / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    dQ.resize(Q.rows(), Q.cols());
    dK.resize(K.rows(), K.cols());
    dV.resize(V.rows(), V.cols());
    for (Eigen::Index h = 0; h < heads; ++h) {
        const Eigen::Index r0 = h * dk;
        const Eigen::MatrixXd& A = weights[static_cast<std::size_t>(h)];
        const auto dOh = dO.middleRows(r0, dk);
        dV.middleRows(r0, dk).noalias() = dOh * A;
        const Eigen::MatrixXd dA = dOh.transpose() * V.middleRows(r0, dk);
        const Eigen::VectorXd inner = (dA.array() * A.array()).rowwise().sum();
        const Eigen::MatrixXd dS = (A.array() * (dA.colwise() - inner).array()).matrix() * scale;
        dQ.middleRows(r0, dk).noalias() = K.middleRows(r0, dk) * dS.transpose();
        dK.middleRows(r0, dk).noalias() = Q.middleRows(r0, dk) * dS;
    }
}

}  // namespace detail

/// One encoder layer over the embedded window plus one decoder layer whose
/// single query is a learned start token. Post-norm residual blocks, GELU
/// feed-forward. The decoder self-attention acts on one token, so its softmax
/// is identically 1 and only the value and output projections matter.
class TransformerNet {
public:
    struct SampleTape {
        Eigen::MatrixXd x, x0, q, k, v, o, y1, u, g;
        std::vector<Eigen::MatrixXd> attn;
        detail::LayerNormCache ln1, ln2;
        Eigen::MatrixXd enc;
        Eigen::MatrixXd sv, d1, qc, kc, vc, oc, d2, ud, gd, d3;
        std::vector<Eigen::MatrixXd> cross;
        detail::LayerNormCache ln3, ln4, ln5;
    };
    struct Tape {
        std::vector<SampleTape> samples;
    };

    explicit TransformerNet(const PredictorConfig& config) : config_(config) {
        config_.validate();
        const std::size_t D = config_.d_model;
        const std::size_t F = config_.ffn_width;
        const std::size_t d = config_.d_in;
        auto linear = [&](const std::string& name, std::size_t out, std::size_t in) {
            layout_.add(name + ".w", out, in);
            layout_.add(name + ".b", out);
        };
        auto norm = [&](const std::string& name) {
            layout_.add(name + ".g", D);
            layout_.add(name + ".b", D);
        };
        linear("embed", D, d);
        for (const char* n : {"enc.q", "enc.k", "enc.v", "enc.o"}) linear(n, D, D);
        norm("enc.ln1");
        linear("enc.ff1", F, D);
        linear("enc.ff2", D, F);
        norm("enc.ln2");
        layout_.add("dec.start", D);
        linear("dec.self.v", D, D);
        linear("dec.self.o", D, D);
        norm("dec.ln1");
        for (const char* n : {"dec.cross.q", "dec.cross.k", "dec.cross.v", "dec.cross.o"}) linear(n, D, D);
        norm("dec.ln2");
        linear("dec.ff1", F, D);
        linear("dec.ff2", D, F);
        norm("dec.ln3");
        linear("head", d, D);

        pe_.resize(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(config_.seq_len));
        for (std::size_t t = 0; t < config_.seq_len; ++t) {
            pe_.col(static_cast<Eigen::Index>(t)) = positional_encoding(t, D, config_.seq_len);
        }
    }

    [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }

    /// Weights and biases U(+-1/sqrt(fan_in)); layer-norm gain 1 and shift 0;
    /// start token U(-1, 1).
    void initialize(std::span<double> theta, Rng& rng) const {
        require(theta.size() == layout_.size(), ErrorCode::shape_mismatch, "initialize: parameter length");
        for (const auto& b : layout_.blocks()) {
            auto block = view(theta, b);
            const bool is_norm = b.name.find(".ln") != std::string::npos;
            if (is_norm) {
                block.setConstant(b.name.back() == 'g' ? 1.0 : 0.0);
                continue;
            }
            double bound = 1.0;
            if (b.name != "dec.start") {
                const auto& w = layout_.block(b.name.substr(0, b.name.size() - 1) + "w");
                bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
            }
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = u(rng);
        }
    }

    Eigen::MatrixXd forward(const Batch& batch, std::span<const double> theta, Tape* tape = nullptr) const {
        require(theta.size() == layout_.size(), ErrorCode::shape_mismatch, "transformer: parameter length mismatch");
        require(batch.size() >= 1, ErrorCode::invalid_argument, "transformer: empty batch");
        require(batch.d_in() == config_.d_in, ErrorCode::shape_mismatch, "transformer: window feature length");
        require(batch.seq_len() == config_.seq_len, ErrorCode::shape_mismatch,
                "transformer: window length " + std::to_string(batch.seq_len()) + " != seq_len " +
                    std::to_string(config_.seq_len));
        const auto B = static_cast<Eigen::Index>(batch.size());
        const auto T = static_cast<Eigen::Index>(batch.seq_len());
        Eigen::MatrixXd y(static_cast<Eigen::Index>(config_.d_in), B);
        if (tape) tape->samples.resize(batch.size());
        SampleTape scratch;
        for (Eigen::Index b = 0; b < B; ++b) {
            SampleTape& st = tape ? tape->samples[static_cast<std::size_t>(b)] : scratch;
            st.x.resize(batch.steps.front().rows(), T);
            for (Eigen::Index t = 0; t < T; ++t) st.x.col(t) = batch.steps[static_cast<std::size_t>(t)].col(b);
            y.col(b) = forward_sample(st, theta);
        }
        return y;
    }

    void backward(const Tape& tape, const Eigen::MatrixXd& dy, std::span<const double> theta,
                  std::span<double> grad) const {
        require(grad.size() == layout_.size(), ErrorCode::shape_mismatch, "backward: gradient length");
        for (std::size_t b = 0; b < tape.samples.size(); ++b) {
            backward_sample(tape.samples[b], dy.col(static_cast<Eigen::Index>(b)), theta, grad);
        }
    }

private:
    [[nodiscard]] ConstMatrixMap p(std::span<const double> theta, const std::string& name) const {
        return view(theta, layout_.block(name));
    }
    [[nodiscard]] MatrixMap p(std::span<double> grad, const std::string& name) const {
        return view(grad, layout_.block(name));
    }

    Eigen::MatrixXd affine(std::span<const double> theta, const std::string& name, const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd out = p(theta, name + ".w") * x;
        out.colwise() += p(theta, name + ".b").col(0);
        return out;
    }

    /// Accumulates weight gradients of an affine map and returns dL/dx.
    Eigen::MatrixXd affine_backward(std::span<const double> theta, std::span<double> grad, const std::string& name,
                                    const Eigen::MatrixXd& x, const Eigen::MatrixXd& dout) const {
        p(grad, name + ".w").noalias() += dout * x.transpose();
        p(grad, name + ".b").col(0) += dout.rowwise().sum();
        return p(theta, name + ".w").transpose() * dout;
    }

    Eigen::MatrixXd norm(std::span<const double> theta, const std::string& name, const Eigen::MatrixXd& x,
                         detail::LayerNormCache& cache) const {
        return detail::layer_norm(x, p(theta, name + ".g"), p(theta, name + ".b"), cache);
    }

    Eigen::MatrixXd norm_backward(std::span<const double> theta, std::span<double> grad, const std::string& name,
                                  const detail::LayerNormCache& cache, const Eigen::MatrixXd& dy) const {
        return detail::layer_norm_backward(dy, cache, p(theta, name + ".g"), p(grad, name + ".g"),
                                           p(grad, name + ".b"));
    }

    static Eigen::MatrixXd gelu_of(const Eigen::MatrixXd& u) { return u.unaryExpr([](double v) { return gelu(v); }); }

    Eigen::VectorXd forward_sample(SampleTape& st, std::span<const double> theta) const {
        const std::size_t H = config_.n_heads;
        st.x0 = affine(theta, "embed", st.x) + pe_;
        st.q = affine(theta, "enc.q", st.x0);
        st.k = affine(theta, "enc.k", st.x0);
        st.v = affine(theta, "enc.v", st.x0);
        st.o = detail::attention(st.q, st.k, st.v, H, st.attn);
        st.y1 = norm(theta, "enc.ln1", st.x0 + affine(theta, "enc.o", st.o), st.ln1);
        st.u = affine(theta, "enc.ff1", st.y1);
        st.g = gelu_of(st.u);
        st.enc = norm(theta, "enc.ln2", st.y1 + affine(theta, "enc.ff2", st.g), st.ln2);

        const Eigen::MatrixXd s = p(theta, "dec.start");
        st.sv = affine(theta, "dec.self.v", s);
        st.d1 = norm(theta, "dec.ln1", s + affine(theta, "dec.self.o", st.sv), st.ln3);
        st.qc = affine(theta, "dec.cross.q", st.d1);
        st.kc = affine(theta, "dec.cross.k", st.enc);
        st.vc = affine(theta, "dec.cross.v", st.enc);
        st.oc = detail::attention(st.qc, st.kc, st.vc, H, st.cross);
        st.d2 = norm(theta, "dec.ln2", st.d1 + affine(theta, "dec.cross.o", st.oc), st.ln4);
        st.ud = affine(theta, "dec.ff1", st.d2);
        st.gd = gelu_of(st.ud);
        st.d3 = norm(theta, "dec.ln3", st.d2 + affine(theta, "dec.ff2", st.gd), st.ln5);
        return affine(theta, "head", st.d3).col(0);
    }

    void backward_sample(const SampleTape& st, const Eigen::VectorXd& dy, std::span<const double> theta,
                         std::span<double> grad) const {
        const auto gelu_grad_of = [](const Eigen::MatrixXd& u) {
            return u.unaryExpr([](double v) { return gelu_grad(v); });
        };
        const Eigen::MatrixXd dyc = dy;
        Eigen::MatrixXd dd3 = affine_backward(theta, grad, "head", st.d3, dyc);
        const Eigen::MatrixXd dr5 = norm_backward(theta, grad, "dec.ln3", st.ln5, dd3);
        Eigen::MatrixXd dgd = affine_backward(theta, grad, "dec.ff2", st.gd, dr5);
        const Eigen::MatrixXd dud = (dgd.array() * gelu_grad_of(st.ud).array()).matrix();
        Eigen::MatrixXd dd2 = dr5 + affine_backward(theta, grad, "dec.ff1", st.d2, dud);
        const Eigen::MatrixXd dr4 = norm_backward(theta, grad, "dec.ln2", st.ln4, dd2);
        const Eigen::MatrixXd doc = affine_backward(theta, grad, "dec.cross.o", st.oc, dr4);
        Eigen::MatrixXd dqc, dkc, dvc;
        detail::attention_backward(doc, st.qc, st.kc, st.vc, st.cross, dqc, dkc, dvc);
        Eigen::MatrixXd dd1 = dr4 + affine_backward(theta, grad, "dec.cross.q", st.d1, dqc);
        Eigen::MatrixXd denc = affine_backward(theta, grad, "dec.cross.k", st.enc, dkc);
        denc += affine_backward(theta, grad, "dec.cross.v", st.enc, dvc);
        const Eigen::MatrixXd dr3 = norm_backward(theta, grad, "dec.ln1", st.ln3, dd1);
        const Eigen::MatrixXd s = p(theta, "dec.start");
        const Eigen::MatrixXd dsv = affine_backward(theta, grad, "dec.self.o", st.sv, dr3);
        p(grad, "dec.start") += dr3 + affine_backward(theta, grad, "dec.self.v", s, dsv);

        const Eigen::MatrixXd dr2 = norm_backward(theta, grad, "enc.ln2", st.ln2, denc);
        const Eigen::MatrixXd dg = affine_backward(theta, grad, "enc.ff2", st.g, dr2);
        const Eigen::MatrixXd du = (dg.array() * gelu_grad_of(st.u).array()).matrix();
        const Eigen::MatrixXd dy1 = dr2 + affine_backward(theta, grad, "enc.ff1", st.y1, du);
        const Eigen::MatrixXd dr1 = norm_backward(theta, grad, "enc.ln1", st.ln1, dy1);
        const Eigen::MatrixXd dO = affine_backward(theta, grad, "enc.o", st.o, dr1);
        Eigen::MatrixXd dq, dk, dv;
        detail::attention_backward(dO, st.q, st.k, st.v, st.attn, dq, dk, dv);
        Eigen::MatrixXd dx0 = dr1;
        dx0 += affine_backward(theta, grad, "enc.q", st.x0, dq);
        dx0 += affine_backward(theta, grad, "enc.k", st.x0, dk);
        dx0 += affine_backward(theta, grad, "enc.v", st.x0, dv);
        affine_backward(theta, grad, "embed", st.x, dx0);
    }

    PredictorConfig config_;
    ParameterLayout layout_;
    Eigen::MatrixXd pe_;
};

}  // namespace clcp::nn
