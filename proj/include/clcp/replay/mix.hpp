#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clcp/core/error.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/loss.hpp"
#include "clcp/nn/predictor.hpp"
#include "clcp/replay/buffer.hpp"

namespace clcp::replay {

struct MixConfig {
    double lambda{0.5};
    std::size_t current_batch{32};
    std::size_t replay_batch{32};

    void validate() const {
        require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::config, "mix: lambda must lie in [0, 1]");
        require(current_batch >= 1, ErrorCode::config, "mix: current batch size must be >= 1");
    }
};

/// One training step's data: live-task samples plus indices into the buffer.
/// `lambda` is the weight actually applied, forced to 1 when nothing was replayed.
struct MixedBatch {
    std::vector<const nn::Sample*> current;
    std::vector<std::size_t> replay;
    double lambda{1.0};
};

[[nodiscard]] inline MixedBatch compose_batch(std::span<const nn::Sample* const> current, const ReplayBuffer& buffer,
                                              const MixConfig& mix, Rng& rng) {
    mix.validate();
    require(!current.empty(), ErrorCode::invalid_argument, "compose_batch: empty current batch");
    MixedBatch out;
    out.current.assign(current.begin(), current.end());
    if (!buffer.empty() && mix.replay_batch > 0) out.replay = buffer.sample_indices(mix.replay_batch, rng);
    out.lambda = out.replay.empty() ? 1.0 : mix.lambda;
    return out;
}

/// Draws the current part uniformly without replacement from `pool` as well.
[[nodiscard]] inline MixedBatch compose_batch(std::span<const nn::Sample> pool, const ReplayBuffer& buffer,
                                              const MixConfig& mix, Rng& rng) {
    require(!pool.empty(), ErrorCode::invalid_argument, "compose_batch: no current-task data");
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t n = std::min(mix.current_batch, pool.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<const nn::Sample*> current;
    for (std::size_t i = 0; i < n; ++i) current.push_back(&pool[idx[i]]);
    return compose_batch(std::span<const nn::Sample* const>(current), buffer, mix, rng);
}

/// lambda * L_current + (1 - lambda) * L_replay for losses already reduced.
[[nodiscard]] inline double mixed_loss(double current_nmse, double replay_nmse, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::invalid_argument, "mixed_loss: lambda must lie in [0, 1]");
    return lambda * current_nmse + (1.0 - lambda) * replay_nmse;
}

struct MixedLossGrad {
    double loss{0.0};
    std::vector<double> grad;
    Eigen::VectorXd current_nmse;  ///< per-sample, for stored losses at insertion
    Eigen::VectorXd replay_nmse;   ///< per-sample, for refresh_loss
};

/// Mixed objective and its gradient in a single forward/backward pass over the
/// concatenated batch, with column weights lambda/|Bc| and (1-lambda)/|Br|.
[[nodiscard]] inline MixedLossGrad mixed_loss_and_grad(const nn::Predictor& model, const MixedBatch& mb,
                                                       const ReplayBuffer& buffer, std::span<const double> theta) {
    require(!mb.current.empty(), ErrorCode::invalid_argument, "mixed loss: empty current batch");
    const std::size_t nc = mb.current.size();
    const std::size_t nr = mb.replay.size();
    std::vector<const nn::Sample*> all = mb.current;
    for (const auto i : mb.replay) {
        require(i < buffer.size(), ErrorCode::index_out_of_range, "mixed loss: stale replay index");
        all.push_back(&buffer[i].sample);
    }
    const nn::Batch batch = nn::pack_batch(std::span<const nn::Sample* const>(all));

    std::vector<double> w(nc + nr);
    for (std::size_t b = 0; b < nc; ++b) w[b] = mb.lambda * (1.0 / static_cast<double>(nc));
    for (std::size_t b = 0; b < nr; ++b) w[nc + b] = (1.0 - mb.lambda) * (1.0 / static_cast<double>(nr));

    nn::Predictor::Tape tape;
    const Eigen::MatrixXd y = model.forward(batch, theta, tape);
    Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    MixedLossGrad out;
    out.loss = nn::weighted_nmse(y, batch.targets, w, &dy);
    require(std::isfinite(out.loss), ErrorCode::non_finite, "mixed loss: non-finite loss");
    out.grad.assign(theta.size(), 0.0);
    model.backward(tape, dy, theta, out.grad);

    const Eigen::VectorXd per = nn::column_nmse(y, batch.targets);
    out.current_nmse = per.head(static_cast<Eigen::Index>(nc));
    out.replay_nmse = per.tail(static_cast<Eigen::Index>(nr));
    return out;
}

}  // namespace clcp::replay
