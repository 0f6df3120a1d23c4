#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clcp/core/error.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/predictor.hpp"

namespace clcp::nn {

/// Per-sample NMSE of columns, ||y_b - t_b||^2 / ||t_b||^2.
[[nodiscard]] inline Eigen::VectorXd column_nmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t) {
    require(y.rows() == t.rows() && y.cols() == t.cols(), ErrorCode::shape_mismatch, "column_nmse: shape mismatch");
    const Eigen::VectorXd ref = t.colwise().squaredNorm().transpose();
    require((ref.array() > 0.0).all(), ErrorCode::degenerate_sample, "nmse: target has zero norm");
    return (y - t).colwise().squaredNorm().transpose().cwiseQuotient(ref);
}

/// sum_b w_b * nmse_b, adding its gradient with respect to y into `dy` when
/// given. Columns with a zero-norm reference throw unless `skip_degenerate`
/// is set, in which case they are left out and counted in `skipped`.
inline double weighted_nmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t, std::span<const double> weights,
                            Eigen::MatrixXd* dy, bool skip_degenerate = false, std::size_t* skipped = nullptr) {
    require(y.rows() == t.rows() && y.cols() == t.cols(), ErrorCode::shape_mismatch, "weighted_nmse: shape mismatch");
    require(weights.size() == static_cast<std::size_t>(y.cols()), ErrorCode::shape_mismatch,
            "weighted_nmse: one weight per column required");
    double loss = 0.0;
    for (Eigen::Index b = 0; b < y.cols(); ++b) {
        const double ref = t.col(b).squaredNorm();
        if (ref == 0.0) {
            require(skip_degenerate, ErrorCode::degenerate_sample, "nmse: target has zero norm");
            if (skipped) ++*skipped;
            continue;
        }
        const double w = weights[static_cast<std::size_t>(b)];
        const Eigen::VectorXd diff = y.col(b) - t.col(b);
        loss += w * diff.squaredNorm() / ref;
        if (dy) dy->col(b) += (2.0 * w / ref) * diff;
    }
    return loss;
}

[[nodiscard]] inline std::vector<double> uniform_weights(std::size_t n, double total = 1.0) {
    return std::vector<double>(n, total / static_cast<double>(n));
}

struct LossGrad {
    double loss{0.0};
    std::vector<double> grad;
};

/// Batch-mean NMSE and its exact gradient with respect to every parameter.
[[nodiscard]] inline LossGrad loss_and_grad(const Predictor& model, const Batch& batch, std::span<const double> theta) {
    require(batch.size() >= 1, ErrorCode::invalid_argument, "loss_and_grad: empty batch");
    Predictor::Tape tape;
    const Eigen::MatrixXd y = model.forward(batch, theta, tape);
    Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    const auto w = uniform_weights(batch.size());
    LossGrad out;
    out.loss = weighted_nmse(y, batch.targets, w, &dy);
    require(std::isfinite(out.loss), ErrorCode::non_finite, "loss_and_grad: non-finite loss");
    out.grad.assign(theta.size(), 0.0);
    model.backward(tape, dy, theta, out.grad);
    return out;
}

[[nodiscard]] inline double batch_nmse(const Predictor& model, const Batch& batch, std::span<const double> theta) {
    return column_nmse(model.forward(batch, theta), batch.targets).mean();
}

}  // namespace clcp::nn
