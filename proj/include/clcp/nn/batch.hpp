#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clcp/core/error.hpp"
#include "clcp/core/tensor.hpp"

namespace clcp::nn {

/// One supervised example: a [T x n_rb x n_tx x n_rx] history and the
/// [n_rb x n_tx x n_rx] channel of the next slot.
struct Sample {
    ComplexTensor window;
    ComplexTensor target;

    bool operator==(const Sample&) const = default;
};

/// Real-valued mini-batch. `steps[t]` is d_in x B with one column per sample;
/// `targets` is d_out x B.
struct Batch {
    std::vector<Eigen::MatrixXd> steps;
    Eigen::MatrixXd targets;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(targets.cols()); }
    [[nodiscard]] std::size_t seq_len() const noexcept { return steps.size(); }
    [[nodiscard]] std::size_t d_in() const noexcept {
        return steps.empty() ? 0 : static_cast<std::size_t>(steps.front().rows());
    }
};

/// Writes entries as interleaved (re, im) pairs.
inline void flatten_into(std::span<const std::complex<double>> values, double* out) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[2 * i] = values[i].real();
        out[2 * i + 1] = values[i].imag();
    }
}

/// Inverse of the flattening: a real column back to a complex tensor of `shape`.
[[nodiscard]] inline ComplexTensor unflatten(const Eigen::Ref<const Eigen::VectorXd>& column, const Shape& shape) {
    ComplexTensor out(shape);
    require(static_cast<std::size_t>(column.size()) == 2 * out.size(), ErrorCode::shape_mismatch,
            "unflatten: feature length does not match " + shape_string(shape));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {column(2 * i), column(2 * i + 1)};
    return out;
}

[[nodiscard]] inline Batch pack_batch(std::span<const Sample* const> samples) {
    require(!samples.empty(), ErrorCode::invalid_argument, "pack_batch: empty batch");
    const auto& first = *samples.front();
    require(first.window.rank() >= 2, ErrorCode::shape_mismatch, "pack_batch: window must have a time axis");
    const std::size_t T = first.window.shape().front();
    const std::size_t per_step = first.window.size() / T;
    const auto B = static_cast<Eigen::Index>(samples.size());
    const auto d = static_cast<Eigen::Index>(2 * per_step);

    Batch batch;
    batch.steps.assign(T, Eigen::MatrixXd(d, B));
    batch.targets.resize(static_cast<Eigen::Index>(2 * first.target.size()), B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const Sample& s = *samples[static_cast<std::size_t>(b)];
        if (s.window.shape() != first.window.shape() || s.target.shape() != first.target.shape()) {
            throw Error(ErrorCode::shape_mismatch, "pack_batch: samples have differing shapes");
        }
        const auto w = s.window.data();
        for (std::size_t t = 0; t < T; ++t) {
            flatten_into(w.subspan(t * per_step, per_step), batch.steps[t].col(b).data());
        }
        flatten_into(s.target.data(), batch.targets.col(b).data());
    }
    return batch;
}

[[nodiscard]] inline Batch pack_batch(std::span<const Sample> samples) {
    std::vector<const Sample*> ptrs;
    ptrs.reserve(samples.size());
    for (const auto& s : samples) ptrs.push_back(&s);
    return pack_batch(std::span<const Sample* const>(ptrs));
}

}  // namespace clcp::nn
