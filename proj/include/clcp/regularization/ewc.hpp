#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "clcp/core/error.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/checkpoint.hpp"
#include "clcp/nn/loss.hpp"
#include "clcp/nn/predictor.hpp"

namespace clcp::regularization {

/// Quadratic anchor value together with its gradient.
struct PenaltyGrad {
    double value{0.0};
    std::vector<double> grad;
};

/// Mean of squared per-sample gradients. `per_sample_grad(i, g)` must write
/// the gradient of sample i's loss into the zeroed buffer g of length P.
template <class PerSampleGrad>
[[nodiscard]] std::vector<double> compute_fisher(std::size_t n_samples, std::size_t n_params,
                                                 PerSampleGrad&& per_sample_grad) {
    require(n_samples >= 1, ErrorCode::invalid_argument, "compute_fisher: no data");
    std::vector<double> fisher(n_params, 0.0);
    std::vector<double> g(n_params);
    for (std::size_t i = 0; i < n_samples; ++i) {
        std::fill(g.begin(), g.end(), 0.0);
        per_sample_grad(i, std::span<double>(g));
        for (std::size_t p = 0; p < n_params; ++p) {
            if (!std::isfinite(g[p])) {
                throw Error(ErrorCode::non_finite, "compute_fisher: non-finite gradient at sample " +
                                                       std::to_string(i) + ", parameter " + std::to_string(p));
            }
            fisher[p] += g[p] * g[p];
        }
    }
    for (auto& f : fisher) f /= static_cast<double>(n_samples);
    return fisher;
}

struct FisherOptions {
    /// Squares mini-batch gradients instead of per-sample ones. Cheaper, but
    /// only an approximation of the per-sample diagonal.
    bool minibatch{false};
    std::size_t batch_size{32};
};

/// Diagonal Fisher of the NMSE loss over `data` at `theta`.
[[nodiscard]] inline std::vector<double> compute_fisher(const nn::Predictor& model, std::span<const nn::Sample> data,
                                                        std::span<const double> theta, FisherOptions opt = {}) {
    require(!data.empty(), ErrorCode::invalid_argument, "compute_fisher: no data");
    const std::size_t step = opt.minibatch ? std::max<std::size_t>(opt.batch_size, 1) : 1;
    const std::size_t n_groups = (data.size() + step - 1) / step;
    return compute_fisher(n_groups, theta.size(), [&](std::size_t i, std::span<double> g) {
        const auto chunk = data.subspan(i * step, std::min(step, data.size() - i * step));
        const auto lg = nn::loss_and_grad(model, nn::pack_batch(chunk), theta);
        std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
    });
}

struct FisherSnapshot {
    std::vector<double> theta_star;
    std::vector<double> fisher;
    std::size_t task_id{0};

    bool operator==(const FisherSnapshot&) const = default;
};

struct EwcState {
    std::vector<FisherSnapshot> bank;
    double alpha{0.4};

    bool operator==(const EwcState&) const = default;
};

/// (alpha / 2) sum_j sum_i F_ji (theta_i - theta*_ji)^2 and its gradient.
[[nodiscard]] inline PenaltyGrad ewc_penalty(std::span<const double> theta, const EwcState& state) {
    PenaltyGrad out;
    out.grad.assign(theta.size(), 0.0);
    for (const auto& snap : state.bank) {
        require(snap.theta_star.size() == theta.size() && snap.fisher.size() == theta.size(),
                ErrorCode::shape_mismatch, "ewc_penalty: snapshot length does not match parameters");
        double sum = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double d = theta[i] - snap.theta_star[i];
            sum += snap.fisher[i] * d * d;
            out.grad[i] += state.alpha * snap.fisher[i] * d;
        }
        out.value += 0.5 * state.alpha * sum;
    }
    return out;
}

/// Appends a snapshot of the post-task optimum and its Fisher diagonal.
inline void end_task_ewc(EwcState& state, const nn::Predictor& model, std::span<const double> theta,
                         std::span<const nn::Sample> task_data, FisherOptions opt = {}) {
    FisherSnapshot snap;
    snap.theta_star.assign(theta.begin(), theta.end());
    snap.fisher = compute_fisher(model, task_data, theta, opt);
    snap.task_id = state.bank.size();
    state.bank.push_back(std::move(snap));
}

[[nodiscard]] inline io::VectorArchive to_archive(const EwcState& state) {
    io::VectorArchive a;
    a.meta = {{"kind", "ewc-state"}, {"alpha", state.alpha}, {"snapshots", state.bank.size()}};
    for (std::size_t k = 0; k < state.bank.size(); ++k) {
        char key[32];
        std::snprintf(key, sizeof key, "bank.%04zu.", k);
        a.vectors[std::string(key) + "fisher"] = state.bank[k].fisher;
        a.vectors[std::string(key) + "theta"] = state.bank[k].theta_star;
        a.meta["task_ids"].push_back(state.bank[k].task_id);
    }
    return a;
}

[[nodiscard]] inline EwcState ewc_from_archive(const io::VectorArchive& a) {
    require(a.meta.value("kind", "") == "ewc-state", ErrorCode::format, "archive does not hold an EWC state");
    EwcState state;
    state.alpha = a.meta.at("alpha").get<double>();
    const auto n = a.meta.at("snapshots").get<std::size_t>();
    for (std::size_t k = 0; k < n; ++k) {
        char key[32];
        std::snprintf(key, sizeof key, "bank.%04zu.", k);
        const auto f = a.vectors.find(std::string(key) + "fisher");
        const auto t = a.vectors.find(std::string(key) + "theta");
        require(f != a.vectors.end() && t != a.vectors.end(), ErrorCode::format, "EWC archive: missing snapshot");
        state.bank.push_back({t->second, f->second, a.meta.at("task_ids").at(k).get<std::size_t>()});
    }
    return state;
}

}  // namespace clcp::regularization
