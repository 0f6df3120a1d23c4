#pragma once

#include <span>
#include <vector>

#include "clcp/core/error.hpp"
#include "clcp/nn/checkpoint.hpp"
#include "clcp/regularization/ewc.hpp"

namespace clcp::regularization {

/// Synaptic-intelligence bookkeeping. `omega` holds the consolidated
/// importance, `omega_tilde` the running path integral of the current task
/// and `theta_ref` the parameters at the start of that task.
struct SiState {
    std::vector<double> omega;
    std::vector<double> omega_tilde;
    std::vector<double> theta_ref;
    double beta{0.6};
    double xi{1e-3};

    bool operator==(const SiState&) const = default;
};

[[nodiscard]] inline SiState make_si_state(std::span<const double> theta, double beta = 0.6, double xi = 1e-3) {
    require(xi > 0.0, ErrorCode::config, "si: damping xi must be positive");
    require(beta >= 0.0, ErrorCode::config, "si: beta must be nonnegative");
    SiState s;
    s.omega.assign(theta.size(), 0.0);
    s.omega_tilde.assign(theta.size(), 0.0);
    s.theta_ref.assign(theta.begin(), theta.end());
    s.beta = beta;
    s.xi = xi;
    return s;
}

/// omega_tilde += g^2 * eta, once per optimizer step with the task gradient.
inline void si_accumulate(SiState& state, std::span<const double> grad, double eta) {
    require(grad.size() == state.omega_tilde.size(), ErrorCode::shape_mismatch, "si_accumulate: length mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i) state.omega_tilde[i] += grad[i] * grad[i] * eta;
}

/// End of task: fold the path integral into omega and re-anchor at theta.
inline void si_consolidate(SiState& state, std::span<const double> theta) {
    require(theta.size() == state.omega.size(), ErrorCode::shape_mismatch, "si_consolidate: length mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double d = theta[i] - state.theta_ref[i];
        state.omega[i] += state.omega_tilde[i] / (d * d + state.xi);
        state.omega_tilde[i] = 0.0;
        state.theta_ref[i] = theta[i];
    }
}

/// (beta / 2) sum_i omega_i (theta_i - theta_ref_i)^2 and its gradient.
[[nodiscard]] inline PenaltyGrad si_penalty(std::span<const double> theta, const SiState& state) {
    require(theta.size() == state.omega.size(), ErrorCode::shape_mismatch, "si_penalty: length mismatch");
    PenaltyGrad out;
    out.grad.resize(theta.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double d = theta[i] - state.theta_ref[i];
        sum += state.omega[i] * d * d;
        out.grad[i] = state.beta * state.omega[i] * d;
    }
    out.value = 0.5 * state.beta * sum;
    return out;
}

[[nodiscard]] inline io::VectorArchive to_archive(const SiState& s) {
    io::VectorArchive a;
    a.meta = {{"kind", "si-state"}, {"beta", s.beta}, {"xi", s.xi}};
    a.vectors["omega"] = s.omega;
    a.vectors["omega_tilde"] = s.omega_tilde;
    a.vectors["theta_ref"] = s.theta_ref;
    return a;
}

[[nodiscard]] inline SiState si_from_archive(const io::VectorArchive& a) {
    require(a.meta.value("kind", "") == "si-state", ErrorCode::format, "archive does not hold an SI state");
    SiState s;
    s.beta = a.meta.at("beta").get<double>();
    s.xi = a.meta.at("xi").get<double>();
    try {
        s.omega = a.vectors.at("omega");
        s.omega_tilde = a.vectors.at("omega_tilde");
        s.theta_ref = a.vectors.at("theta_ref");
    } catch (const std::out_of_range&) {
        throw Error(ErrorCode::format, "SI archive: missing vector");
    }
    require(s.omega.size() == s.omega_tilde.size() && s.omega.size() == s.theta_ref.size(), ErrorCode::format,
            "SI archive: vector lengths differ");
    return s;
}

}  // namespace clcp::regularization
