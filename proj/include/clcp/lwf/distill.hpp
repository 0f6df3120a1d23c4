#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "clcp/core/error.hpp"
#include "clcp/nn/batch.hpp"
#include "clcp/nn/config.hpp"
#include "clcp/nn/loss.hpp"
#include "clcp/nn/parameters.hpp"
#include "clcp/nn/predictor.hpp"

namespace clcp::lwf {

/// How the task and distillation terms combine:
///   convex   -> lambda * L_task + (1 - lambda) * L_distill
///   additive -> L_task + lambda * L_distill
enum class Variant { convex, additive };

NLOHMANN_JSON_SERIALIZE_ENUM(Variant, {{Variant::convex, "convex"}, {Variant::additive, "additive"}})

[[nodiscard]] inline std::string_view to_string(Variant v) noexcept {
    return v == Variant::convex ? "convex" : "additive";
}

[[nodiscard]] inline Variant parse_variant(std::string_view name) {
    if (name == "convex") return Variant::convex;
    if (name == "additive") return Variant::additive;
    throw Error(ErrorCode::config, "unknown LwF variant '" + std::string(name) + "'");
}

/// Frozen copy of the student at a task boundary.
class TeacherSnapshot {
public:
    TeacherSnapshot(nn::PredictorConfig config, nn::ParameterVector theta)
        : config_(std::move(config)), theta_(std::move(theta)), hash_(theta_.hash()) {}

    [[nodiscard]] const nn::PredictorConfig& config() const noexcept { return config_; }
    [[nodiscard]] const nn::ParameterVector& theta() const noexcept { return theta_; }
    /// Hash taken at creation; compare with theta().hash() to detect mutation.
    [[nodiscard]] std::uint64_t creation_hash() const noexcept { return hash_; }

private:
    nn::PredictorConfig config_;
    nn::ParameterVector theta_;
    std::uint64_t hash_;
};

[[nodiscard]] inline TeacherSnapshot advance_teacher(const nn::PredictorConfig& config,
                                                     const nn::ParameterVector& theta) {
    return TeacherSnapshot(config, theta);
}

struct DistillResult {
    double loss{0.0};
    std::size_t skipped{0};
};

namespace detail {

inline void check_compatible(const nn::Predictor& student, const TeacherSnapshot& teacher) {
    require(student.config() == teacher.config(), ErrorCode::config,
            "lwf: teacher and student configurations differ");
}

/// Weights 1/n over the columns whose teacher output is nonzero.
inline std::vector<double> distill_weights(const Eigen::MatrixXd& teacher_out, std::size_t& skipped) {
    std::vector<double> w(static_cast<std::size_t>(teacher_out.cols()), 0.0);
    std::size_t used = 0;
    for (Eigen::Index b = 0; b < teacher_out.cols(); ++b) used += teacher_out.col(b).squaredNorm() > 0.0;
    skipped = w.size() - used;
    if (used == 0) return w;
    for (Eigen::Index b = 0; b < teacher_out.cols(); ++b) {
        if (teacher_out.col(b).squaredNorm() > 0.0) w[static_cast<std::size_t>(b)] = 1.0 / static_cast<double>(used);
    }
    return w;
}

}  // namespace detail

/// Mean over the batch of ||y_old - y||^2 / ||y_old||^2. The ground-truth
/// targets are not consulted.
[[nodiscard]] inline DistillResult distill_loss(const nn::Predictor& student, const TeacherSnapshot& teacher,
                                                const nn::Batch& batch, std::span<const double> theta) {
    detail::check_compatible(student, teacher);
    require(batch.size() >= 1, ErrorCode::invalid_argument, "distill_loss: empty batch");
    const Eigen::MatrixXd y_old = student.forward(batch, teacher.theta().values);
    const Eigen::MatrixXd y = student.forward(batch, theta);
    DistillResult r;
    const auto w = detail::distill_weights(y_old, r.skipped);
    r.loss = nn::weighted_nmse(y, y_old, w, nullptr, true);
    return r;
}

[[nodiscard]] inline double lwf_total(double task_loss, double distill, double lambda, Variant variant) {
    if (variant == Variant::convex) {
        require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::invalid_argument, "lwf: convex lambda must lie in [0, 1]");
        return lambda * task_loss + (1.0 - lambda) * distill;
    }
    require(lambda >= 0.0, ErrorCode::invalid_argument, "lwf: additive lambda must be nonnegative");
    return task_loss + lambda * distill;
}

struct LwfLossGrad {
    double loss{0.0};
    double task{0.0};
    double distill{0.0};
    std::size_t skipped{0};
    std::vector<double> grad;
};

/// Combined objective with one student forward/backward. Without a teacher
/// (first task) the objective is the plain task NMSE.
[[nodiscard]] inline LwfLossGrad lwf_loss_and_grad(const nn::Predictor& student, const TeacherSnapshot* teacher,
                                                   const nn::Batch& batch, std::span<const double> theta,
                                                   double lambda, Variant variant) {
    require(batch.size() >= 1, ErrorCode::invalid_argument, "lwf: empty batch");
    (void)lwf_total(0.0, 0.0, lambda, variant);  // validates lambda
    double task_weight = 1.0;
    double distill_weight = 0.0;
    if (teacher) {
        detail::check_compatible(student, *teacher);
        task_weight = variant == Variant::convex ? lambda : 1.0;
        distill_weight = variant == Variant::convex ? 1.0 - lambda : lambda;
    }

    nn::Predictor::Tape tape;
    const Eigen::MatrixXd y = student.forward(batch, theta, tape);
    Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    LwfLossGrad out;

    auto task_w = nn::uniform_weights(batch.size());
    for (auto& w : task_w) w *= task_weight;
    const double task_part = nn::weighted_nmse(y, batch.targets, task_w, &dy);
    out.task = nn::column_nmse(y, batch.targets).mean();
    out.loss = task_part;

    if (teacher) {
        const Eigen::MatrixXd y_old = student.forward(batch, teacher->theta().values);
        auto w = detail::distill_weights(y_old, out.skipped);
        out.distill = nn::weighted_nmse(y, y_old, w, nullptr, true);
        for (auto& v : w) v *= distill_weight;
        out.loss += nn::weighted_nmse(y, y_old, w, &dy, true);
    }
    require(std::isfinite(out.loss), ErrorCode::non_finite, "lwf: non-finite loss");
    out.grad.assign(theta.size(), 0.0);
    student.backward(tape, dy, theta, out.grad);
    return out;
}

}  // namespace clcp::lwf
