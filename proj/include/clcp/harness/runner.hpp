#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "clcp/core/error.hpp"
#include "clcp/core/metrics.hpp"
#include "clcp/core/noise.hpp"
#include "clcp/core/random.hpp"
#include "clcp/harness/config.hpp"
#include "clcp/harness/data.hpp"
#include "clcp/harness/metrics.hpp"
#include "clcp/lwf/distill.hpp"
#include "clcp/nn/loss.hpp"
#include "clcp/nn/optim.hpp"
#include "clcp/nn/predictor.hpp"
#include "clcp/regularization/ewc.hpp"
#include "clcp/regularization/si.hpp"
#include "clcp/replay/buffer.hpp"
#include "clcp/replay/mix.hpp"

namespace clcp::harness {

/// Receives one human-readable, `key=value` formatted line per event.
using ProgressFn = std::function<void(const std::string&)>;

inline constexpr std::size_t eval_chunk = 256;

/// Mean per-sample NMSE (linear) of `theta` on `data`.
[[nodiscard]] inline double evaluate_nmse(const nn::Predictor& model, std::span<const double> theta,
                                          std::span<const nn::Sample> data) {
    require(!data.empty(), ErrorCode::missing_data, "evaluate: empty test set");
    double sum = 0.0;
    for (std::size_t start = 0; start < data.size(); start += eval_chunk) {
        const auto chunk = data.subspan(start, std::min(eval_chunk, data.size() - start));
        const auto batch = nn::pack_batch(chunk);
        sum += nn::column_nmse(model.forward(batch, theta), batch.targets).sum();
    }
    return sum / static_cast<double>(data.size());
}

struct SnrPoint {
    double snr_db{0.0};
    double nmse_db{0.0};
};

/// Adds white noise at each SNR to the input windows only and scores the
/// prediction against the clean target. An infinite SNR is the noiseless pass.
[[nodiscard]] inline std::vector<SnrPoint> snr_sweep_eval(const nn::Predictor& model, std::span<const double> theta,
                                                          std::span<const nn::Sample> data,
                                                          std::span<const double> grid, Rng& rng) {
    std::vector<SnrPoint> out;
    for (const double snr : grid) {
        if (std::isinf(snr) && snr > 0) {
            out.push_back({snr, to_db(evaluate_nmse(model, theta, data))});
            continue;
        }
        double sum = 0.0;
        std::vector<nn::Sample> noisy;
        for (std::size_t start = 0; start < data.size(); start += eval_chunk) {
            const std::size_t n = std::min(eval_chunk, data.size() - start);
            noisy.clear();
            for (std::size_t i = 0; i < n; ++i) {
                const auto& s = data[start + i];
                noisy.push_back({awgn_corrupt(s.window, DbValue{snr}, rng), s.target});
            }
            const auto batch = nn::pack_batch(std::span<const nn::Sample>(noisy));
            sum += nn::column_nmse(model.forward(batch, theta), batch.targets).sum();
        }
        out.push_back({snr, to_db(sum / static_cast<double>(data.size()))});
    }
    return out;
}

[[nodiscard]] inline std::vector<TaskData> load_tasks(const ExperimentConfig& config, std::uint64_t seed) {
    std::vector<TaskData> tasks;
    for (const auto& name : config.tasks) tasks.push_back(load_task(config, name, seed));
    const std::size_t d_in = tasks.front().d_in();
    for (const auto& t : tasks) {
        require(t.d_in() == d_in, ErrorCode::missing_data,
                "task " + t.name + " has a different array size than " + tasks.front().name);
    }
    return tasks;
}

namespace detail {

inline std::string fmt_db(double v) {
    std::ostringstream s;
    s.precision(4);
    s << std::fixed << v;
    return s.str();
}

/// State and hooks of one training run.
class Trainer {
public:
    Trainer(const ExperimentConfig& config, std::uint64_t seed, std::size_t d_in)
        : config_(config), seed_(seed), model_(with_d_in(config.model, d_in)),
          theta_(model_.initial_parameters(derive_seed(seed, {fnv1a("model")}))),
          buffer_(config.method == Method::er_reservoir || config.method == Method::er_lars ? config.buffer : 0,
                  config.method == Method::er_lars ? replay::EvictionPolicy::lars : replay::EvictionPolicy::uniform,
                  derive_seed(seed, {fnv1a("buffer")}), config.epsilon),
          replay_rng_(make_rng(seed, {fnv1a("replay.sample")})),
          optimizer_(config.optim, theta_.values.size()) {
        ewc_.alpha = config.alpha;
        if (config.method == Method::si) si_ = regularization::make_si_state(theta_.values, config.beta, config.xi);
    }

    [[nodiscard]] const nn::Predictor& model() const noexcept { return model_; }
    [[nodiscard]] const nn::ParameterVector& theta() const noexcept { return theta_; }
    [[nodiscard]] const replay::ReplayBuffer& buffer() const noexcept { return buffer_; }
    [[nodiscard]] const regularization::EwcState& ewc() const noexcept { return ewc_; }
    [[nodiscard]] std::size_t distill_skipped() const noexcept { return distill_skipped_; }

    void train_stage(std::span<const nn::Sample> data, std::size_t stage) {
        const std::size_t B = config_.optim.batch_size;
        std::vector<std::size_t> order(data.size());
        std::vector<const nn::Sample*> current;
        for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            Rng shuffle = make_rng(seed_, {fnv1a("shuffle"), stage, epoch});
            std::shuffle(order.begin(), order.end(), shuffle);
            for (std::size_t start = 0; start < order.size(); start += B) {
                current.clear();
                for (std::size_t k = start; k < std::min(start + B, order.size()); ++k) current.push_back(&data[order[k]]);
                step(current, epoch == 0);
            }
        }
    }

    /// Task-boundary hooks: Fisher snapshot, SI consolidation, new teacher.
    void end_stage(std::span<const nn::Sample> data) {
        switch (config_.method) {
            case Method::ewc: {
                regularization::FisherOptions opt;
                opt.minibatch = config_.fisher_minibatch;
                opt.batch_size = config_.optim.batch_size;
                regularization::end_task_ewc(ewc_, model_, theta_.values, data, opt);
                break;
            }
            case Method::si: regularization::si_consolidate(*si_, theta_.values); break;
            case Method::lwf: teacher_.emplace(lwf::advance_teacher(model_.config(), theta_)); break;
            default: break;
        }
    }

private:
    static nn::PredictorConfig with_d_in(nn::PredictorConfig c, std::size_t d_in) {
        c.d_in = d_in;
        return c;
    }

    void step(const std::vector<const nn::Sample*>& current, bool first_epoch) {
        const std::span<const nn::Sample* const> cur(current);
        std::vector<double> grad;
        switch (config_.method) {
            case Method::er_reservoir:
            case Method::er_lars: {
                replay::MixConfig mix{config_.lambda, current.size(), config_.effective_replay_batch()};
                const auto mb = replay::compose_batch(cur, buffer_, mix, replay_rng_);
                auto lg = replay::mixed_loss_and_grad(model_, mb, buffer_, theta_.values);
                for (std::size_t k = 0; k < mb.replay.size(); ++k) {
                    buffer_.refresh_loss(mb.replay[k], lg.replay_nmse(static_cast<Eigen::Index>(k)));
                }
                // Every live sample is offered to the reservoir once, on its
                // first pass, with the loss it produced before the update.
                if (first_epoch) {
                    for (std::size_t b = 0; b < current.size(); ++b) {
                        buffer_.insert({*current[b], lg.current_nmse(static_cast<Eigen::Index>(b))});
                    }
                }
                grad = std::move(lg.grad);
                break;
            }
            case Method::lwf: {
                const auto batch = nn::pack_batch(cur);
                auto lg = lwf::lwf_loss_and_grad(model_, teacher_ ? &*teacher_ : nullptr, batch, theta_.values,
                                                 config_.lambda, config_.lwf_variant);
                distill_skipped_ += lg.skipped;
                grad = std::move(lg.grad);
                break;
            }
            default: {
                auto lg = nn::loss_and_grad(model_, nn::pack_batch(cur), theta_.values);
                grad = std::move(lg.grad);
                if (config_.method == Method::ewc) {
                    const auto pen = regularization::ewc_penalty(theta_.values, ewc_);
                    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pen.grad[i];
                } else if (config_.method == Method::si) {
                    const auto pen = regularization::si_penalty(theta_.values, *si_);
                    regularization::si_accumulate(*si_, grad, config_.optim.learning_rate);
                    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pen.grad[i];
                }
                break;
            }
        }
        optimizer_.step(theta_.flat(), grad);
    }

    const ExperimentConfig& config_;
    std::uint64_t seed_;
    nn::Predictor model_;
    nn::ParameterVector theta_;
    replay::ReplayBuffer buffer_;
    Rng replay_rng_;
    nn::Optimizer optimizer_;
    regularization::EwcState ewc_;
    std::optional<regularization::SiState> si_;
    std::optional<lwf::TeacherSnapshot> teacher_;
    std::size_t distill_skipped_{0};
};

inline MetricsRecord blank_record(const ExperimentConfig& c, std::uint64_t seed) {
    MetricsRecord r;
    r.method = to_string(c.method);
    r.backbone = nn::to_string(c.model.backbone);
    r.seq_len = c.model.seq_len;
    r.buffer = is_replay(c.method) ? c.buffer : 0;
    r.lambda = c.lambda;
    r.lwf_variant = c.method == Method::lwf ? std::string(lwf::to_string(c.lwf_variant)) : "";
    r.seed = seed;
    r.tasks = c.tasks;
    return r;
}

}  // namespace detail

/// Runs one seed of `config`. Continual methods train through the task list in
/// order; `joint` trains once on the union of all tasks and `zero-shot` on
/// `zero_shot_task` alone. After every stage each task's test split is scored
/// without noise; the final model is additionally swept over the SNR grid.
/// A non-finite loss stops the run and marks the record as diverged.
[[nodiscard]] inline MetricsRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                                                  const std::vector<TaskData>& tasks, const ProgressFn& progress = {},
                                                  nn::ParameterVector* final_theta = nullptr) {
    config.validate();
    require(tasks.size() == config.tasks.size(), ErrorCode::missing_data, "run: task data does not match the sequence");
    const auto t0 = std::chrono::steady_clock::now();
    MetricsRecord rec = detail::blank_record(config, seed);
    auto log = [&](const std::string& line) {
        if (progress) progress(line);
    };
    const std::string tag = "method=" + rec.method + " backbone=" + rec.backbone + " seed=" + std::to_string(seed);

    detail::Trainer trainer(config, seed, tasks.front().d_in());
    auto evaluate_stage = [&](const std::string& stage) {
        rec.stages.push_back(stage);
        rec.stage_nmse_db.emplace_back();
        for (const auto& t : tasks) {
            const double db = to_db(evaluate_nmse(trainer.model(), trainer.theta().values, t.test));
            rec.stage_nmse_db.back().push_back(db);
            log("eval " + tag + " stage=" + stage + " task=" + t.name + " snr=inf nmse_db=" + detail::fmt_db(db));
        }
    };

    try {
        if (config.method == Method::joint) {
            std::vector<nn::Sample> all;
            for (const auto& t : tasks) all.insert(all.end(), t.train.begin(), t.train.end());
            trainer.train_stage(all, 0);
            evaluate_stage("joint");
        } else if (config.method == Method::zero_shot) {
            const auto& t = tasks.at(rec.task_index(config.zero_shot_task));
            trainer.train_stage(t.train, 0);
            evaluate_stage(t.name);
        } else {
            for (std::size_t k = 0; k < tasks.size(); ++k) {
                trainer.train_stage(tasks[k].train, k);
                trainer.end_stage(tasks[k].train);
                evaluate_stage(tasks[k].name);
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::non_finite && e.code() != ErrorCode::divergence) throw;
        rec.status = "diverged";
        rec.diagnostic = e.what();
        log("diverged " + tag + " stage=" + std::to_string(rec.stages.size()) + " reason=\"" + rec.diagnostic + "\"");
    }

    if (rec.status == "ok") {
        compute_forgetting(rec);
        for (std::size_t j = 0; j < tasks.size(); ++j) {
            Rng rng = make_rng(seed, {fnv1a("snr"), j});
            for (const auto& p : snr_sweep_eval(trainer.model(), trainer.theta().values, tasks[j].test,
                                                config.snr_grid, rng)) {
                rec.sweep.push_back({tasks[j].name, p.snr_db, p.nmse_db});
                log("sweep " + tag + " task=" + tasks[j].name + " snr=" + detail::fmt(p.snr_db) +
                    " nmse_db=" + detail::fmt_db(p.nmse_db));
            }
        }
    }
    rec.ewc_snapshots = trainer.ewc().bank.size();
    rec.buffer_items = trainer.buffer().size();
    rec.distill_skipped = trainer.distill_skipped();
    rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (final_theta) *final_theta = trainer.theta();
    return rec;
}

[[nodiscard]] inline MetricsRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                                                  const ProgressFn& progress = {}) {
    return run_experiment(config, seed, load_tasks(config, seed), progress);
}

/// Sequential training through the task list with a continual method.
[[nodiscard]] inline MetricsRecord run_continual(const ExperimentConfig& config, std::uint64_t seed,
                                                 const ProgressFn& progress = {}) {
    require(!is_baseline(config.method), ErrorCode::config,
            "run_continual: '" + to_string(config.method) + "' is a baseline, use run_baseline");
    return run_experiment(config, seed, progress);
}

/// Zero-shot or joint training, evaluated on every task of the sequence.
[[nodiscard]] inline MetricsRecord run_baseline(const ExperimentConfig& config, std::uint64_t seed,
                                                const ProgressFn& progress = {}) {
    require(is_baseline(config.method), ErrorCode::config,
            "run_baseline: '" + to_string(config.method) + "' is not a baseline");
    return run_experiment(config, seed, progress);
}

/// One record per seed, in seed order. Seeds run on up to `config.threads`
/// workers; every run is self-contained, so the thread count never changes
/// a record. `final_thetas`, when given, receives each seed's trained weights.
[[nodiscard]] inline std::vector<MetricsRecord> run_seeds(const ExperimentConfig& config,
                                                          const ProgressFn& progress = {},
                                                          std::vector<nn::ParameterVector>* final_thetas = nullptr) {
    config.validate();
    std::vector<MetricsRecord> records(config.seeds.size());
    if (final_thetas) final_thetas->assign(config.seeds.size(), {});
    std::vector<std::exception_ptr> errors(config.seeds.size());
    std::mutex log_mutex;
    ProgressFn locked;
    if (progress) {
        locked = [&](const std::string& line) {
            const std::lock_guard lock(log_mutex);
            progress(line);
        };
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            try {
                const auto seed = config.seeds[i];
                records[i] = run_experiment(config, seed, load_tasks(config, seed), locked,
                                            final_thetas ? &(*final_thetas)[i] : nullptr);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::min(config.threads, records.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return records;
}

}  // namespace clcp::harness
