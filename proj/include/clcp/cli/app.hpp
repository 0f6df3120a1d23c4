#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clcp/channel/dataset.hpp"
#include "clcp/core/error.hpp"
#include "clcp/harness/ablation.hpp"
#include "clcp/harness/config.hpp"
#include "clcp/harness/data.hpp"
#include "clcp/harness/metrics.hpp"
#include "clcp/harness/runner.hpp"
#include "clcp/nn/checkpoint.hpp"

namespace clcp::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2, exit_data = 3, exit_divergence = 4 };

[[nodiscard]] inline int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::config:
        case ErrorCode::invalid_argument: return exit_usage;
        case ErrorCode::io:
        case ErrorCode::format:
        case ErrorCode::missing_data:
        case ErrorCode::shape_mismatch:
        case ErrorCode::degenerate_sample: return exit_data;
        case ErrorCode::non_finite:
        case ErrorCode::divergence: return exit_divergence;
        default: return exit_failure;
    }
}

/// Directory of one run: `<root>/<method>/<backbone>/<seed>`.
[[nodiscard]] inline std::filesystem::path run_directory(const std::filesystem::path& root,
                                                         const harness::MetricsRecord& r) {
    return root / r.method / r.backbone / std::to_string(r.seed);
}

namespace detail {

/// Flags that map onto ExperimentConfig fields. Each one mirrors an INI key
/// and, when given, wins over the file.
struct ExperimentFlags {
    std::string config;
    std::optional<std::string> method, tasks, zero_shot_task, seeds, snr, backbone, optimizer, lwf_variant, data_dir;
    std::optional<std::size_t> epochs, seq_len, layers, hidden, d_model, heads, ffn_width, batch_size, buffer,
        replay_batch, users, n_tx, n_rb, n_rx, window_stride, max_windows;
    std::optional<double> learning_rate, clip_norm, adam_beta1, adam_beta2, adam_epsilon, lambda, alpha, beta, xi, epsilon,
        train_fraction;
    bool full_scale{false};
    bool fisher_minibatch{false};
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::size_t threads{1};
    bool quiet{false};
};

inline void add_experiment_flags(CLI::App& cmd, ExperimentFlags& f, bool with_method) {
    cmd.add_option("--config", f.config, "INI experiment file; flags override its values")->check(CLI::ExistingFile);
    if (with_method) {
        cmd.add_option("--method", f.method,
                       "naive | er-reservoir | er-lars | ewc | si | lwf | joint | zero-shot [experiment.method]");
    }
    cmd.add_option("--tasks", f.tasks, "comma-separated scenario sequence [experiment.tasks]");
    cmd.add_option("--zero-shot-task", f.zero_shot_task, "training scenario of zero-shot [experiment.zero_shot_task]");
    cmd.add_option("--seeds", f.seeds, "comma-separated seeds, overrides --seed [experiment.seeds]");
    cmd.add_option("--epochs", f.epochs, "epochs per task [experiment.epochs]");
    cmd.add_option("--backbone", f.backbone, "lstm | gru | transformer [model.backbone]");
    cmd.add_option("--seq-len", f.seq_len, "input window length T [model.seq_len]");
    cmd.add_option("--layers", f.layers, "recurrent layers [model.layers]");
    cmd.add_option("--hidden", f.hidden, "recurrent hidden width [model.hidden]");
    cmd.add_option("--d-model", f.d_model, "transformer width [model.d_model]");
    cmd.add_option("--heads", f.heads, "attention heads [model.heads]");
    cmd.add_option("--ffn-width", f.ffn_width, "transformer feed-forward width [model.ffn_width]");
    cmd.add_option("--optimizer", f.optimizer, "sgd | adam [optim.optimizer]");
    cmd.add_option("--lr", f.learning_rate, "learning rate [optim.learning_rate]");
    cmd.add_option("--batch-size", f.batch_size, "current mini-batch size [optim.batch_size]");
    cmd.add_option("--clip-norm", f.clip_norm, "gradient norm clip, 0 disables [optim.clip_norm]");
    cmd.add_option("--adam-beta1", f.adam_beta1, "Adam first-moment decay [optim.adam_beta1]");
    cmd.add_option("--adam-beta2", f.adam_beta2, "Adam second-moment decay [optim.adam_beta2]");
    cmd.add_option("--adam-epsilon", f.adam_epsilon, "Adam denominator floor [optim.adam_epsilon]");
    cmd.add_option("--buffer", f.buffer, "replay capacity [method.buffer]");
    cmd.add_option("--replay-batch", f.replay_batch, "replay mini-batch, 0 = current size [method.replay_batch]");
    cmd.add_option("--lambda", f.lambda, "replay / LwF mixing weight [method.lambda]");
    cmd.add_option("--alpha", f.alpha, "EWC stability coefficient [method.alpha]");
    cmd.add_option("--beta", f.beta, "SI penalty weight [method.beta]");
    cmd.add_option("--xi", f.xi, "SI damping [method.xi]");
    cmd.add_option("--epsilon", f.epsilon, "LARS epsilon [method.epsilon]");
    cmd.add_option("--lwf-variant", f.lwf_variant, "convex | additive [method.lwf_variant]");
    cmd.add_flag("--fisher-minibatch", f.fisher_minibatch, "mini-batch Fisher approximation [method.fisher_minibatch]");
    cmd.add_option("--data", f.data_dir, "directory of <scenario>.ctns files from `gen` [data.dir]");
    cmd.add_option("--users", f.users, "users per generated scenario [data.users]");
    cmd.add_option("--n-tx", f.n_tx, "desk-scale transmit elements [data.n_tx]");
    cmd.add_option("--n-rb", f.n_rb, "desk-scale resource blocks [data.n_rb]");
    cmd.add_option("--n-rx", f.n_rx, "desk-scale receive elements [data.n_rx]");
    cmd.add_flag("--full-scale", f.full_scale, "use the full preset array sizes [data.full_scale]");
    cmd.add_option("--window-stride", f.window_stride, "snapshots between windows [data.window_stride]");
    cmd.add_option("--max-windows", f.max_windows, "windows per user, 0 = all [data.max_windows_per_user]");
    cmd.add_option("--train-fraction", f.train_fraction, "share of users used for training [data.train_fraction]");
    cmd.add_option("--snr", f.snr, "SNR grid start:stop:step, list, or inf [eval.snr]");
}

template <class T, class U>
void apply(const std::optional<T>& flag, U& field) {
    if (flag) field = *flag;
}

[[nodiscard]] inline harness::ExperimentConfig resolve(const ExperimentFlags& f, const Globals& g) {
    harness::ExperimentConfig c;
    if (!f.config.empty()) c = harness::load_experiment_config(f.config, c);
    if (f.method) c.method = harness::parse_method(*f.method);
    if (f.tasks) c.tasks = harness::parse_list<std::string>(*f.tasks);
    apply(f.zero_shot_task, c.zero_shot_task);
    if (g.seed) c.seeds = {*g.seed};
    if (f.seeds) c.seeds = harness::parse_list<std::uint64_t>(*f.seeds);
    apply(f.epochs, c.epochs);
    c.threads = g.threads;
    if (f.backbone) c.model.backbone = nn::parse_backbone(*f.backbone);
    apply(f.seq_len, c.model.seq_len);
    apply(f.layers, c.model.n_layers);
    apply(f.hidden, c.model.hidden);
    apply(f.d_model, c.model.d_model);
    apply(f.heads, c.model.n_heads);
    apply(f.ffn_width, c.model.ffn_width);
    if (f.optimizer) c.optim.optimizer = nn::parse_optimizer(*f.optimizer);
    apply(f.learning_rate, c.optim.learning_rate);
    apply(f.batch_size, c.optim.batch_size);
    apply(f.clip_norm, c.optim.clip_norm);
    apply(f.adam_beta1, c.optim.adam_beta1);
    apply(f.adam_beta2, c.optim.adam_beta2);
    apply(f.adam_epsilon, c.optim.adam_epsilon);
    apply(f.buffer, c.buffer);
    apply(f.replay_batch, c.replay_batch);
    apply(f.lambda, c.lambda);
    apply(f.alpha, c.alpha);
    apply(f.beta, c.beta);
    apply(f.xi, c.xi);
    apply(f.epsilon, c.epsilon);
    if (f.lwf_variant) c.lwf_variant = lwf::parse_variant(*f.lwf_variant);
    if (f.fisher_minibatch) c.fisher_minibatch = true;
    if (f.data_dir) c.data.data_dir = *f.data_dir;
    apply(f.users, c.data.users);
    apply(f.n_tx, c.data.n_tx);
    apply(f.n_rb, c.data.n_rb);
    apply(f.n_rx, c.data.n_rx);
    if (f.full_scale) c.data.full_scale = true;
    apply(f.window_stride, c.data.window_stride);
    apply(f.max_windows, c.data.max_windows_per_user);
    apply(f.train_fraction, c.data.train_fraction);
    if (f.snr) c.snr_grid = harness::parse_snr_grid(*f.snr);
    c.validate();
    return c;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

/// metrics.json, metrics.csv and (when given) model.json/.bin for one run.
inline void save_run(const std::filesystem::path& root, const harness::ExperimentConfig& config,
                     const harness::MetricsRecord& rec, const nn::ParameterVector* theta, std::size_t d_in) {
    const auto dir = run_directory(root, rec);
    std::filesystem::create_directories(dir);
    harness::export_results({rec}, dir / "metrics.json");
    harness::export_results({rec}, dir / "metrics.csv");
    write_text(dir / "config.json", harness::to_json(config).dump(2) + "\n");
    if (theta && !theta->values.empty()) {
        auto model = config.model;
        model.d_in = d_in;
        io::save_checkpoint(dir / "model.json", model, *theta);
    }
}

[[nodiscard]] inline std::size_t desk_d_in(const harness::ExperimentConfig& c) {
    if (!c.data.data_dir.empty() || c.data.full_scale) return 0;
    return 2 * c.data.n_tx * c.data.n_rb * c.data.n_rx;
}

struct RunSummary {
    std::vector<harness::MetricsRecord> records;
    bool diverged{false};
};

[[nodiscard]] inline RunSummary run_and_save(const harness::ExperimentConfig& config, const std::filesystem::path& root,
                                             const harness::ProgressFn& progress) {
    RunSummary s;
    std::vector<nn::ParameterVector> thetas;
    s.records = harness::run_seeds(config, progress, &thetas);
    // d_in follows from the parameter count, which works for files on disk too.
    std::size_t d_in = desk_d_in(config);
    if (d_in == 0) d_in = harness::load_task(config, config.tasks.front(), config.seeds.front()).d_in();
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        save_run(root, config, s.records[i], &thetas[i], d_in);
        s.diverged = s.diverged || s.records[i].status != "ok";
    }
    return s;
}

}  // namespace detail

/// Parses `argv`, runs one subcommand and returns the process exit code.
/// Progress lines go to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Continual-learning channel prediction toolkit", "clcp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "clcp 1.0.0");
    app.get_formatter()->column_width(34);
    detail::Globals g;
    app.add_option("--seed", g.seed, "master seed for every subcommand (default 1)");
    app.add_option("--threads", g.threads, "worker threads for multi-seed runs (1 = reference)")
        ->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", g.quiet, "suppress the progress log");

    // gen
    auto* gen = app.add_subcommand("gen", "generate scenario datasets (CTNS + JSON sidecar)");
    std::vector<std::string> gen_scenarios;
    std::string gen_out;
    detail::ExperimentFlags gen_flags;
    gen->add_option("--scenario", gen_scenarios, "preset name, repeatable; default: the task sequence");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--users", gen_flags.users, "users per scenario [data.users]");
    gen->add_option("--n-tx", gen_flags.n_tx, "desk-scale transmit elements [data.n_tx]");
    gen->add_option("--n-rb", gen_flags.n_rb, "desk-scale resource blocks [data.n_rb]");
    gen->add_option("--n-rx", gen_flags.n_rx, "desk-scale receive elements [data.n_rx]");
    gen->add_flag("--full-scale", gen_flags.full_scale, "keep the preset array sizes [data.full_scale]");
    gen->add_option("--config", gen_flags.config, "INI experiment file")->check(CLI::ExistingFile);

    // train
    auto* train = app.add_subcommand("train", "train one method through the task sequence");
    detail::ExperimentFlags train_flags;
    std::string train_out = "results";
    detail::add_experiment_flags(*train, train_flags, true);
    train->add_option("--out", train_out, "results root (default results)");

    // eval
    auto* eval = app.add_subcommand("eval", "SNR sweep of a saved checkpoint");
    std::string eval_ckpt;
    std::string eval_out;
    detail::ExperimentFlags eval_flags;
    eval->add_option("--checkpoint", eval_ckpt, "model.json written by train")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", eval_flags.data_dir, "directory of <scenario>.ctns files [data.dir]");
    eval->add_option("--tasks", eval_flags.tasks, "comma-separated scenarios to score [experiment.tasks]");
    eval->add_option("--snr", eval_flags.snr, "SNR grid start:stop:step, list, or inf [eval.snr]");
    eval->add_option("--users", eval_flags.users, "users per generated scenario [data.users]");
    eval->add_option("--n-tx", eval_flags.n_tx, "desk-scale transmit elements [data.n_tx]");
    eval->add_option("--n-rb", eval_flags.n_rb, "desk-scale resource blocks [data.n_rb]");
    eval->add_option("--n-rx", eval_flags.n_rx, "desk-scale receive elements [data.n_rx]");
    eval->add_flag("--full-scale", eval_flags.full_scale, "use the full preset array sizes [data.full_scale]");
    eval->add_option("--window-stride", eval_flags.window_stride, "snapshots between windows [data.window_stride]");
    eval->add_option("--max-windows", eval_flags.max_windows, "windows per user, 0 = all [data.max_windows_per_user]");
    eval->add_option("--train-fraction", eval_flags.train_fraction,
                     "share of users held out of the test split [data.train_fraction]");
    eval->add_option("--config", eval_flags.config, "INI experiment file")->check(CLI::ExistingFile);
    eval->add_option("--out", eval_out, "write the sweep as JSON to this file");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "train several methods over the seeds and tabulate");
    detail::ExperimentFlags sweep_flags;
    std::string sweep_methods = "naive,er-reservoir,er-lars,ewc,si,lwf,joint,zero-shot";
    std::string sweep_out = "results";
    detail::add_experiment_flags(*sweep, sweep_flags, false);
    sweep->add_option("--methods", sweep_methods, "comma-separated methods (default: all)");
    sweep->add_option("--out", sweep_out, "results root (default results)");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
    detail::ExperimentFlags ablate_flags;
    std::string ablate_grid;
    std::string ablate_methods = "er-reservoir,er-lars";
    std::string ablate_out = "results";
    ablate->add_option("--grid", ablate_grid, "grid name: appendixC (seq_len 16|32 x buffer 3000|5000)")
        ->required()
        ->check(CLI::IsMember({"appendixC"}));
    ablate->add_option("--methods", ablate_methods, "comma-separated methods (default er-reservoir,er-lars)");
    ablate->add_option("--out", ablate_out, "results root (default results)");
    detail::add_experiment_flags(*ablate, ablate_flags, false);

    // pivot
    auto* pivot = app.add_subcommand("pivot", "render a method x task/backbone table from result CSVs");
    std::vector<std::string> pivot_files;
    std::optional<double> pivot_snr;
    pivot->add_option("csv", pivot_files, "metrics CSV files")->required()->check(CLI::ExistingFile);
    pivot->add_option("--snr", pivot_snr, "SNR column to tabulate (default: highest present)");

    // Global flags are accepted before or after the subcommand name.
    for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    harness::ProgressFn progress;
    if (!g.quiet) progress = [&out](const std::string& line) { out << line << '\n' << std::flush; };

    try {
        if (*gen) {
            auto c = detail::resolve(gen_flags, g);
            if (gen_scenarios.empty()) gen_scenarios = c.tasks;
            const std::filesystem::path dir(gen_out);
            std::filesystem::create_directories(dir);
            const std::uint64_t seed = c.seeds.front();
            for (const auto& name : gen_scenarios) {
                const auto scenario = harness::scenario_for(c.data, name);
                const auto ds = channel::generate_dataset(scenario, c.data.users,
                                                          derive_seed(seed, {fnv1a("data"), fnv1a(name)}));
                const auto path = dir / (name + ".ctns");
                channel::write_dataset(ds, path);
                if (progress) {
                    progress("gen scenario=" + name + " seed=" + std::to_string(seed) + " shape=" +
                             shape_string(channel::on_disk_shape(scenario, c.data.users)) + " path=" + path.string());
                }
            }
            return exit_ok;
        }

        if (*train) {
            const auto c = detail::resolve(train_flags, g);
            const auto s = detail::run_and_save(c, train_out, progress);
            for (const auto& r : s.records) {
                if (r.status != "ok") err << "clcp: seed " << r.seed << " diverged: " << r.diagnostic << '\n';
            }
            return s.diverged ? exit_divergence : exit_ok;
        }

        if (*eval) {
            const auto ckpt = io::load_checkpoint(eval_ckpt);
            auto c = detail::resolve(eval_flags, g);
            c.model = ckpt.config;
            const nn::Predictor model(ckpt.config);
            const std::uint64_t seed = c.seeds.front();
            nlohmann::json doc = nlohmann::json::array();
            for (std::size_t j = 0; j < c.tasks.size(); ++j) {
                auto cfg = c;
                if (cfg.data.data_dir.empty() && !cfg.data.full_scale) {
                    // Regenerate with the array the checkpoint was trained on, when it is a desk layout.
                    const auto desk = detail::desk_d_in(cfg);
                    require(desk == ckpt.config.d_in, ErrorCode::config,
                            "eval: checkpoint expects d_in " + std::to_string(ckpt.config.d_in) +
                                " but the data flags give " + std::to_string(desk));
                }
                const auto task = harness::load_task(cfg, c.tasks[j], seed);
                require(task.d_in() == ckpt.config.d_in, ErrorCode::shape_mismatch,
                        "eval: " + task.name + " has d_in " + std::to_string(task.d_in()) + ", checkpoint expects " +
                            std::to_string(ckpt.config.d_in));
                Rng rng = make_rng(seed, {fnv1a("snr"), j});
                for (const auto& p : harness::snr_sweep_eval(model, ckpt.theta.flat(), task.test, c.snr_grid, rng)) {
                    doc.push_back(harness::SweepCell{task.name, p.snr_db, p.nmse_db});
                    if (progress) {
                        std::ostringstream line;
                        line << "sweep task=" << task.name << " snr=" << harness::detail::fmt(p.snr_db)
                             << " nmse_db=" << harness::detail::fmt_db(p.nmse_db);
                        progress(line.str());
                    }
                }
            }
            if (!eval_out.empty()) detail::write_text(eval_out, doc.dump(2) + "\n");
            return exit_ok;
        }

        if (*sweep || *ablate) {
            const bool is_ablate = static_cast<bool>(*ablate);
            const auto base = detail::resolve(is_ablate ? ablate_flags : sweep_flags, g);
            const auto methods = harness::parse_list<std::string>(is_ablate ? ablate_methods : sweep_methods);
            require(!methods.empty(), ErrorCode::config, "no methods given");
            std::vector<harness::AblationCell> cells{{base.model.seq_len, base.buffer}};
            if (is_ablate) cells = harness::ablation_grid(ablate_grid);
            const std::filesystem::path root(is_ablate ? ablate_out : sweep_out);
            std::vector<harness::MetricsRecord> all;
            bool diverged = false;
            for (const auto& cell : cells) {
                for (const auto& m : methods) {
                    auto c = harness::apply_cell(base, cell);
                    c.method = harness::parse_method(m);
                    const auto dir = is_ablate ? root / ("ablate-" + ablate_grid) / cell.tag() : root;
                    const auto s = detail::run_and_save(c, dir, progress);
                    diverged = diverged || s.diverged;
                    all.insert(all.end(), s.records.begin(), s.records.end());
                }
            }
            const auto table_dir = is_ablate ? root / ("ablate-" + ablate_grid) : root;
            std::filesystem::create_directories(table_dir);
            const auto csv = table_dir / (is_ablate ? ablate_grid + ".csv" : std::string("sweep.csv"));
            harness::export_results(all, csv);
            std::ifstream in(csv);
            const auto rows = harness::read_csv(in, csv.string());
            harness::render_pivot(out, rows);
            if (progress) progress("table path=" + csv.string() + " rows=" + std::to_string(rows.size()));
            return diverged ? exit_divergence : exit_ok;
        }

        if (*pivot) {
            std::vector<harness::CsvRow> rows;
            for (const auto& f : pivot_files) {
                std::ifstream in(f);
                if (!in) throw Error(ErrorCode::io, "cannot open " + f);
                const auto part = harness::read_csv(in, f);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            harness::render_pivot(out, rows, pivot_snr);
            return exit_ok;
        }
    } catch (const Error& e) {
        err << "clcp: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "clcp: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}

}  // namespace clcp::cli
