// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion ...]   (default: all of 1..10)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../common/oracles.hpp"
#include "clcp/channel/ctns.hpp"
#include "clcp/channel/dataset.hpp"
#include "clcp/channel/geometry.hpp"
#include "clcp/channel/scenario.hpp"
#include "clcp/core/finite_diff.hpp"
#include "clcp/core/special.hpp"
#include "clcp/harness/ablation.hpp"
#include "clcp/harness/runner.hpp"
#include "clcp/lwf/distill.hpp"
#include "clcp/nn/loss.hpp"
#include "clcp/regularization/ewc.hpp"
#include "clcp/regularization/si.hpp"
#include "clcp/replay/buffer.hpp"
#include "clcp/replay/mix.hpp"

using namespace clcp;
using harness::Method;
using harness::MetricsRecord;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(prec);
    s << v;
    return s.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr std::uint64_t acceptance_seeds[] = {1, 2, 3, 4, 5};

// ---------------------------------------------------------------------------
// Experiment cache. Criteria 7, 8 and 10 share runs, and every run of a seed
// shares the generated task data.

class Runs {
public:
    const MetricsRecord& get(harness::ExperimentConfig c, std::uint64_t seed) {
        c.seeds = {seed};
        c.threads = 1;
        const std::string key = harness::to_json(c).dump() + "#" + std::to_string(seed);
        if (auto it = records_.find(key); it != records_.end()) return it->second;
        const auto& tasks = data(c, seed);
        auto rec = harness::run_experiment(c, seed, tasks);
        std::printf("  run %-12s T=%zu N=%zu seed=%llu  final=[%s] (%.0f s)\n", rec.method.c_str(), rec.seq_len,
                    rec.buffer, static_cast<unsigned long long>(seed), join(rec.final_db).c_str(), rec.wall_clock_s);
        std::fflush(stdout);
        return records_.emplace(key, std::move(rec)).first->second;
    }

private:
    const std::vector<harness::TaskData>& data(const harness::ExperimentConfig& c, std::uint64_t seed) {
        const auto j = harness::to_json(c);
        const std::string key = j.at("data").dump() + j.at("tasks").dump() + "#" + std::to_string(c.model.seq_len) +
                                "#" + std::to_string(seed);
        if (auto it = tasks_.find(key); it != tasks_.end()) return it->second;
        return tasks_.emplace(key, harness::load_tasks(c, seed)).first->second;
    }

    static std::string join(const std::vector<double>& v) {
        std::string s;
        for (const double x : v) s += (s.empty() ? "" : " ") + fmt(x, 2);
        return s;
    }

    std::map<std::string, MetricsRecord> records_;
    std::map<std::string, std::vector<harness::TaskData>> tasks_;
};

Runs runs;

// The desk-scale experiment: every default of ExperimentConfig, GRU backbone.
harness::ExperimentConfig desk(Method m) {
    harness::ExperimentConfig c;
    c.method = m;
    c.model.backbone = nn::Backbone::gru;
    return c;
}

// ---------------------------------------------------------------------------
// 1. Analytic gradients against central differences.

nn::PredictorConfig tiny_model(nn::Backbone b) {
    nn::PredictorConfig c;
    c.backbone = b;
    c.d_in = 8;
    c.hidden = 4;
    c.d_model = 16;
    c.n_heads = 4;
    c.ffn_width = 32;
    c.seq_len = 4;
    return c;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

Outcome gradient_fidelity() {
    double worst = 0.0;
    std::string worst_where;
    auto check = [&](const std::string& what, const nn::Predictor& model, const std::vector<double>& analytic,
                     const std::function<double(std::span<const double>)>& objective, std::span<const double> at) {
        const auto numeric = finite_diff_grad(objective, at, 1e-5);
        const auto r = oracle::compare_gradients(model.layout(), analytic, numeric);
        if (r.max_rel >= worst) {
            worst = r.max_rel;
            worst_where = what + "/" + r.worst_block;
        }
    };

    for (const auto b : {nn::Backbone::lstm, nn::Backbone::gru, nn::Backbone::transformer}) {
        const std::string name = nn::to_string(b);
        const nn::Predictor model(tiny_model(b));
        const auto theta = model.initial_parameters(11);
        std::vector<nn::Sample> data;
        Rng rng(12);
        for (int i = 0; i < 6; ++i) data.push_back(oracle::random_sample(rng, 4, 1, 2, 2));
        const auto batch = nn::pack_batch(std::span<const nn::Sample>(data).first(3));

        // Plain NMSE.
        const auto plain = nn::loss_and_grad(model, batch, theta.flat());
        check(name + ":nmse", model, plain.grad, [&](auto t) { return nn::batch_nmse(model, batch, t); },
              theta.flat());

        // Replay mixture lambda * current + (1 - lambda) * replay.
        replay::ReplayBuffer buf(4, replay::EvictionPolicy::uniform, 2);
        for (int i = 3; i < 6; ++i) buf.insert({data[i], 0.1});
        replay::MixedBatch mb;
        mb.current = {&data[0], &data[1], &data[2]};
        mb.replay = {0, 2};
        mb.lambda = 0.3;
        const auto mixed = replay::mixed_loss_and_grad(model, mb, buf, theta.flat());
        const auto rep = nn::pack_batch(std::vector<nn::Sample>{buf[0].sample, buf[2].sample});
        check(name + ":replay", model, mixed.grad,
              [&](auto t) { return 0.3 * nn::batch_nmse(model, batch, t) + 0.7 * nn::batch_nmse(model, rep, t); },
              theta.flat());

        // Task loss plus EWC penalty over two snapshots with data Fisher.
        regularization::EwcState ewc;
        ewc.alpha = 0.4;
        for (std::uint64_t k = 0; k < 2; ++k) {
            const auto anchor = model.initial_parameters(20 + k);
            regularization::end_task_ewc(ewc, model, anchor.flat(), data);
        }
        auto ewc_grad = plain.grad;
        const auto ep = regularization::ewc_penalty(theta.flat(), ewc);
        for (std::size_t i = 0; i < ewc_grad.size(); ++i) ewc_grad[i] += ep.grad[i];
        check(name + ":ewc", model, ewc_grad,
              [&](auto t) { return nn::batch_nmse(model, batch, t) + regularization::ewc_penalty(t, ewc).value; },
              theta.flat());

        // Task loss plus SI penalty with a non-trivial importance vector.
        auto si = regularization::make_si_state(model.initial_parameters(30).flat(), 0.6);
        si.omega = random_vector(theta.size(), 31);
        for (auto& w : si.omega) w = std::abs(w);
        auto si_grad = plain.grad;
        const auto sp = regularization::si_penalty(theta.flat(), si);
        for (std::size_t i = 0; i < si_grad.size(); ++i) si_grad[i] += sp.grad[i];
        check(name + ":si", model, si_grad,
              [&](auto t) { return nn::batch_nmse(model, batch, t) + regularization::si_penalty(t, si).value; },
              theta.flat());

        // Distillation against a frozen teacher, both combinations.
        const auto teacher = lwf::advance_teacher(model.config(), model.initial_parameters(40));
        for (const auto variant : {lwf::Variant::convex, lwf::Variant::additive}) {
            const auto lg = lwf::lwf_loss_and_grad(model, &teacher, batch, theta.flat(), 0.5, variant);
            check(name + ":lwf-" + std::string(lwf::to_string(variant)), model, lg.grad,
                  [&](auto t) {
                      return lwf::lwf_total(nn::batch_nmse(model, batch, t),
                                            lwf::distill_loss(model, teacher, batch, t).loss, 0.5, variant);
                  },
                  theta.flat());
        }
    }
    return {worst <= 1e-4, "max rel err " + fmt(worst * 1e6, 3) + "e-6 at " + worst_where + " (limit 1e-4)"};
}

// ---------------------------------------------------------------------------
// 2. Reservoir inclusion is uniform.

nn::Sample scalar_sample() {
    nn::Sample s{ComplexTensor({1, 1, 1, 1}), ComplexTensor({1, 1, 1})};
    s.window.data()[0] = {1.0, 0.0};
    return s;
}

Outcome reservoir_law() {
    constexpr std::size_t capacity = 100;
    constexpr std::size_t stream = 10000;
    constexpr int trials = 2000;
    const auto s = scalar_sample();
    std::vector<std::size_t> counts(stream, 0);
    for (int k = 0; k < trials; ++k) {
        replay::ReplayBuffer buf(capacity, replay::EvictionPolicy::uniform, derive_seed(2, {std::uint64_t(k)}));
        for (std::size_t i = 0; i < stream; ++i) buf.insert({s, static_cast<double>(i)});
        for (const auto& e : buf.items()) ++counts[static_cast<std::size_t>(e.stored_loss)];
    }
    const double p = oracle::chi_square_uniform_p(counts);
    return {p > 0.01, "chi-square p = " + fmt(p, 4) + " (need > 0.01)"};
}

// ---------------------------------------------------------------------------
// 3. Loss-aware victim frequencies.

Outcome lars_law() {
    const std::vector<double> losses{0.0, 0.1, 1.0, 10.0};
    const double eps = 1e-8;
    std::vector<double> expected;
    double total = 0.0;
    for (const double l : losses) total += expected.emplace_back(1.0 / (l + eps));
    for (auto& e : expected) e /= total;

    constexpr int draws = 100000;
    std::vector<int> hits(losses.size(), 0);
    Rng rng(3);
    for (int i = 0; i < draws; ++i) ++hits[replay::lars_victim(losses, eps, rng)];
    double worst = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) worst = std::max(worst, std::abs(hits[i] / double(draws) - expected[i]));
    return {worst <= 0.02, "max |freq - law| = " + fmt(worst, 5) + " (limit 0.02)"};
}

// ---------------------------------------------------------------------------
// 4. Penalty identities.

Outcome penalty_identities() {
    std::vector<std::string> failures;
    const nn::Predictor model(tiny_model(nn::Backbone::gru));
    std::vector<nn::Sample> data;
    Rng rng(4);
    for (int i = 0; i < 8; ++i) data.push_back(oracle::random_sample(rng, 4, 1, 2, 2));

    // EWC: zero at each snapshot taken along a short optimisation path.
    regularization::EwcState ewc;
    auto theta = model.initial_parameters(4);
    const auto batch = nn::pack_batch(data);
    std::vector<std::vector<double>> anchors;
    bool fisher_nonneg = true;
    for (int k = 0; k < 3; ++k) {
        for (int s = 0; s < 5; ++s) {
            const auto lg = nn::loss_and_grad(model, batch, theta.flat());
            for (std::size_t i = 0; i < theta.size(); ++i) theta.values[i] -= 0.05 * lg.grad[i];
        }
        regularization::end_task_ewc(ewc, model, theta.flat(), data);
        anchors.push_back(theta.values);
        for (const double f : ewc.bank.back().fisher) fisher_nonneg = fisher_nonneg && f >= 0.0;
    }
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        regularization::EwcState only;
        only.bank = {ewc.bank[k]};
        if (regularization::ewc_penalty(anchors[k], only).value != 0.0) failures.push_back("ewc@snapshot");
    }
    if (!fisher_nonneg) failures.push_back("fisher<0");

    // Hand oracle: per-sample loss (theta - y)^2, y = {0, 2}, theta = 1.
    const std::vector<double> y{0.0, 2.0};
    const auto f = regularization::compute_fisher(2, 1, [&](std::size_t i, std::span<double> g) { g[0] = 2.0 * (1.0 - y[i]); });
    if (f.size() != 1 || f[0] != 4.0) failures.push_back("fisher!=4");

    // SI: zero at the reference point, omega non-decreasing over consolidations.
    auto p = model.initial_parameters(5);
    auto si = regularization::make_si_state(p.flat());
    if (regularization::si_penalty(p.flat(), si).value != 0.0) failures.push_back("si@theta0");
    auto prev = si.omega;
    for (int k = 0; k < 3; ++k) {
        for (int s = 0; s < 5; ++s) {
            const auto lg = nn::loss_and_grad(model, batch, p.flat());
            regularization::si_accumulate(si, lg.grad, 0.05);
            for (std::size_t i = 0; i < p.size(); ++i) p.values[i] -= 0.05 * lg.grad[i];
        }
        regularization::si_consolidate(si, p.flat());
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (si.omega[i] < prev[i]) {
                failures.push_back("si-omega-decreased");
                break;
            }
        }
        prev = si.omega;
    }

    std::string detail = "ewc@snapshots, fisher>=0, F=4, si@theta0, omega monotone";
    if (!failures.empty()) {
        detail = "violated:";
        for (const auto& s : failures) detail += " " + s;
    }
    return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// 5. Degenerate settings reproduce naive fine-tuning bit for bit.

Outcome degeneracy() {
    auto base = desk(Method::naive);
    base.epochs = 1;
    const std::uint64_t seed = 1;
    const auto& naive = runs.get(base, seed);

    struct Case {
        std::string name;
        harness::ExperimentConfig config;
    };
    std::vector<Case> cases;
    for (const auto m : {Method::er_reservoir, Method::er_lars}) {
        auto c = base;
        c.method = m;
        c.lambda = 1.0;
        c.buffer = 0;
        cases.push_back({harness::to_string(m) + " lambda=1 N=0", c});
    }
    {
        auto c = base;
        c.method = Method::ewc;
        c.alpha = 0.0;
        cases.push_back({"ewc alpha=0", c});
        c.method = Method::si;
        c.beta = 0.0;
        cases.push_back({"si beta=0", c});
        c.method = Method::lwf;
        c.lwf_variant = lwf::Variant::convex;
        c.lambda = 1.0;
        cases.push_back({"lwf convex lambda=1", c});
        c.lwf_variant = lwf::Variant::additive;
        c.lambda = 0.0;
        cases.push_back({"lwf additive lambda=0", c});
    }
    std::string mismatched;
    for (const auto& cs : cases) {
        if (!harness::same_results(naive, runs.get(cs.config, seed))) mismatched += " " + cs.name;
    }
    return {mismatched.empty(), mismatched.empty() ? std::to_string(cases.size()) + " settings bitwise equal to naive"
                                                   : "differs:" + mismatched};
}

// ---------------------------------------------------------------------------
// 6. Zero-shot transfer from the dense layout degrades the other two.

Outcome zero_shot_degradation() {
    auto c = desk(Method::zero_shot);
    c.zero_shot_task = "umi-dense";
    std::map<std::string, std::vector<double>> degradation;
    for (const auto seed : acceptance_seeds) {
        const auto& r = runs.get(c, seed);
        const double in_domain = r.final_db.at(r.task_index("umi-dense"));
        for (std::size_t j = 0; j < r.tasks.size(); ++j) {
            if (r.tasks[j] == "umi-dense") continue;
            degradation[r.tasks[j]].push_back(std::pow(10.0, (r.final_db[j] - in_domain) / 10.0) - 1.0);
        }
    }
    bool pass = true;
    std::string detail = "median linear degradation:";
    for (const auto& [task, d] : degradation) {
        const double m = median(d);
        pass = pass && m >= 0.15;
        detail += " " + task + " " + fmt(100.0 * m, 1) + "%";
    }
    return {pass, detail + " (need >= 15%)"};
}

// ---------------------------------------------------------------------------
// 7. Continual methods retain the first task better than naive fine-tuning.

const Method cl_methods[] = {Method::er_lars, Method::er_reservoir, Method::ewc, Method::si, Method::lwf};

double task1_final(const MetricsRecord& r) { return r.final_db.at(0); }

Outcome forgetting_reduction() {
    std::vector<double> naive;
    for (const auto seed : acceptance_seeds) naive.push_back(task1_final(runs.get(desk(Method::naive), seed)));
    const double naive_med = median(naive);
    bool pass = true;
    std::string detail = "task-1 final median dB: naive " + fmt(naive_med, 2);
    for (const auto m : cl_methods) {
        std::vector<double> v;
        for (const auto seed : acceptance_seeds) v.push_back(task1_final(runs.get(desk(m), seed)));
        const double med = median(v);
        const bool ok = med <= naive_med - 0.5;
        pass = pass && ok;
        detail += ", " + harness::to_string(m) + " " + fmt(med, 2) + (ok ? "" : "*");
    }
    return {pass, detail + " (need <= naive - 0.5; * = short)"};
}

// ---------------------------------------------------------------------------
// 8. Directional ordering of the methods.

Outcome method_ordering() {
    int lars_wins = 0;
    int si_wins = 0;
    int lwf_best = 0;
    for (const auto seed : acceptance_seeds) {
        std::map<Method, double> score;
        for (const auto m : cl_methods) score[m] = runs.get(desk(m), seed).mean_final_db();
        lars_wins += score[Method::er_lars] <= score[Method::er_reservoir];
        si_wins += score[Method::si] <= score[Method::ewc];
        const auto best = std::min_element(score.begin(), score.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
        lwf_best += best->first == Method::lwf;
    }
    const bool pass = lars_wins >= 3 && si_wins >= 3 && lwf_best == 0;
    return {pass, "lars<=reservoir in " + std::to_string(lars_wins) + "/5, si<=ewc in " + std::to_string(si_wins) +
                      "/5, lwf best in " + std::to_string(lwf_best) + "/5 (need >=3, >=3, 0)"};
}

// ---------------------------------------------------------------------------
// 9. Channel generator statistics.

double lag1_correlation(const channel::ChannelDataset& ds) {
    const auto& c = ds.config;
    const std::size_t per_step = c.n_rb * c.n_tx * c.n_rx * ds.n_users();
    const auto d = ds.tensor.data();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t + 1 < c.n_snapshots; ++t) {
        for (std::size_t i = 0; i < per_step; ++i) {
            const std::complex<double> a(d[t * per_step + i]);
            const std::complex<double> b(d[(t + 1) * per_step + i]);
            num += (a * std::conj(b)).real();
            den += std::norm(a);
        }
    }
    return num / den;
}

Outcome generator_statistics() {
    std::vector<std::string> parts;
    bool pass = true;

    // Adjacent-snapshot correlation on a short track with the full-length spacing.
    auto c = channel::scenario_preset("umi-standard");
    c.n_snapshots = 30;
    c.n_rb = 4;
    c.n_tx = 4;
    c.track_length_m = 2.0 * 29.0 / 499.0;
    const auto ds = channel::generate_dataset(c, 400, 9);
    const double expected = bessel_j0(2.0 * std::numbers::pi * (c.track_length_m / 29.0) / c.wavelength_m());
    const double rho = lag1_correlation(ds);
    const bool corr_ok = std::abs(rho - expected) <= 0.02;
    pass = pass && corr_ok;
    parts.push_back("lag-1 " + fmt(rho, 4) + " vs J0 " + fmt(expected, 4));

    Rng rng(9);
    int los = 0;
    constexpr int n_los = 10000;
    for (int i = 0; i < n_los; ++i) los += channel::los_state(300.0, rng) == channel::LinkState::los;
    const double rate = los / double(n_los);
    pass = pass && std::abs(rate - std::exp(-1.0)) <= 0.015;
    parts.push_back("LOS@300m " + fmt(rate, 4));

    const auto umi = channel::scenario_preset("umi-standard");
    const bool boresight = channel::antenna_gain(umi.tilt_deg, umi).value == umi.g_max_db;
    pass = pass && boresight;
    parts.push_back(std::string("boresight ") + (boresight ? "exact" : "wrong"));

    const double grid[] = {0.1, 0.25, 0.5, 1.0, 2.0};
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < std::size(grid); ++i) {
        monotone = monotone && channel::gain_variance(8, grid[i]) >= channel::gain_variance(8, grid[i + 1]);
    }
    pass = pass && monotone;
    parts.push_back(std::string("gain_variance ") + (monotone ? "non-increasing" : "increases"));

    // The full UMi preset written to disk and read back.
    const auto path = std::filesystem::temp_directory_path() / "clcp_acceptance_umi.ctns";
    channel::write_dataset(channel::generate_dataset(umi, 256, 9), path);
    std::ifstream in(path, std::ios::binary);
    const auto header = io::read_ctns_header(in);
    in.close();
    std::filesystem::remove(path);
    std::filesystem::remove(channel::sidecar_path(path));
    const bool shape_ok = header.dims == Shape{500, 2, 18, 8, 256};
    pass = pass && shape_ok;
    std::string shape = "[";
    for (std::size_t i = 0; i < header.dims.size(); ++i) shape += (i ? "x" : "") + std::to_string(header.dims[i]);
    parts.push_back("umi-standard on disk " + shape + "]");

    std::string detail;
    for (const auto& p : parts) detail += (detail.empty() ? "" : ", ") + p;
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 10. Sequence-length and buffer ablation.

Outcome ablation() {
    const auto cells = harness::ablation_grid("appendixC");
    const Method methods[] = {Method::er_reservoir, Method::er_lars};
    std::set<std::tuple<std::string, std::size_t, std::size_t>> complete;
    bool pass = true;
    std::string detail;
    for (const auto m : methods) {
        // Per buffer size, count the seeds where T=32 is at least as good as T=16.
        for (const std::size_t n : {std::size_t{3000}, std::size_t{5000}}) {
            int wins = 0;
            for (const auto seed : acceptance_seeds) {
                double score[2] = {0.0, 0.0};
                for (const auto& cell : cells) {
                    if (cell.buffer != n) continue;
                    auto c = harness::apply_cell(desk(m), cell);
                    const auto& r = runs.get(c, seed);
                    if (r.status == "ok" && r.final_db.size() == r.tasks.size() && !r.sweep.empty()) {
                        complete.insert({r.method, r.seq_len, r.buffer});
                    }
                    score[cell.seq_len == 32] = r.mean_final_db();
                }
                wins += score[1] <= score[0];
            }
            pass = pass && wins >= 3;
            detail += (detail.empty() ? "" : ", ") + harness::to_string(m) + " N=" + std::to_string(n) +
                      " T32<=T16 in " + std::to_string(wins) + "/5";
        }
    }
    const bool grid_ok = complete.size() == std::size(methods) * cells.size();
    pass = pass && grid_ok;
    return {pass, "grid " + std::to_string(complete.size()) + "/" + std::to_string(std::size(methods) * cells.size()) +
                      " cells; " + detail + " (need >=3)"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient fidelity", gradient_fidelity},
        {"reservoir inclusion law", reservoir_law},
        {"LARS victim law", lars_law},
        {"penalty identities", penalty_identities},
        {"degeneracy equivalence", degeneracy},
        {"zero-shot degradation", zero_shot_degradation},
        {"forgetting reduction", forgetting_reduction},
        {"method ordering", method_ordering},
        {"generator statistics", generator_statistics},
        {"ablation grid", ablation},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

    int failed = 0;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!selected.empty() && !selected.contains(k + 1)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("criterion %2zu %s  %-24s %s [%.1f s]\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                    o.detail.c_str(), s);
        std::fflush(stdout);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("acceptance: %d failed, total %.1f s\n", failed, total);
    return failed == 0 ? 0 : 1;
}
