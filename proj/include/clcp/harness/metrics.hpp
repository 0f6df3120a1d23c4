#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcp/core/error.hpp"

namespace clcp::harness {

/// NMSE of one task's test set under one input SNR, after the whole sequence.
struct SweepCell {
    std::string task;
    double snr_db{0.0};
    double nmse_db{0.0};

    bool operator==(const SweepCell&) const = default;
};

// JSON has no infinity, so the noiseless sentinel is written as the string "inf".
inline void to_json(nlohmann::json& j, const SweepCell& c) {
    j = {{"task", c.task}, {"nmse_db", c.nmse_db}};
    if (std::isinf(c.snr_db)) {
        j["snr_db"] = "inf";
    } else {
        j["snr_db"] = c.snr_db;
    }
}

inline void from_json(const nlohmann::json& j, SweepCell& c) {
    j.at("task").get_to(c.task);
    j.at("nmse_db").get_to(c.nmse_db);
    const auto& s = j.at("snr_db");
    c.snr_db = s.is_string() && s.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                               : s.get<double>();
}

/// Everything one (method, seed) run produces. `stage_nmse_db[s][j]` is the
/// noiseless NMSE on task j after training stage s; stages are the tasks of
/// the sequence for continual methods, a single stage for the baselines.
struct MetricsRecord {
    std::string method;
    std::string backbone;
    std::size_t seq_len{0};
    std::size_t buffer{0};
    double lambda{0.0};
    std::string lwf_variant;
    std::uint64_t seed{0};
    std::vector<std::string> tasks;
    std::vector<std::string> stages;
    std::vector<std::vector<double>> stage_nmse_db;
    std::vector<double> end_of_task_db;
    std::vector<double> final_db;
    std::vector<double> forgetting_db;
    std::vector<SweepCell> sweep;
    std::size_t ewc_snapshots{0};
    std::size_t buffer_items{0};
    std::size_t distill_skipped{0};
    std::string status{"ok"};
    std::string diagnostic;
    double wall_clock_s{0.0};

    bool operator==(const MetricsRecord&) const = default;

    [[nodiscard]] std::size_t task_index(const std::string& name) const {
        const auto it = std::find(tasks.begin(), tasks.end(), name);
        require(it != tasks.end(), ErrorCode::missing_data, "metrics: no task '" + name + "'");
        return static_cast<std::size_t>(it - tasks.begin());
    }

    /// Mean over tasks of the final noiseless NMSE (dB).
    [[nodiscard]] double mean_final_db() const {
        require(!final_db.empty(), ErrorCode::missing_data, "metrics: no final evaluations");
        double s = 0.0;
        for (const double v : final_db) s += v;
        return s / static_cast<double>(final_db.size());
    }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MetricsRecord, method, backbone, seq_len, buffer, lambda, lwf_variant, seed, tasks,
                                   stages, stage_nmse_db, end_of_task_db, final_db, forgetting_db, sweep,
                                   ewc_snapshots, buffer_items, distill_skipped, status, diagnostic, wall_clock_s)

/// Final minus end-of-task NMSE per task; positive means the task was forgotten.
/// A task that was never a training stage of its own counts as not forgotten.
inline void compute_forgetting(MetricsRecord& r) {
    require(!r.stage_nmse_db.empty(), ErrorCode::missing_data, "forgetting: record has no evaluations");
    const auto& last = r.stage_nmse_db.back();
    require(last.size() == r.tasks.size(), ErrorCode::missing_data, "forgetting: incomplete final evaluation");
    r.final_db = last;
    r.end_of_task_db.assign(r.tasks.size(), 0.0);
    r.forgetting_db.assign(r.tasks.size(), 0.0);
    for (std::size_t j = 0; j < r.tasks.size(); ++j) {
        double end = last[j];
        for (std::size_t s = 0; s < r.stages.size(); ++s) {
            if (r.stages[s] == r.tasks[j]) end = r.stage_nmse_db.at(s).at(j);
        }
        r.end_of_task_db[j] = end;
        r.forgetting_db[j] = last[j] - end;
    }
}

/// Bitwise comparison of every result field; identifiers and timing are ignored.
[[nodiscard]] inline bool same_results(const MetricsRecord& a, const MetricsRecord& b) {
    return a.tasks == b.tasks && a.stage_nmse_db == b.stage_nmse_db && a.end_of_task_db == b.end_of_task_db &&
           a.final_db == b.final_db && a.forgetting_db == b.forgetting_db && a.sweep == b.sweep &&
           a.status == b.status;
}

inline constexpr const char* csv_header = "method,backbone,seq_len,buffer,task,snr_db,seed,nmse_db,forgetting_db";

namespace detail {

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<MetricsRecord>& records, bool header = true) {
    if (header) out << csv_header << '\n';
    for (const auto& r : records) {
        for (const auto& c : r.sweep) {
            const std::size_t j = r.task_index(c.task);
            out << r.method << ',' << r.backbone << ',' << r.seq_len << ',' << r.buffer << ',' << c.task << ','
                << detail::fmt(c.snr_db) << ',' << r.seed << ',' << detail::fmt(c.nmse_db) << ','
                << detail::fmt(r.forgetting_db.at(j)) << '\n';
        }
    }
}

inline void export_results(const std::vector<MetricsRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    if (path.extension() == ".csv") {
        write_csv(out, records);
    } else {
        out << nlohmann::json(records).dump(2) << '\n';
    }
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

[[nodiscard]] inline std::vector<MetricsRecord> import_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.is_array()) return doc.get<std::vector<MetricsRecord>>();
        return {doc.get<MetricsRecord>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format, path.string() + ": " + e.what());
    }
}

/// One CSV data row.
struct CsvRow {
    std::string method;
    std::string backbone;
    std::size_t seq_len{0};
    std::size_t buffer{0};
    std::string task;
    double snr_db{0.0};
    std::uint64_t seed{0};
    double nmse_db{0.0};
    double forgetting_db{0.0};
};

[[nodiscard]] inline std::vector<CsvRow> read_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line) || line != csv_header) {
        throw Error(ErrorCode::format, origin + ": missing or unexpected CSV header");
    }
    std::vector<CsvRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw Error(ErrorCode::format, origin + ":" + std::to_string(lineno) + ": expected 9 columns");
        try {
            rows.push_back({f[0], f[1], std::stoul(f[2]), std::stoul(f[3]), f[4], std::stod(f[5]), std::stoull(f[6]),
                            std::stod(f[7]), std::stod(f[8])});
        } catch (const std::exception&) {
            throw Error(ErrorCode::format, origin + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return rows;
}

[[nodiscard]] inline double median(std::vector<double> v) {
    require(!v.empty(), ErrorCode::missing_data, "median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Method x (task, backbone) table of the median NMSE over seeds at one SNR.
/// Without an explicit SNR the highest one present is used (the error floor).
/// When the rows mix sequence lengths or buffer sizes (ablations), each row
/// label carries them as "T=<seq_len> N=<buffer>".
inline void render_pivot(std::ostream& out, const std::vector<CsvRow>& rows, std::optional<double> snr = {}) {
    require(!rows.empty(), ErrorCode::missing_data, "pivot: no rows");
    double chosen = snr.value_or(-std::numeric_limits<double>::infinity());
    if (!snr) {
        for (const auto& r : rows) chosen = std::max(chosen, r.snr_db);
    }
    std::set<std::pair<std::size_t, std::size_t>> variants;
    for (const auto& r : rows) variants.insert({r.seq_len, r.buffer});
    auto label = [&](const CsvRow& r) {
        if (variants.size() < 2) return r.method;
        return r.method + " T=" + std::to_string(r.seq_len) + " N=" + std::to_string(r.buffer);
    };

    std::vector<std::string> labels;
    std::vector<std::string> tasks;
    std::vector<std::string> backbones;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> cells;
    auto remember = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : rows) {
        if (r.snr_db != chosen) continue;
        const auto l = label(r);
        remember(labels, l);
        remember(tasks, r.task);
        remember(backbones, r.backbone);
        cells[{l, r.task, r.backbone}].push_back(r.nmse_db);
    }
    require(!cells.empty(), ErrorCode::missing_data, "pivot: no rows at SNR " + detail::fmt(chosen) + " dB");

    std::size_t width = 14;
    for (const auto& l : labels) width = std::max(width, l.size());
    out << "NMSE [dB], median over seeds, SNR " << detail::fmt(chosen) << " dB\n";
    out << std::left << std::setw(static_cast<int>(width)) << "method";
    for (const auto& t : tasks) {
        for (const auto& b : backbones) out << " | " << std::setw(24) << (t + "/" + b);
    }
    out << '\n';
    for (const auto& l : labels) {
        out << std::left << std::setw(static_cast<int>(width)) << l;
        for (const auto& t : tasks) {
            for (const auto& b : backbones) {
                const auto it = cells.find({l, t, b});
                std::ostringstream v;
                if (it == cells.end()) {
                    v << "-";
                } else {
                    v << std::fixed << std::setprecision(3) << median(it->second);
                }
                out << " | " << std::setw(24) << v.str();
            }
        }
        out << '\n';
    }
}

}  // namespace clcp::harness
