#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcp/core/error.hpp"
#include "clcp/nn/config.hpp"
#include "clcp/nn/parameters.hpp"
#include "clcp/nn/predictor.hpp"

namespace clcp::io {

/// Named real vectors persisted as a JSON manifest plus one raw little-endian
/// f64 payload file (`<manifest stem>.bin`). Entries are written in key order
/// so identical contents give identical bytes.
struct VectorArchive {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, std::vector<double>> vectors;

    bool operator==(const VectorArchive&) const = default;
};

[[nodiscard]] inline std::filesystem::path payload_path(const std::filesystem::path& manifest) {
    auto p = manifest;
    p.replace_extension(".bin");
    return p;
}

inline void save_archive(const VectorArchive& archive, const std::filesystem::path& manifest) {
    const auto bin = payload_path(manifest);
    std::ofstream payload(bin, std::ios::binary | std::ios::trunc);
    if (!payload) throw Error(ErrorCode::io, "cannot open " + bin.string() + " for writing");
    nlohmann::json entries = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, values] : archive.vectors) {
        for (const double v : values) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            unsigned char bytes[8];
            for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFFU);
            payload.write(reinterpret_cast<const char*>(bytes), 8);
        }
        entries.push_back({{"name", name}, {"offset", offset}, {"length", values.size()}});
        offset += values.size();
    }
    if (!payload) throw Error(ErrorCode::io, "write failed: " + bin.string());

    nlohmann::json doc;
    doc["meta"] = archive.meta;
    doc["payload"] = bin.filename().string();
    doc["dtype"] = "f64le";
    doc["entries"] = entries;
    std::ofstream out(manifest, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + manifest.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io, "write failed: " + manifest.string());
}

[[nodiscard]] inline VectorArchive load_archive(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw Error(ErrorCode::io, "cannot open " + manifest.string());
    VectorArchive archive;
    try {
        nlohmann::json doc;
        in >> doc;
        archive.meta = doc.at("meta");
        const auto bin = manifest.parent_path() / doc.at("payload").get<std::string>();
        std::ifstream payload(bin, std::ios::binary);
        if (!payload) throw Error(ErrorCode::io, "cannot open " + bin.string());
        for (const auto& e : doc.at("entries")) {
            const auto offset = e.at("offset").get<std::uint64_t>();
            const auto length = e.at("length").get<std::uint64_t>();
            std::vector<double> values(length);
            payload.seekg(static_cast<std::streamoff>(offset * 8));
            for (auto& v : values) {
                unsigned char bytes[8];
                payload.read(reinterpret_cast<char*>(bytes), 8);
                if (!payload) throw Error(ErrorCode::format, "truncated payload " + bin.string());
                std::uint64_t bits = 0;
                for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
                v = std::bit_cast<double>(bits);
            }
            archive.vectors.emplace(e.at("name").get<std::string>(), std::move(values));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format, manifest.string() + ": " + e.what());
    }
    return archive;
}

inline void save_checkpoint(const std::filesystem::path& manifest, const nn::PredictorConfig& config,
                            const nn::ParameterVector& theta) {
    VectorArchive archive;
    archive.meta["kind"] = "predictor-checkpoint";
    archive.meta["config"] = config;
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : theta.layout.blocks()) {
        blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", b.offset}});
    }
    archive.meta["blocks"] = blocks;
    archive.vectors["theta"] = theta.values;
    save_archive(archive, manifest);
}

struct Checkpoint {
    nn::PredictorConfig config;
    nn::ParameterVector theta;
};

/// Loads a checkpoint and checks the stored block list against the layout
/// rebuilt from the stored architecture.
[[nodiscard]] inline Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
    auto archive = load_archive(manifest);
    if (!archive.meta.contains("kind") || archive.meta["kind"] != "predictor-checkpoint" ||
        !archive.vectors.contains("theta")) {
        throw Error(ErrorCode::format, manifest.string() + " is not a predictor checkpoint");
    }
    Checkpoint ckpt;
    try {
        ckpt.config = archive.meta.at("config").get<nn::PredictorConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::format, manifest.string() + ": " + e.what());
    }
    ckpt.theta = nn::ParameterVector(nn::Predictor(ckpt.config).layout());
    const auto& stored = archive.meta.at("blocks");
    const auto& blocks = ckpt.theta.layout.blocks();
    require(stored.size() == blocks.size(), ErrorCode::format, "checkpoint block count does not match architecture");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        require(stored[i].at("name") == blocks[i].name && stored[i].at("rows") == blocks[i].rows &&
                    stored[i].at("cols") == blocks[i].cols,
                ErrorCode::format, "checkpoint block '" + blocks[i].name + "' does not match architecture");
    }
    auto& values = archive.vectors.at("theta");
    require(values.size() == ckpt.theta.size(), ErrorCode::format, "checkpoint payload length mismatch");
    ckpt.theta.values = std::move(values);
    return ckpt;
}

}  // namespace clcp::io
