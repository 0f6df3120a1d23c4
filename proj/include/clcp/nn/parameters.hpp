#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clcp/core/error.hpp"
#include "clcp/core/random.hpp"

namespace clcp::nn {

/// One named block of the flat parameter vector. Matrices are stored
/// column-major so they can be mapped directly with Eigen.
struct ParameterBlock {
    std::string name;
    std::size_t rows{0};
    std::size_t cols{1};
    std::size_t offset{0};

    [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
    bool operator==(const ParameterBlock&) const = default;
};

class ParameterLayout {
public:
    /// Appends a block and returns its offset.
    std::size_t add(std::string name, std::size_t rows, std::size_t cols = 1) {
        for (const auto& b : blocks_) {
            require(b.name != name, ErrorCode::invalid_argument, "duplicate parameter block '" + name + "'");
        }
        blocks_.push_back({std::move(name), rows, cols, total_});
        total_ += rows * cols;
        return blocks_.back().offset;
    }

    [[nodiscard]] std::size_t size() const noexcept { return total_; }
    [[nodiscard]] const std::vector<ParameterBlock>& blocks() const noexcept { return blocks_; }

    [[nodiscard]] const ParameterBlock& block(const std::string& name) const {
        for (const auto& b : blocks_) {
            if (b.name == name) return b;
        }
        throw Error(ErrorCode::invalid_argument, "no parameter block named '" + name + "'");
    }

    bool operator==(const ParameterLayout&) const = default;

private:
    std::vector<ParameterBlock> blocks_;
    std::size_t total_{0};
};

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

[[nodiscard]] inline ConstMatrixMap view(std::span<const double> flat, const ParameterBlock& b) {
    return {flat.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

[[nodiscard]] inline MatrixMap view(std::span<double> flat, const ParameterBlock& b) {
    return {flat.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

/// Model weights: a flat vector plus the named layout describing it.
struct ParameterVector {
    ParameterLayout layout;
    std::vector<double> values;

    ParameterVector() = default;
    explicit ParameterVector(ParameterLayout l) : layout(std::move(l)), values(layout.size(), 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] std::span<double> flat() noexcept { return values; }
    [[nodiscard]] std::span<const double> flat() const noexcept { return values; }
    [[nodiscard]] MatrixMap block(const std::string& name) { return view(flat(), layout.block(name)); }
    [[nodiscard]] ConstMatrixMap block(const std::string& name) const { return view(flat(), layout.block(name)); }

    /// FNV-1a over the raw bytes; used to verify that frozen copies stay frozen.
    [[nodiscard]] std::uint64_t hash() const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const double v : values) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int k = 0; k < 8; ++k) {
                h ^= (bits >> (8 * k)) & 0xFFU;
                h *= 0x100000001b3ULL;
            }
        }
        return h;
    }

    bool operator==(const ParameterVector&) const = default;
};

}  // namespace clcp::nn
