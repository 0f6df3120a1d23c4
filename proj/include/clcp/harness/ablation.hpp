#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "clcp/core/error.hpp"
#include "clcp/harness/config.hpp"

namespace clcp::harness {

/// One point of an ablation grid.
struct AblationCell {
    std::size_t seq_len{0};
    std::size_t buffer{0};

    [[nodiscard]] std::string tag() const {
        return "seq" + std::to_string(seq_len) + "-buf" + std::to_string(buffer);
    }
};

inline constexpr std::string_view ablation_grids[] = {"appendixC"};

/// "appendixC": sequence length {16, 32} x replay capacity {3000, 5000}.
[[nodiscard]] inline std::vector<AblationCell> ablation_grid(std::string_view name) {
    if (name == "appendixC") return {{16, 3000}, {16, 5000}, {32, 3000}, {32, 5000}};
    throw Error(ErrorCode::config, "unknown ablation grid '" + std::string(name) + "'");
}

[[nodiscard]] inline ExperimentConfig apply_cell(ExperimentConfig c, const AblationCell& cell) {
    c.model.seq_len = cell.seq_len;
    c.buffer = cell.buffer;
    return c;
}

}  // namespace clcp::harness
