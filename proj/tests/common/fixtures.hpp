#pragma once

#include "clcp/harness/config.hpp"

namespace clcp::fixture {

/// A complete three-task experiment that trains in well under a second:
/// d_in = 4, T = 4, a handful of windows per user and one epoch.
[[nodiscard]] inline harness::ExperimentConfig tiny_experiment(harness::Method method = harness::Method::naive) {
    harness::ExperimentConfig c;
    c.method = method;
    c.model.backbone = nn::Backbone::gru;
    c.model.hidden = 4;
    c.model.n_layers = 2;
    c.model.seq_len = 4;
    c.data.users = 5;
    c.data.n_tx = 2;
    c.data.n_rb = 1;
    c.data.n_rx = 1;
    c.data.window_stride = 40;
    c.data.max_windows_per_user = 6;
    c.optim.batch_size = 4;
    c.buffer = 10;
    c.epochs = 2;
    c.snr_grid = {0, 15, 30};
    return c;
}

}  // namespace clcp::fixture
