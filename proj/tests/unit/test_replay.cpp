#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "../common/oracles.hpp"
#include "clcp/core/finite_diff.hpp"
#include "clcp/nn/loss.hpp"
#include "clcp/replay/buffer.hpp"
#include "clcp/replay/mix.hpp"

using namespace clcp;
using namespace clcp::replay;

namespace {

nn::Sample scalar_sample(double v) {
    nn::Sample s{ComplexTensor({1, 1, 1, 1}), ComplexTensor({1, 1, 1})};
    s.window.data()[0] = {v, 0.0};
    s.target.data()[0] = {0.0, v};
    return s;
}

// Streams items 0..n-1 with stored_loss = index so inclusion is readable back.
ReplayBuffer stream(std::size_t capacity, std::size_t n, std::uint64_t seed,
                    EvictionPolicy policy = EvictionPolicy::uniform) {
    ReplayBuffer buf(capacity, policy, seed);
    const auto s = scalar_sample(1.0);
    for (std::size_t i = 0; i < n; ++i) buf.insert({s, static_cast<double>(i)});
    return buf;
}

nn::PredictorConfig tiny_gru() {
    nn::PredictorConfig c;
    c.backbone = nn::Backbone::gru;
    c.d_in = 8;
    c.hidden = 4;
    c.seq_len = 4;
    return c;
}

std::vector<nn::Sample> random_samples(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<nn::Sample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::random_sample(rng, 4, 1, 2, 2));
    return out;
}

}  // namespace

TEST(Reservoir, StoresUnconditionallyUntilFull) {
    ReplayBuffer buf(5, EvictionPolicy::uniform, 3);
    for (int i = 0; i < 5; ++i) EXPECT_TRUE(buf.insert({scalar_sample(i), 0.0}));
    EXPECT_EQ(buf.size(), 5u);
    EXPECT_EQ(buf.stream_count(), 5u);
}

TEST(Reservoir, SizeIsMinOfStreamAndCapacity) {
    for (const std::size_t n : {0u, 3u, 10u, 250u}) {
        const auto buf = stream(10, n, 1);
        EXPECT_EQ(buf.size(), std::min<std::size_t>(n, 10));
        EXPECT_EQ(buf.stream_count(), n);
    }
}

TEST(Reservoir, ZeroCapacityCountsButNeverStores) {
    const auto buf = stream(0, 20, 1);
    EXPECT_TRUE(buf.empty());
    EXPECT_EQ(buf.stream_count(), 20u);
}

TEST(Reservoir, AcceptanceAtTwiceCapacityIsOneHalf) {
    // Offer the (2N)-th item to many independently seeded full buffers.
    constexpr std::size_t N = 20;
    constexpr int trials = 20000;
    int accepted = 0;
    for (int k = 0; k < trials; ++k) {
        auto buf = stream(N, 2 * N - 1, 1000 + k);
        accepted += buf.insert({scalar_sample(0.0), 0.0});
    }
    // Binomial(20000, 0.5) has sd ~71; 5 sd.
    EXPECT_NEAR(accepted / double(trials), 0.5, 0.018);
}

TEST(Reservoir, InclusionIsUniformChiSquare) {
    constexpr std::size_t N = 100;
    constexpr std::size_t n = 10000;
    constexpr int trials = 2000;
    std::vector<std::size_t> counts(n, 0);
    for (int k = 0; k < trials; ++k) {
        for (const auto& e : stream(N, n, 77 + k).items()) ++counts[static_cast<std::size_t>(e.stored_loss)];
    }
    EXPECT_GT(oracle::chi_square_uniform_p(counts), 0.01);
}

TEST(Reservoir, RetainedAcrossRefreshAndDeterministic) {
    const auto a = stream(10, 300, 9);
    const auto b = stream(10, 300, 9);
    const auto c = stream(10, 300, 10);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.losses(), c.losses());
}

TEST(Reservoir, RejectsNegativeOrNonFiniteLoss) {
    ReplayBuffer buf(3, EvictionPolicy::uniform);
    EXPECT_THROW(buf.insert({scalar_sample(0), -1.0}), Error);
    EXPECT_THROW(buf.insert({scalar_sample(0), std::nan("")}), Error);
}

TEST(Lars, DistributionExamples) {
    const std::vector<double> equal{0.3, 0.3, 0.3, 0.3};
    for (const double p : lars_distribution(equal, 1e-8)) EXPECT_DOUBLE_EQ(p, 0.25);

    const std::vector<double> two{0.0, 1.0};
    const auto p = lars_distribution(two, 0.01);
    // 100 vs 1/1.01, normalized by hand.
    const double a = 100.0, b = 1.0 / 1.01;
    EXPECT_NEAR(p[0], a / (a + b), 1e-15);
    EXPECT_NEAR(p[0], 0.9902, 5e-5);
    EXPECT_NEAR(p[1], 0.0098, 5e-5);

    const std::vector<double> one{5.0};
    EXPECT_EQ(lars_distribution(one, 1e-8)[0], 1.0);
    Rng rng(1);
    EXPECT_EQ(lars_victim(one, 1e-8, rng), 0u);
}

TEST(Lars, EmpiricalFrequenciesMatchLaw) {
    const std::vector<double> losses{0.0, 0.1, 1.0, 10.0};
    const double eps = 1e-8;
    std::vector<double> inv;
    double total = 0.0;
    for (const double l : losses) total += inv.emplace_back(1.0 / (l + eps));
    std::vector<int> hits(4, 0);
    Rng rng(2024);
    constexpr int draws = 100000;
    for (int i = 0; i < draws; ++i) ++hits[lars_victim(losses, eps, rng)];
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(hits[i] / double(draws), inv[i] / total, 0.02) << i;
}

TEST(Lars, RejectsBadInput) {
    EXPECT_THROW((void)lars_distribution(std::vector<double>{}, 1e-8), Error);
    EXPECT_THROW((void)lars_distribution(std::vector<double>{1.0}, 0.0), Error);
    EXPECT_THROW((void)lars_distribution(std::vector<double>{-1.0}, 1e-8), Error);
}

TEST(Lars, RefreshChangesVictimOdds) {
    ReplayBuffer buf(3, EvictionPolicy::lars, 5);
    for (int i = 0; i < 3; ++i) buf.insert({scalar_sample(i), 1.0});
    const auto before = buf.losses();
    buf.refresh_loss(1, 1.0);
    EXPECT_EQ(buf.losses(), before);
    buf.refresh_loss(2, 0.0);
    const auto p = lars_distribution(buf.losses(), buf.epsilon());
    EXPECT_GT(p[2], p[0]);
    EXPECT_GT(p[2], p[1]);
    EXPECT_THROW(buf.refresh_loss(3, 1.0), Error);
}

TEST(Lars, HardItemsSurviveLongStreams) {
    // With a few very hard items in the initial fill, LARS keeps them while
    // uniform eviction loses them at the reservoir rate.
    auto fill = [](EvictionPolicy policy) {
        ReplayBuffer buf(20, policy, 8);
        for (int i = 0; i < 20; ++i) buf.insert({scalar_sample(i), i < 3 ? 100.0 : 0.01});
        for (int i = 0; i < 2000; ++i) buf.insert({scalar_sample(-1), 0.01});
        return std::count_if(buf.items().begin(), buf.items().end(), [](const auto& e) { return e.stored_loss == 100.0; });
    };
    EXPECT_EQ(fill(EvictionPolicy::lars), 3);
    EXPECT_LT(fill(EvictionPolicy::uniform), 3);
}

TEST(Compose, EmptyBufferForcesCurrentOnly) {
    const auto pool = random_samples(6, 1);
    const ReplayBuffer buf(10, EvictionPolicy::uniform);
    Rng rng(1);
    const auto mb = compose_batch(std::span<const nn::Sample>(pool), buf, MixConfig{0.3, 4, 4}, rng);
    EXPECT_EQ(mb.current.size(), 4u);
    EXPECT_TRUE(mb.replay.empty());
    EXPECT_EQ(mb.lambda, 1.0);
}

TEST(Compose, HonoursSizesAndCapsReplay) {
    const auto pool = random_samples(10, 2);
    ReplayBuffer buf(10, EvictionPolicy::uniform, 4);
    for (int i = 0; i < 3; ++i) buf.insert({pool[i], 0.5});
    Rng rng(3);
    const auto small = compose_batch(std::span<const nn::Sample>(pool), buf, MixConfig{0.5, 5, 8}, rng);
    EXPECT_EQ(small.current.size(), 5u);
    EXPECT_EQ(small.replay.size(), 3u);
    EXPECT_EQ(small.lambda, 0.5);
    const std::set<const nn::Sample*> distinct(small.current.begin(), small.current.end());
    EXPECT_EQ(distinct.size(), 5u);

    for (int i = 3; i < 10; ++i) buf.insert({pool[i], 0.5});
    const auto full = compose_batch(std::span<const nn::Sample>(pool), buf, MixConfig{0.5, 4, 6}, rng);
    EXPECT_EQ(full.replay.size(), 6u);
    EXPECT_EQ(std::set<std::size_t>(full.replay.begin(), full.replay.end()).size(), 6u);
}

TEST(MixedLoss, Examples) {
    EXPECT_DOUBLE_EQ(mixed_loss(0.2, 0.4, 0.5), 0.3);
    EXPECT_EQ(mixed_loss(0.2, 0.4, 1.0), 0.2);
    EXPECT_EQ(mixed_loss(0.2, 0.4, 0.0), 0.4);
    EXPECT_THROW((void)mixed_loss(0.2, 0.4, 1.5), Error);
    // Linear in lambda.
    const double a = mixed_loss(0.7, 0.1, 0.25), b = mixed_loss(0.7, 0.1, 0.75);
    EXPECT_NEAR(0.5 * (a + b), mixed_loss(0.7, 0.1, 0.5), 1e-15);
}

TEST(MixedLoss, GradientMatchesFiniteDifferences) {
    const nn::Predictor model(tiny_gru());
    const auto theta = model.initial_parameters(5);
    const auto data = random_samples(5, 11);
    ReplayBuffer buf(4, EvictionPolicy::uniform, 2);
    for (int i = 2; i < 5; ++i) buf.insert({data[i], 0.1});
    MixedBatch mb;
    mb.current = {&data[0], &data[1]};
    mb.replay = {0, 2};
    mb.lambda = 0.3;
    const auto lg = mixed_loss_and_grad(model, mb, buf, theta.flat());

    // Oracle: two separate batch NMSEs combined by the mixing rule.
    const nn::Batch cur = nn::pack_batch(std::vector<nn::Sample>{data[0], data[1]});
    const nn::Batch rep = nn::pack_batch(std::vector<nn::Sample>{buf[0].sample, buf[2].sample});
    auto objective = [&](std::span<const double> t) {
        return 0.3 * nn::batch_nmse(model, cur, t) + 0.7 * nn::batch_nmse(model, rep, t);
    };
    EXPECT_NEAR(lg.loss, objective(theta.flat()), 1e-13);
    const auto numeric = finite_diff_grad(objective, theta.flat(), 1e-5);
    const auto report = oracle::compare_gradients(model.layout(), lg.grad, numeric);
    EXPECT_LE(report.max_rel, 1e-4) << report.worst_block;
    EXPECT_EQ(lg.current_nmse.size(), 2);
    EXPECT_EQ(lg.replay_nmse.size(), 2);
}

TEST(MixedLoss, LambdaOneMatchesPlainLossBitwise) {
    const nn::Predictor model(tiny_gru());
    const auto theta = model.initial_parameters(6);
    const auto data = random_samples(3, 12);
    const ReplayBuffer empty(4, EvictionPolicy::uniform);
    MixedBatch mb;
    for (const auto& s : data) mb.current.push_back(&s);
    mb.lambda = 1.0;
    const auto mixed = mixed_loss_and_grad(model, mb, empty, theta.flat());
    const auto plain = nn::loss_and_grad(model, nn::pack_batch(data), theta.flat());
    EXPECT_EQ(mixed.loss, plain.loss);
    EXPECT_EQ(mixed.grad, plain.grad);
}

TEST(Snapshot, SaveLoadRoundTrip) {
    const auto data = random_samples(6, 13);
    ReplayBuffer buf(4, EvictionPolicy::lars, 21, 1e-6);
    for (std::size_t i = 0; i < data.size(); ++i) buf.insert({data[i], 0.1 * double(i)});
    const auto dir = std::filesystem::temp_directory_path() / "clcp_replay_snapshot";
    std::filesystem::create_directories(dir);
    save_buffer(buf, dir / "buffer.json");
    auto loaded = load_buffer(dir / "buffer.json");
    EXPECT_EQ(loaded, buf);

    // The generator state travels with the snapshot, so continuing both
    // buffers gives the same contents.
    for (const auto& s : data) {
        buf.insert({s, 0.5});
        loaded.insert({s, 0.5});
    }
    EXPECT_EQ(loaded, buf);

    const ReplayBuffer none(3, EvictionPolicy::uniform, 1);
    save_buffer(none, dir / "empty.json");
    EXPECT_EQ(load_buffer(dir / "empty.json"), none);
    EXPECT_THROW((void)load_buffer(dir / "missing.json"), Error);
    std::filesystem::remove_all(dir);
}
