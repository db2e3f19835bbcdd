#include <gtest/gtest.h>

#include <cmath>

#include "tiv/backbone.hpp"
#include "tiv/moco.hpp"
#include "tiv/rng.hpp"

using namespace tiv;
using nn::Mat;

namespace {

Mat unit_rows(long n, long d, Rng& rng) {
    Mat m(n, d);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    for (long i = 0; i < n; ++i) m.row(i) /= m.row(i).norm();
    return m;
}

}  // namespace

TEST(Enqueue, WrapsAroundModularly) {
    Rng rng(1);
    Mat queue = unit_rows(8, 4, rng);
    const Mat keys = unit_rows(4, 4, rng);
    long ptr = 6;
    enqueue(queue, ptr, keys);
    EXPECT_EQ(ptr, 2);
    EXPECT_TRUE(queue.row(6).isApprox(keys.row(0), 0.0));
    EXPECT_TRUE(queue.row(7).isApprox(keys.row(1), 0.0));
    EXPECT_TRUE(queue.row(0).isApprox(keys.row(2), 0.0));
    EXPECT_TRUE(queue.row(1).isApprox(keys.row(3), 0.0));
}

TEST(Enqueue, FullBatchReplacesWholeQueue) {
    Rng rng(2);
    Mat queue = unit_rows(8, 4, rng);
    const Mat keys = unit_rows(8, 4, rng);
    long ptr = 3;
    enqueue(queue, ptr, keys);
    EXPECT_EQ(ptr, 3);  // advanced by K mod K
    for (long i = 0; i < 8; ++i)
        EXPECT_TRUE(queue.row((3 + i) % 8).isApprox(keys.row(i), 0.0));
}

TEST(Enqueue, TwoBatchesAdvanceTwice) {
    Rng rng(3);
    Mat queue = unit_rows(16, 4, rng);
    long ptr = 0;
    enqueue(queue, ptr, unit_rows(5, 4, rng));
    enqueue(queue, ptr, unit_rows(5, 4, rng));
    EXPECT_EQ(ptr, 10 % 16);
}

TEST(Enqueue, OversizedBatchRejected) {
    Rng rng(4);
    Mat queue = unit_rows(4, 4, rng);
    long ptr = 0;
    EXPECT_THROW(enqueue(queue, ptr, unit_rows(5, 4, rng)), ContractError);
}

TEST(Enqueue, MatchesModularOracleOverRandomSequences) {
    Rng rng(5);
    const long k = 16, d = 3;
    Mat queue = unit_rows(k, d, rng);
    Mat oracle = queue;
    long ptr = 0, oracle_ptr = 0;
    for (int step = 0; step < 1000; ++step) {
        const long b = 1 + static_cast<long>(rng.uniform_index(k));
        const Mat keys = unit_rows(b, d, rng);
        enqueue(queue, ptr, keys);
        for (long i = 0; i < b; ++i) oracle.row((oracle_ptr + i) % k) = keys.row(i);
        oracle_ptr = (oracle_ptr + b) % k;
        ASSERT_EQ(ptr, oracle_ptr);
        ASSERT_TRUE(queue.isApprox(oracle, 0.0));
        ASSERT_GE(ptr, 0);
        ASSERT_LT(ptr, k);
        for (long i = 0; i < k; ++i) ASSERT_NEAR(queue.row(i).norm(), 1.0, 1e-9);
    }
}

TEST(TemporalPositive, BoundariesUseTheOnlyNeighbor) {
    Rng rng(6);
    EXPECT_EQ(temporal_positive(0, 10, rng), 1u);
    EXPECT_EQ(temporal_positive(9, 10, rng), 8u);
}

TEST(TemporalPositive, InteriorUsesImmediateNeighbors) {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        const std::size_t p = temporal_positive(5, 10, rng);
        EXPECT_TRUE(p == 4 || p == 6);
    }
}

TEST(TemporalPositive, NeighborsSplitEvenly) {
    Rng rng(8);
    const int n = 10000;
    int up = 0;
    for (int i = 0; i < n; ++i)
        if (temporal_positive(5, 11, rng) == 6) ++up;
    const double sigma = std::sqrt(n * 0.25);
    EXPECT_NEAR(up, n / 2.0, 3.0 * sigma);
}

TEST(TemporalPositive, TooFewFramesRejected) {
    Rng rng(9);
    EXPECT_THROW(temporal_positive(0, 1, rng), ContractError);
}

TEST(TemporalPositive, PairsCoverAnchors) {
    Rng rng(10);
    const std::vector<std::size_t> anchors = {0, 3, 7, 9};
    const auto pairs = temporal_positive_pairs(anchors, 10, rng);
    ASSERT_EQ(pairs.size(), 4u);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(pairs[i].first, anchors[i]);
        const long diff = static_cast<long>(pairs[i].second) - static_cast<long>(pairs[i].first);
        EXPECT_EQ(std::abs(diff), 1);
    }
}

TEST(ContrastiveState, QueueScalesToHalfTheDataset) {
    MocoConfig cfg;
    cfg.queue_size = 65536;
    cfg.proj_dim = 16;
    ContrastiveState state(random_backbone("small_cnn_64", 1), cfg, 100, 1);
    EXPECT_EQ(state.queue.rows(), 50);
    state.validate();
}

TEST(ContrastiveState, KeySideStartsAsExactCopy) {
    MocoConfig cfg;
    cfg.queue_size = 64;
    cfg.proj_dim = 16;
    ContrastiveState state(random_backbone("small_cnn_64", 2), cfg, 1000, 2);
    auto qp = state.query_params();
    auto kp = state.key_params();
    ASSERT_EQ(qp.size(), kp.size());
    for (std::size_t i = 0; i < qp.size(); ++i)
        EXPECT_TRUE(qp[i].second->v.isApprox(kp[i].second->v, 0.0));
}

TEST(ContrastiveState, InvalidHyperparametersRejected) {
    MocoConfig bad;
    bad.momentum = 1.5;
    EXPECT_THROW(ContrastiveState(random_backbone("small_cnn_64", 3), bad, 100, 3), ConfigError);
    MocoConfig bad2;
    bad2.temperature = 0.0;
    EXPECT_THROW(ContrastiveState(random_backbone("small_cnn_64", 3), bad2, 100, 3), ConfigError);
}
