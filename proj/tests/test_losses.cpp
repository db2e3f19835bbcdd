#include <gtest/gtest.h>

#include <cmath>

#include "tiv/losses.hpp"
#include "tiv/rng.hpp"

using namespace tiv;
using nn::Mat;
using nn::Vec;

namespace {

Mat unit_rows(int n, int d, Rng& rng) {
    Mat m(n, d);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    for (long i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).norm();
    return m;
}

}  // namespace

TEST(CrossEntropy, UniformLogitsGiveLogC) {
    for (int c : {2, 7, 26}) {
        const Mat logits = Mat::Constant(3, c, 1.3);
        const auto res = softmax_cross_entropy(logits, {0, c / 2, c - 1});
        EXPECT_NEAR(res.loss, std::log(static_cast<double>(c)), 1e-12);
    }
}

TEST(CrossEntropy, SaturatedLogitGivesZeroLossAndFullAccuracy) {
    Mat logits = Mat::Zero(4, 5);
    const std::vector<int> labels = {1, 3, 0, 2};
    for (int i = 0; i < 4; ++i) logits(i, labels[i]) = 20.0;
    const auto res = softmax_cross_entropy(logits, labels);
    EXPECT_LT(res.loss, 1e-6);
    EXPECT_DOUBLE_EQ(res.accuracy, 1.0);
}

TEST(CrossEntropy, TwoClassClosedForm) {
    Mat logits(1, 2);
    logits << 1.0, 0.0;
    const auto res = softmax_cross_entropy(logits, {0});
    EXPECT_NEAR(res.loss, std::log1p(std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(res.loss, 0.3133, 5e-5);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(4));
        const int c = 2 + static_cast<int>(rng.uniform_index(4));
        Mat logits(n, c);
        for (long i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-2.0, 2.0);
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.uniform_index(c));

        const auto res = softmax_cross_entropy(logits, labels);
        const double eps = 1e-6;
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < c; ++j) {
                Mat lp = logits, lm = logits;
                lp(i, j) += eps;
                lm(i, j) -= eps;
                const double fd = (softmax_cross_entropy(lp, labels).loss -
                                   softmax_cross_entropy(lm, labels).loss) /
                                  (2 * eps);
                EXPECT_NEAR(fd, res.grad_logits(i, j), 1e-3 * std::max(1.0, std::fabs(fd)));
            }
    }
}

TEST(CrossEntropy, LossIsNonNegative) {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        Mat logits(3, 4);
        for (long i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-5.0, 5.0);
        const auto res = softmax_cross_entropy(logits, {0, 1, 2});
        EXPECT_GE(res.loss, 0.0);
    }
}

TEST(CrossEntropy, OutOfRangeLabelRejected) {
    const Mat logits = Mat::Zero(2, 3);
    EXPECT_THROW(softmax_cross_entropy(logits, {0, 3}), ContractError);
    EXPECT_THROW(softmax_cross_entropy(logits, {-1, 0}), ContractError);
}

TEST(CrossEntropy, ArgmaxTieBreaksToLowestIndex) {
    const Mat logits = Mat::Zero(1, 4);
    const auto res0 = softmax_cross_entropy(logits, {0});
    EXPECT_DOUBLE_EQ(res0.accuracy, 1.0);
    const auto res2 = softmax_cross_entropy(logits, {2});
    EXPECT_DOUBLE_EQ(res2.accuracy, 0.0);
}

TEST(InfoNce, EqualSimilarityGivesLogKPlusOne) {
    Rng rng(3);
    for (long k : {1L, 8L, 100L}) {
        const Mat q = unit_rows(2, 6, rng);
        Mat pos(2, 6);
        Mat queue(k, 6);
        // positive and every negative are the same vector: all K+1 logits tie
        const Mat shared = unit_rows(1, 6, rng);
        for (int i = 0; i < 2; ++i) pos.row(i) = shared.row(0);
        for (long j = 0; j < k; ++j) queue.row(j) = shared.row(0);
        const auto res = info_nce_loss(q, pos, queue, 0.2);
        EXPECT_NEAR(res.loss, std::log(static_cast<double>(k + 1)), 1e-12);
    }
}

TEST(InfoNce, SingleNegativeClosedForm) {
    Mat q(1, 3), pos(1, 3), queue(1, 3);
    q << 1.0, 0.0, 0.0;
    pos << 1.0, 0.0, 0.0;   // q . k+ = 1
    queue << 0.0, 1.0, 0.0;  // q . k- = 0
    const auto res = info_nce_loss(q, pos, queue, 1.0);
    EXPECT_NEAR(res.loss, std::log1p(std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(res.loss, 0.3133, 5e-5);
}

TEST(InfoNce, LargeMarginDrivesLossToZero) {
    Mat q(1, 3), pos(1, 3), queue(4, 3);
    q << 1.0, 0.0, 0.0;
    pos << 1.0, 0.0, 0.0;
    queue << 0, 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1;
    const auto res = info_nce_loss(q, pos, queue, 0.01);  // margin 1/tau = 100
    EXPECT_LT(res.loss, 1e-6);
}

TEST(InfoNce, GradientsMatchFiniteDifferences) {
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 2, d = 5;
        const long k = 6;
        const Mat q0 = unit_rows(n, d, rng);
        const Mat pos0 = unit_rows(n, d, rng);
        const Mat queue = unit_rows(k, d, rng);
        const double tau = 0.5;

        const auto res = info_nce_loss(q0, pos0, queue, tau);
        const double eps = 1e-7;
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < d; ++j) {
                Mat qp = q0, qm = q0;
                qp(i, j) += eps;
                qm(i, j) -= eps;
                const double fd =
                    (info_nce_loss(qp, pos0, queue, tau).loss -
                     info_nce_loss(qm, pos0, queue, tau).loss) /
                    (2 * eps);
                EXPECT_NEAR(fd, res.grad_query(i, j), 1e-4 * std::max(1.0, std::fabs(fd)));

                Mat pp = pos0, pm = pos0;
                pp(i, j) += eps;
                pm(i, j) -= eps;
                const double fdp =
                    (info_nce_loss(q0, pp, queue, tau).loss -
                     info_nce_loss(q0, pm, queue, tau).loss) /
                    (2 * eps);
                EXPECT_NEAR(fdp, res.grad_positive(i, j), 1e-4 * std::max(1.0, std::fabs(fdp)));
            }
    }
}

TEST(InfoNce, LossIsNonNegative) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat q = unit_rows(3, 4, rng);
        const Mat pos = unit_rows(3, 4, rng);
        const Mat queue = unit_rows(10, 4, rng);
        EXPECT_GE(info_nce_loss(q, pos, queue, 0.2).loss, 0.0);
    }
}

TEST(InfoNce, NonNormalizedInputRejected) {
    Rng rng(6);
    Mat q = unit_rows(2, 4, rng);
    const Mat pos = unit_rows(2, 4, rng);
    const Mat queue = unit_rows(5, 4, rng);
    q(0, 0) *= 1.2;
    EXPECT_THROW(info_nce_loss(q, pos, queue, 0.2), ContractError);
}

TEST(InfoNce, InvalidTemperatureRejected) {
    Rng rng(7);
    const Mat q = unit_rows(2, 4, rng);
    const Mat pos = unit_rows(2, 4, rng);
    const Mat queue = unit_rows(5, 4, rng);
    EXPECT_THROW(info_nce_loss(q, pos, queue, 0.0), ConfigError);
}
