#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "tiv/analysis.hpp"
#include "tiv/backbone.hpp"
#include "tiv/probe.hpp"
#include "tiv/rng.hpp"

using namespace tiv;
using nn::Mat;
using nn::Tensor4;
using nn::Vec;

namespace {

FeatureResponseTable make_table(const Mat& responses, const std::vector<int>& labels) {
    return FeatureResponseTable{responses, labels, "test"};
}

// independent brute-force CSI
Eigen::VectorXd brute_force_csi(const Mat& responses, const std::vector<int>& labels) {
    Eigen::VectorXd out(responses.cols());
    std::map<int, std::vector<long>> by_class;
    for (long i = 0; i < responses.rows(); ++i) by_class[labels[i]].push_back(i);
    for (long f = 0; f < responses.cols(); ++f) {
        int best = -1;
        double best_mean = -1.0;
        for (const auto& [cls, rows] : by_class) {
            double m = 0.0;
            for (long r : rows) m += responses(r, f);
            m /= rows.size();
            if (m > best_mean) {
                best_mean = m;
                best = cls;
            }
        }
        double mx = 0.0, rest = 0.0;
        long nx = 0, nr = 0;
        for (long i = 0; i < responses.rows(); ++i) {
            if (labels[i] == best) {
                mx += responses(i, f);
                ++nx;
            } else {
                rest += responses(i, f);
                ++nr;
            }
        }
        mx /= nx;
        rest /= nr;
        out[f] = (mx + rest) != 0.0 ? (mx - rest) / (mx + rest) : 0.0;
    }
    return out;
}

}  // namespace

TEST(Csi, PerfectlySelectiveFeature) {
    Mat r(4, 1);
    r << 1.0, 1.0, 0.0, 0.0;
    const auto scores = csi(make_table(r, {0, 0, 1, 1}));
    EXPECT_NEAR(scores[0], 1.0, 1e-12);
}

TEST(Csi, AgnosticFeature) {
    Mat r(4, 1);
    r << 0.7, 0.7, 0.7, 0.7;
    const auto scores = csi(make_table(r, {0, 0, 1, 1}));
    EXPECT_NEAR(scores[0], 0.0, 1e-12);
}

TEST(Csi, ThreeToOneGivesHalf) {
    Mat r(4, 1);
    r << 3.0, 3.0, 1.0, 1.0;
    const auto scores = csi(make_table(r, {0, 0, 1, 1}));
    EXPECT_NEAR(scores[0], 0.5, 1e-12);
}

TEST(Csi, ZeroResponsesGiveZeroByConvention) {
    Mat r = Mat::Zero(4, 2);
    const auto scores = csi(make_table(r, {0, 0, 1, 1}));
    EXPECT_DOUBLE_EQ(scores[0], 0.0);
    EXPECT_DOUBLE_EQ(scores[1], 0.0);
}

TEST(Csi, MatchesBruteForceOnRandomTables) {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int classes = 2 + static_cast<int>(rng.uniform_index(9));
        const int per = 3 + static_cast<int>(rng.uniform_index(8));
        const int features = 1 + static_cast<int>(rng.uniform_index(50));
        Mat r(classes * per, features);
        for (long i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform();
        std::vector<int> labels;
        for (int c = 0; c < classes; ++c)
            for (int i = 0; i < per; ++i) labels.push_back(c);
        const auto mine = csi(make_table(r, labels));
        const auto oracle = brute_force_csi(r, labels);
        EXPECT_NEAR((mine - oracle).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
}

TEST(Csi, BoundedAndScaleInvariant) {
    Rng rng(4);
    Mat r(30, 10);
    for (long i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform();
    std::vector<int> labels(30);
    for (int i = 0; i < 30; ++i) labels[i] = i % 3;
    const auto a = csi(make_table(r, labels));
    for (long f = 0; f < a.size(); ++f) {
        EXPECT_GE(a[f], 0.0);
        EXPECT_LE(a[f], 1.0);
    }
    Mat scaled = r;
    scaled.col(3) *= 7.5;  // positive rescaling of one feature
    const auto b = csi(make_table(scaled, labels));
    EXPECT_NEAR(a[3], b[3], 1e-12);
}

TEST(Csi, SingleClassRejected) {
    Mat r = Mat::Constant(4, 2, 0.5);
    EXPECT_THROW(csi(make_table(r, {0, 0, 0, 0})), ContractError);
}

TEST(Csi, NegativeResponsesRejected) {
    Mat r = Mat::Constant(4, 2, -0.5);
    EXPECT_THROW(csi(make_table(r, {0, 0, 1, 1})), ContractError);
}

TEST(Csi, SplitHalfModeIsDeterministic) {
    Rng rng(5);
    Mat r(40, 6);
    for (long i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform();
    std::vector<int> labels(40);
    for (int i = 0; i < 40; ++i) labels[i] = i % 4;
    const auto a = csi_split_half(make_table(r, labels), 7);
    const auto b = csi_split_half(make_table(r, labels), 7);
    EXPECT_TRUE(a.isApprox(b, 0.0));
}

TEST(Cam, RawMapIsWeightedSumAndMeanMatchesScore) {
    Rng rng(6);
    Tensor4 spatial(2, 5, 3, 3);
    for (long i = 0; i < spatial.size(); ++i) spatial.data[i] = rng.uniform();
    Vec w(5);
    for (int i = 0; i < 5; ++i) w[i] = rng.uniform(-1.0, 1.0);

    const AttentionMap map = cam(spatial, 1, w);
    // mean of raw equals w . (spatial mean per channel) = pre-bias probe score
    Vec emb(5);
    for (int c = 0; c < 5; ++c) {
        double m = 0.0;
        for (int i = 0; i < 9; ++i) m += spatial.data[spatial.idx(1, c, 0, 0) + i];
        emb[c] = m / 9.0;
    }
    EXPECT_NEAR(map.raw.mean(), w.dot(emb), 1e-10);
}

TEST(Cam, LinearInWeightsBeforeNormalization) {
    Rng rng(7);
    Tensor4 spatial(1, 4, 4, 4);
    for (long i = 0; i < spatial.size(); ++i) spatial.data[i] = rng.uniform();
    Vec w1(4), w2(4);
    for (int i = 0; i < 4; ++i) {
        w1[i] = rng.uniform(-1.0, 1.0);
        w2[i] = rng.uniform(-1.0, 1.0);
    }
    const Mat sum_raw = cam(spatial, 0, w1 + w2).raw;
    const Mat split_raw = cam(spatial, 0, w1).raw + cam(spatial, 0, w2).raw;
    EXPECT_NEAR((sum_raw - split_raw).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Cam, ZeroWeightsGiveUniformHalf) {
    Tensor4 spatial(1, 3, 4, 4);
    spatial.data.setConstant(0.7);
    const AttentionMap map = cam(spatial, 0, Vec::Zero(3));
    EXPECT_EQ(map.upsampled.rows(), 224);
    EXPECT_NEAR((map.upsampled.array() - 0.5).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(Cam, OneHotCellSaturatesOnRawGridNormalization) {
    // 7x7 raw grid with a single hot cell: background 0 maps to sigmoid(0)=0.5,
    // hot cell maps to sigmoid(10/std) with std = sqrt(48)/49
    Tensor4 spatial(1, 1, 7, 7);
    spatial.data.setZero();
    spatial.at(0, 0, 3, 3) = 1.0;
    Vec w = Vec::Ones(1);
    CamOptions opt;
    opt.normalize_on_raw = true;
    opt.out_size = 224;
    const AttentionMap map = cam(spatial, 0, w, opt);

    const double std = std::sqrt(48.0) / 49.0;
    const double hot = 1.0 / (1.0 + std::exp(-10.0 / std));
    EXPECT_GT(hot, 0.99);
    // the hot region upsampled stays near 1; far corners stay near 0.5
    EXPECT_GT(map.upsampled(112, 112), 0.95);
    EXPECT_NEAR(map.upsampled(5, 5), 0.5, 0.05);
}

TEST(Cam, ValuesStayInUnitInterval) {
    Rng rng(8);
    Tensor4 spatial(1, 6, 4, 4);
    for (long i = 0; i < spatial.size(); ++i) spatial.data[i] = rng.uniform(-3.0, 3.0);
    Vec w(6);
    for (int i = 0; i < 6; ++i) w[i] = rng.uniform(-2.0, 2.0);
    for (bool raw_norm : {false, true}) {
        CamOptions opt;
        opt.normalize_on_raw = raw_norm;
        const AttentionMap map = cam(spatial, 0, w, opt);
        EXPECT_GE(map.upsampled.minCoeff(), 0.0);
        EXPECT_LE(map.upsampled.maxCoeff(), 1.0);
    }
}

TEST(Cam, AgreesWithProbeScoreThroughBackbone) {
    // architecture consistency: spatial mean of the raw map equals the
    // probe's pre-bias class score
    auto backbone = random_backbone("small_cnn_64", 3);
    Rng rng(9);
    Tensor4 x(1, 3, 32, 32);
    for (long i = 0; i < x.size(); ++i) x.data[i] = rng.uniform();
    const EmbedResult res = backbone->embed(x);

    Vec w(64);
    for (int i = 0; i < 64; ++i) w[i] = rng.uniform(-1.0, 1.0);
    const AttentionMap map = cam(res.spatial, 0, w);
    const double score = res.embeddings.row(0).dot(w);
    EXPECT_NEAR(map.raw.mean(), score, 1e-5);
}

TEST(MaskImage, UniformMapsScaleTheImage) {
    Rng rng(10);
    Image img(8, 8, 3);
    for (auto& v : img.data) v = rng.uniform();
    AttentionMap map;
    map.upsampled = Mat::Constant(8, 8, 1.0);
    const Image same = mask_image(img, map);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(same.data[i], img.data[i]);

    map.upsampled.setConstant(0.0);
    const Image black = mask_image(img, map);
    for (double v : black.data) EXPECT_DOUBLE_EQ(v, 0.0);

    map.upsampled.setConstant(0.5);
    const Image half = mask_image(img, map);
    for (std::size_t i = 0; i < img.size(); ++i)
        EXPECT_DOUBLE_EQ(half.data[i], 0.5 * img.data[i]);
}

TEST(MaskImage, SizeMismatchRejected) {
    Image img(8, 8, 3, 0.5);
    AttentionMap map;
    map.upsampled = Mat::Constant(4, 4, 1.0);
    EXPECT_THROW(mask_image(img, map), ContractError);
}

TEST(Pca, RankOneDataSaturatesImmediately) {
    Rng rng(11);
    Mat emb(20, 3);
    const Vec dir = Vec::Random(3).normalized();
    for (int i = 0; i < 20; ++i) emb.row(i) = rng.normal() * dir.transpose();
    const Vec curve = pca_curve(emb);
    EXPECT_NEAR(curve[0], 1.0, 1e-9);
    EXPECT_NEAR(curve[curve.size() - 1], 1.0, 1e-9);
}

TEST(Pca, TwoAxisExactRatios) {
    // sample covariance diag(3, 1): curve [0.75, 1.0]
    const double s = std::sqrt(4.5);  // 2 s^2 / 3 = 3
    const double t = std::sqrt(1.5);  // 2 t^2 / 3 = 1
    Mat emb(4, 2);
    emb << s, 0, -s, 0, 0, t, 0, -t;
    const Vec curve = pca_curve(emb);
    ASSERT_EQ(curve.size(), 2);
    EXPECT_NEAR(curve[0], 0.75, 1e-12);
    EXPECT_NEAR(curve[1], 1.0, 1e-12);
}

TEST(Pca, IsotropicGaussianIsLinear) {
    Rng rng(12);
    const int n = 20000, d = 6;
    Mat emb(n, d);
    for (long i = 0; i < emb.size(); ++i) emb.data()[i] = rng.normal();
    const Vec curve = pca_curve(emb);
    ASSERT_EQ(curve.size(), d);
    for (int k = 0; k < d; ++k) EXPECT_NEAR(curve[k], (k + 1.0) / d, 0.02);
}

TEST(Pca, MonotoneTerminalAndRotationInvariant) {
    Rng rng(13);
    const int n = 50, d = 8;
    Mat emb(n, d);
    for (long i = 0; i < emb.size(); ++i) emb.data()[i] = rng.normal();
    const Vec curve = pca_curve(emb);
    for (long i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i], curve[i - 1] - 1e-12);
    EXPECT_NEAR(curve[curve.size() - 1], 1.0, 1e-9);

    // random orthogonal rotation via QR
    Mat g(d, d);
    for (long i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();
    const Vec rotated = pca_curve(emb * q);
    EXPECT_NEAR((curve - rotated).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(Pca, WideMatrixUsesGramPathAndStaysExact) {
    Rng rng(14);
    const int n = 10, d = 50;  // d > n triggers the Gram branch
    Mat emb(n, d);
    for (long i = 0; i < emb.size(); ++i) emb.data()[i] = rng.normal();
    const Vec curve = pca_curve(emb);
    ASSERT_EQ(curve.size(), n - 1);
    EXPECT_NEAR(curve[curve.size() - 1], 1.0, 1e-9);
    for (long i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i], curve[i - 1] - 1e-12);
}

TEST(Pca, DegenerateInputsRejected) {
    EXPECT_THROW(pca_curve(Mat::Zero(1, 3)), ContractError);
    EXPECT_THROW(pca_curve(Mat::Constant(10, 3, 0.4)), NumericError);
}

TEST(TopActivating, SelectiveFeatureDominatesTopK) {
    Rng rng(15);
    const int n = 200;
    Mat r(n, 2);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[i] = i % 4;
        r(i, 0) = labels[i] == 2 ? 5.0 + rng.uniform() : rng.uniform();
        r(i, 1) = rng.uniform();
    }
    const auto table = make_table(r, labels);
    const auto top = top_activating_images(table, 0, 150, 10, 17);
    ASSERT_EQ(top.size(), 10u);
    for (std::size_t row : top) EXPECT_EQ(labels[row], 2);
}

TEST(TopActivating, ConstantFeatureIsStableAcrossRuns) {
    Mat r = Mat::Constant(50, 1, 0.3);
    std::vector<int> labels(50, 0);
    labels[0] = 1;  // validity needs nothing here; table tolerates any labels
    const auto table = make_table(r, labels);
    const auto a = top_activating_images(table, 0, 20, 5, 3);
    const auto b = top_activating_images(table, 0, 20, 5, 3);
    EXPECT_EQ(a, b);
}

TEST(TopActivating, FullSampleReturnsSortedSample) {
    Rng rng(16);
    Mat r(30, 1);
    for (int i = 0; i < 30; ++i) r(i, 0) = rng.uniform();
    std::vector<int> labels(30, 0);
    const auto table = make_table(r, labels);
    const auto all = top_activating_images(table, 0, 30, 30, 5);
    ASSERT_EQ(all.size(), 30u);
    for (std::size_t i = 1; i < all.size(); ++i)
        EXPECT_GE(r(static_cast<long>(all[i - 1]), 0), r(static_cast<long>(all[i]), 0));
}
