#include <gtest/gtest.h>

#include <cmath>

#include "tiv/probe.hpp"
#include "tiv/rng.hpp"
#include "tiv/split.hpp"

using namespace tiv;
using nn::Mat;

namespace {

EmbeddingSet make_set(const Mat& emb, const std::vector<int>& labels,
                      std::vector<std::string> vocab = {}) {
    EmbeddingSet s;
    s.embeddings = emb;
    s.labels = labels;
    s.label_vocab = std::move(vocab);
    s.frame_ids.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) s.frame_ids[i] = static_cast<long>(i);
    s.source = "test";
    return s;
}

// two well-separated 2-D clusters
EmbeddingSet separable_toy(int per_class, double scale, std::uint64_t seed) {
    Rng rng(seed);
    Mat emb(2 * per_class, 2);
    std::vector<int> labels(2 * per_class);
    for (int i = 0; i < per_class; ++i) {
        emb(i, 0) = scale * (2.0 + 0.3 * rng.normal());
        emb(i, 1) = scale * (0.5 * rng.normal());
        labels[i] = 0;
        emb(per_class + i, 0) = scale * (-2.0 + 0.3 * rng.normal());
        emb(per_class + i, 1) = scale * (0.5 * rng.normal());
        labels[per_class + i] = 1;
    }
    return make_set(emb, labels);
}

}  // namespace

TEST(Probe, SeparableToyReachesPerfectTrainAccuracy) {
    const EmbeddingSet toy = separable_toy(50, 1.0, 1);
    for (ProbeFamily family : {ProbeFamily::multinomial_logistic, ProbeFamily::linear_hinge}) {
        ProbeConfig cfg;
        cfg.family = family;
        cfg.batch = 16;
        const LinearClassifier clf = fit_probe(toy, cfg);
        EXPECT_DOUBLE_EQ(top1_accuracy(clf, toy), 1.0) << probe_family_name(family);
    }
}

TEST(Probe, ShuffledLabelsGiveChanceAccuracy) {
    Rng rng(2);
    const int classes = 26, per_class = 80;
    const int n = classes * per_class;
    Mat emb(n, 8);
    for (long i = 0; i < emb.size(); ++i) emb.data()[i] = rng.normal();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % classes;  // balanced
    Rng shuffle_rng(3);
    shuffle_rng.shuffle(labels);  // break any embedding-label association
    EmbeddingSet set = make_set(emb, labels);

    SplitSpec split_spec;
    split_spec.stratified = false;
    const SplitResult parts = split(n, &set.labels, nullptr, split_spec);
    ProbeConfig cfg;
    cfg.batch = 256;
    const LinearClassifier clf = fit_probe(set.select(parts.train_indices), cfg);
    const double acc = top1_accuracy(clf, set.select(parts.test_indices));

    const double p = 1.0 / classes;
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(parts.test_indices.size()));
    EXPECT_NEAR(acc, p, 3.0 * sigma);
}

TEST(Probe, DuplicatingTrainingPointsKeepsDecisions) {
    const EmbeddingSet toy = separable_toy(30, 1.0, 4);
    EmbeddingSet doubled = toy;
    doubled.embeddings = Mat(2 * toy.n(), toy.dim());
    doubled.embeddings << toy.embeddings, toy.embeddings;
    doubled.labels = toy.labels;
    doubled.labels.insert(doubled.labels.end(), toy.labels.begin(), toy.labels.end());
    doubled.frame_ids.resize(doubled.labels.size());

    // duplication leaves the mean-loss objective unchanged; with a
    // well-conditioned penalty both runs land on the same optimum
    ProbeConfig cfg;
    cfg.family = ProbeFamily::linear_hinge;
    cfg.alpha = 1e-2;
    const LinearClassifier a = fit_probe(toy, cfg);
    const LinearClassifier b = fit_probe(doubled, cfg);

    // compare predictions over a probe grid
    Rng rng(5);
    Mat grid(200, 2);
    for (long i = 0; i < grid.size(); ++i) grid.data()[i] = rng.uniform(-4.0, 4.0);
    EXPECT_EQ(a.predict(grid), b.predict(grid));
}

TEST(Probe, DeterministicGivenSeed) {
    const EmbeddingSet toy = separable_toy(40, 1.0, 6);
    ProbeConfig cfg;
    cfg.seed = 11;
    const LinearClassifier a = fit_probe(toy, cfg);
    const LinearClassifier b = fit_probe(toy, cfg);
    EXPECT_TRUE(a.weights.isApprox(b.weights, 0.0));
    EXPECT_TRUE(a.bias.isApprox(b.bias, 0.0));
    EXPECT_NEAR(top1_accuracy(a, toy), top1_accuracy(b, toy), 1e-12);
}

TEST(Probe, HingeSurvivesPositiveRescaling) {
    const EmbeddingSet toy = separable_toy(50, 1.0, 7);
    EmbeddingSet scaled = toy;
    scaled.embeddings *= 1000.0;
    ProbeConfig cfg;
    cfg.family = ProbeFamily::linear_hinge;
    const LinearClassifier a = fit_probe(toy, cfg);
    const LinearClassifier b = fit_probe(scaled, cfg);
    EXPECT_DOUBLE_EQ(top1_accuracy(a, toy), 1.0);
    EXPECT_DOUBLE_EQ(top1_accuracy(b, scaled), 1.0);
}

TEST(Probe, SingleClassTrainSetRejected) {
    Mat emb = Mat::Random(10, 3);
    const EmbeddingSet set = make_set(emb, std::vector<int>(10, 0));
    EXPECT_THROW(fit_probe(set, ProbeConfig{}), DataError);
}

TEST(Probe, TrainAccuracyBeatsMajorityFloor) {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 120;
        Mat emb(n, 6);
        for (long i = 0; i < emb.size(); ++i) emb.data()[i] = rng.normal();
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.uniform_index(4));
        if (std::set<int>(labels.begin(), labels.end()).size() < 2) continue;
        const EmbeddingSet set = make_set(emb, labels);
        const LinearClassifier clf = fit_probe(set, ProbeConfig{});
        EXPECT_GE(top1_accuracy(clf, set), majority_baseline(labels) - 0.02);
    }
}

TEST(Majority, Examples) {
    EXPECT_NEAR(majority_baseline({0, 0, 1}), 2.0 / 3.0, 1e-12);
    std::vector<int> balanced;
    for (int c = 0; c < 26; ++c)
        for (int i = 0; i < 10; ++i) balanced.push_back(c);
    EXPECT_NEAR(majority_baseline(balanced), 1.0 / 26.0, 1e-12);
    EXPECT_DOUBLE_EQ(majority_baseline({5, 5, 5}), 1.0);
    EXPECT_THROW(majority_baseline({}), ContractError);
}

TEST(Top1, ConstantClassifierOnBalancedData) {
    const int c = 5, per = 10;
    Mat emb = Mat::Zero(c * per, 3);
    std::vector<int> labels;
    for (int k = 0; k < c; ++k)
        for (int i = 0; i < per; ++i) labels.push_back(k);
    EmbeddingSet set = make_set(emb, labels);

    LinearClassifier clf;
    clf.weights = Mat::Zero(3, c);
    clf.bias = nn::Vec::Zero(c);
    clf.bias[0] = 1.0;  // always predicts class 0
    clf.class_ids = {0, 1, 2, 3, 4};
    EXPECT_NEAR(top1_accuracy(clf, set), 1.0 / c, 1e-12);
}

TEST(Top1, EmptyTestRejected) {
    LinearClassifier clf;
    clf.weights = Mat::Zero(3, 2);
    clf.bias = nn::Vec::Zero(2);
    clf.class_ids = {0, 1};
    EmbeddingSet set = make_set(Mat(0, 3), {});
    EXPECT_THROW(top1_accuracy(clf, set), ContractError);
}

TEST(BinaryTask, FiltersAndRemaps) {
    Mat emb = Mat::Random(9, 2);
    const std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1, 2};
    const EmbeddingSet set = make_set(emb, labels, {"car", "road", "door"});
    const EmbeddingSet sub = binary_task(set, "car", "road");
    EXPECT_EQ(sub.n(), 6);
    for (int l : sub.labels) EXPECT_TRUE(l == 0 || l == 1);
    EXPECT_EQ(sub.label_vocab, (std::vector<std::string>{"car", "road"}));
    // counts preserved
    EXPECT_EQ(std::count(sub.labels.begin(), sub.labels.end(), 0), 3);
    EXPECT_EQ(std::count(sub.labels.begin(), sub.labels.end(), 1), 3);
}

TEST(BinaryTask, ErrorsNameTheMissingClass) {
    const EmbeddingSet set =
        make_set(Mat::Random(4, 2), {0, 0, 1, 1}, {"foot", "hand"});
    EXPECT_THROW(binary_task(set, "foot", "foot"), ConfigError);
    try {
        binary_task(set, "foot", "chair");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("chair"), std::string::npos);
    }
}

TEST(Extraction, DuplicateFramesGiveIdenticalRows) {
    auto backbone = random_backbone("small_cnn_64", 5);
    Manifest m;
    m.fps = 1.0;
    std::vector<Image> frames;
    Rng rng(6);
    Image img(16, 16, 3);
    for (auto& v : img.data) v = rng.uniform();
    for (int i = 0; i < 3; ++i) {
        FrameRecord e;
        e.frame_id = i;
        e.recording_id = "r";
        e.timestamp_s = i;
        m.entries.push_back(e);
        frames.push_back(img);  // same frame three times
    }
    const EmbeddingSet set = extract_embeddings(*backbone, m, frames, "dup");
    EXPECT_TRUE(set.embeddings.row(0).isApprox(set.embeddings.row(1), 0.0));
    EXPECT_TRUE(set.embeddings.row(0).isApprox(set.embeddings.row(2), 0.0));
}

TEST(Extraction, EmptySetIsValid) {
    auto backbone = random_backbone("small_cnn_64", 5);
    Manifest m;
    m.fps = 1.0;
    const EmbeddingSet set = extract_embeddings(*backbone, m, {}, "empty");
    EXPECT_EQ(set.n(), 0);
    EXPECT_EQ(set.dim(), 64);
}

TEST(Extraction, ParallelWorkersMatchSerial) {
    auto backbone = random_backbone("small_cnn_64", 7);
    Rng rng(8);
    std::vector<Image> frames;
    Manifest m;
    m.fps = 1.0;
    for (int i = 0; i < 40; ++i) {
        Image img(16, 16, 3);
        for (auto& v : img.data) v = rng.uniform();
        frames.push_back(std::move(img));
        FrameRecord e;
        e.frame_id = i;
        e.recording_id = "r";
        e.timestamp_s = i;
        m.entries.push_back(e);
    }
    const nn::Mat serial = extract_embedding_matrix(*backbone, frames, 8, 1);
    const nn::Mat parallel = extract_embedding_matrix(*backbone, frames, 8, 2);
    EXPECT_TRUE(serial.isApprox(parallel, 0.0));
}

TEST(Extraction, HogSourceHasReferenceDimension) {
    Manifest m;
    m.fps = 1.0;
    std::vector<Image> frames;
    Rng rng(9);
    for (int i = 0; i < 2; ++i) {
        Image img(224, 224, 3);
        for (auto& v : img.data) v = rng.uniform();
        frames.push_back(std::move(img));
        FrameRecord e;
        e.frame_id = i;
        e.recording_id = "r";
        e.timestamp_s = i;
        e.label = i == 0 ? "a" : "b";
        m.entries.push_back(e);
    }
    const EmbeddingSet set = extract_hog_embeddings(m, frames);
    EXPECT_EQ(set.dim(), 11664);
    EXPECT_EQ(set.source, "hog");
}
