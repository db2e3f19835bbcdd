#ifndef TIV_PROBE_HPP
#define TIV_PROBE_HPP

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "tiv/adam.hpp"
#include "tiv/embedding.hpp"
#include "tiv/errors.hpp"
#include "tiv/losses.hpp"
#include "tiv/nn.hpp"
#include "tiv/rng.hpp"

namespace tiv {

enum class ProbeFamily { multinomial_logistic, linear_hinge };

inline std::string probe_family_name(ProbeFamily f) {
    return f == ProbeFamily::multinomial_logistic ? "multinomial_logistic" : "linear_hinge";
}

inline ProbeFamily probe_family_from_name(const std::string& s) {
    if (s == "multinomial_logistic" || s == "logistic") return ProbeFamily::multinomial_logistic;
    if (s == "linear_hinge" || s == "hinge") return ProbeFamily::linear_hinge;
    throw ConfigError("unknown probe family '" + s + "'");
}

struct ProbeConfig {
    ProbeFamily family = ProbeFamily::multinomial_logistic;
    // gradient-trained logistic readout
    double lr = 0.0005;
    int epochs = 20;
    int batch = 1024;
    // hinge-loss SGD classifier
    double alpha = 1e-4;
    int max_iter = 250;
    std::uint64_t seed = 0;

    void validate() const {
        if (lr <= 0.0 || epochs < 1 || batch < 1)
            throw ConfigError("probe: logistic hyperparameters must be positive");
        if (alpha <= 0.0 || max_iter < 1)
            throw ConfigError("probe: hinge hyperparameters must be positive");
    }
};

// Linear map D -> C with bias. Columns correspond to class_ids, ascending.
struct LinearClassifier {
    nn::Mat weights;  // D x C
    nn::Vec bias;     // C
    std::vector<int> class_ids;

    nn::Mat scores(const nn::Mat& embeddings) const {
        nn::Mat s = embeddings * weights;
        s.rowwise() += bias.transpose();
        return s;
    }

    // argmax with ties resolved to the lowest class index
    std::vector<int> predict(const nn::Mat& embeddings) const {
        const nn::Mat s = scores(embeddings);
        std::vector<int> out(static_cast<std::size_t>(s.rows()));
        for (long i = 0; i < s.rows(); ++i) {
            long best = 0;
            for (long c = 1; c < s.cols(); ++c)
                if (s(i, c) > s(i, best)) best = c;
            out[static_cast<std::size_t>(i)] = class_ids[static_cast<std::size_t>(best)];
        }
        return out;
    }
};

namespace probe_detail {

inline std::vector<int> distinct_sorted_labels(const std::vector<int>& labels) {
    std::vector<int> classes = labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

inline LinearClassifier fit_logistic(const EmbeddingSet& train, const ProbeConfig& cfg) {
    const auto classes = distinct_sorted_labels(train.labels);
    const long c = static_cast<long>(classes.size());
    const long d = train.dim();
    std::map<int, int> to_col;
    for (long i = 0; i < c; ++i) to_col[classes[static_cast<std::size_t>(i)]] = static_cast<int>(i);

    nn::Linear head(static_cast<int>(d), static_cast<int>(c));
    // zero init: the objective is convex, so the start only shifts the path
    nn::ParamRefs params = head.params("probe");
    Adam adam(params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

    std::vector<std::size_t> order(static_cast<std::size_t>(train.n()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng = Rng::stream(cfg.seed, 0x70726f62u, static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch);
            nn::Mat x(static_cast<long>(end - begin), d);
            std::vector<int> y(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                x.row(static_cast<long>(i - begin)) =
                    train.embeddings.row(static_cast<long>(order[i]));
                y[i - begin] = to_col[train.labels[order[i]]];
            }
            nn::zero_grads(params);
            const nn::Mat logits = head.forward(x, true);
            const ClassificationLoss loss = softmax_cross_entropy(logits, y);
            head.backward(loss.grad_logits);
            adam.step();
        }
    }

    LinearClassifier clf;
    clf.class_ids = classes;
    clf.weights = Eigen::Map<const nn::Mat>(head.weight.v.data(), d, c);
    clf.bias = head.bias.v;
    return clf;
}

// One-vs-rest hinge loss with L2 penalty. SGD with eta_t = 1/(alpha (t0+t)),
// t0 = 1/alpha so early steps are O(1), reporting the average of the
// iterates, which converges where the raw iterate keeps jittering. Bias is
// unregularized.
inline LinearClassifier fit_hinge(const EmbeddingSet& train, const ProbeConfig& cfg) {
    const auto classes = distinct_sorted_labels(train.labels);
    const long c = static_cast<long>(classes.size());
    const long d = train.dim();
    std::map<int, int> to_col;
    for (long i = 0; i < c; ++i) to_col[classes[static_cast<std::size_t>(i)]] = static_cast<int>(i);

    nn::Mat w = nn::Mat::Zero(d, c);
    nn::Vec b = nn::Vec::Zero(c);
    nn::Mat w_sum = nn::Mat::Zero(d, c);
    nn::Vec b_sum = nn::Vec::Zero(c);
    std::vector<std::size_t> order(static_cast<std::size_t>(train.n()));
    std::iota(order.begin(), order.end(), std::size_t{0});

    const double t0 = 1.0 / cfg.alpha;
    long t = 0;
    for (int epoch = 0; epoch < cfg.max_iter; ++epoch) {
        Rng rng = Rng::stream(cfg.seed, 0x68696e67u, static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (cfg.alpha * (t0 + static_cast<double>(t)));
            const auto x = train.embeddings.row(static_cast<long>(i));
            const int yi = to_col[train.labels[i]];
            const double shrink = std::max(0.0, 1.0 - eta * cfg.alpha);
            for (long cls = 0; cls < c; ++cls) {
                const double y = cls == yi ? 1.0 : -1.0;
                const double margin = y * (x.dot(w.col(cls)) + b[cls]);
                w.col(cls) *= shrink;
                if (margin < 1.0) {
                    w.col(cls) += eta * y * x.transpose();
                    b[cls] += eta * y;
                }
            }
        }
        w_sum += w;
        b_sum += b;
    }

    LinearClassifier clf;
    clf.class_ids = classes;
    clf.weights = w_sum / static_cast<double>(cfg.max_iter);
    clf.bias = b_sum / static_cast<double>(cfg.max_iter);
    return clf;
}

}  // namespace probe_detail

// Linear readout on frozen embeddings. Deterministic given (set, config, seed).
inline LinearClassifier fit_probe(const EmbeddingSet& train, const ProbeConfig& cfg) {
    cfg.validate();
    train.validate();
    if (probe_detail::distinct_sorted_labels(train.labels).size() < 2)
        throw DataError("fit_probe: training set has fewer than 2 classes");
    return cfg.family == ProbeFamily::multinomial_logistic
               ? probe_detail::fit_logistic(train, cfg)
               : probe_detail::fit_hinge(train, cfg);
}

inline double top1_accuracy(const LinearClassifier& clf, const EmbeddingSet& test) {
    if (test.n() == 0) throw ContractError("top1_accuracy: empty test set");
    const auto pred = clf.predict(test.embeddings);
    long correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == test.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

inline double majority_baseline(const std::vector<int>& labels) {
    if (labels.empty()) throw ContractError("majority_baseline: empty labels");
    std::map<int, long> counts;
    for (int l : labels) ++counts[l];
    long best = 0;
    for (const auto& [l, n] : counts) best = std::max(best, n);
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

// Restriction to two classes with labels remapped to {0, 1}.
inline EmbeddingSet binary_task(const EmbeddingSet& set, const std::string& class_a,
                                const std::string& class_b) {
    if (class_a == class_b) throw ConfigError("binary_task: classes must differ");
    const auto find_id = [&set](const std::string& name) {
        const auto it = std::find(set.label_vocab.begin(), set.label_vocab.end(), name);
        if (it == set.label_vocab.end())
            throw DataError("binary_task: class '" + name + "' not present");
        return static_cast<int>(it - set.label_vocab.begin());
    };
    const int id_a = find_id(class_a);
    const int id_b = find_id(class_b);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < set.labels.size(); ++i)
        if (set.labels[i] == id_a || set.labels[i] == id_b) keep.push_back(i);
    if (keep.empty()) throw DataError("binary_task: no frames in either class");

    EmbeddingSet out = set.select(keep);
    for (auto& l : out.labels) l = (l == id_a) ? 0 : 1;
    out.label_vocab = {class_a, class_b};
    return out;
}

}  // namespace tiv

#endif
