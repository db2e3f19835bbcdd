#ifndef TIV_ANALYSIS_HPP
#define TIV_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"
#include "tiv/nn.hpp"
#include "tiv/resize.hpp"
#include "tiv/rng.hpp"

namespace tiv {

// Spatially averaged activations for one layer: one value per feature per
// image, the substrate of the selectivity analysis.
struct FeatureResponseTable {
    nn::Mat responses;  // N x F, non-negative (post-nonlinearity)
    std::vector<int> labels;
    std::string layer_id;

    void validate() const {
        if (static_cast<long>(labels.size()) != responses.rows())
            throw ContractError("response table: label count mismatch");
        if (!responses.allFinite())
            throw ContractError("response table: non-finite responses");
        if ((responses.array() < -1e-12).any())
            throw ContractError("response table: responses must be non-negative");
    }

    std::vector<int> distinct_classes() const {
        std::vector<int> classes = labels;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        return classes;
    }
};

namespace analysis_detail {

// per-feature class means over the given rows
inline std::map<int, Eigen::RowVectorXd> class_means(const FeatureResponseTable& table,
                                                     const std::vector<std::size_t>& rows) {
    std::map<int, std::pair<Eigen::RowVectorXd, long>> acc;
    for (std::size_t r : rows) {
        auto it = acc.find(table.labels[r]);
        if (it == acc.end())
            it = acc.emplace(table.labels[r],
                             std::make_pair(Eigen::RowVectorXd::Zero(table.responses.cols()), 0L))
                     .first;
        it->second.first += table.responses.row(static_cast<long>(r));
        it->second.second += 1;
    }
    std::map<int, Eigen::RowVectorXd> means;
    for (auto& [cls, pair] : acc) means[cls] = pair.first / static_cast<double>(pair.second);
    return means;
}

inline Eigen::VectorXd csi_impl(const FeatureResponseTable& table,
                                const std::vector<std::size_t>& argmax_rows,
                                const std::vector<std::size_t>& value_rows) {
    const long f = table.responses.cols();
    const auto means = class_means(table, argmax_rows);
    if (means.size() < 2) throw ContractError("csi: need at least 2 classes");

    Eigen::VectorXd out(f);
    for (long feat = 0; feat < f; ++feat) {
        // most-activating class from the argmax rows
        int best_class = means.begin()->first;
        double best_mean = means.begin()->second[feat];
        for (const auto& [cls, mean] : means)
            if (mean[feat] > best_mean) {
                best_mean = mean[feat];
                best_class = cls;
            }
        // mu_max over the best class's value rows, mu_rest pooled over all others
        double max_sum = 0.0, rest_sum = 0.0;
        long max_n = 0, rest_n = 0;
        for (std::size_t r : value_rows) {
            const double v = table.responses(static_cast<long>(r), feat);
            if (table.labels[r] == best_class) {
                max_sum += v;
                ++max_n;
            } else {
                rest_sum += v;
                ++rest_n;
            }
        }
        const double mu_max = max_n ? max_sum / static_cast<double>(max_n) : 0.0;
        const double mu_rest = rest_n ? rest_sum / static_cast<double>(rest_n) : 0.0;
        const double denom = mu_max + mu_rest;
        out[feat] = denom != 0.0 ? (mu_max - mu_rest) / denom : 0.0;
    }
    return out;
}

}  // namespace analysis_detail

// Class selectivity index per feature: (mu_max - mu_rest) / (mu_max + mu_rest)
// with mu_max the mean response over the most-activating class and mu_rest
// the mean over every other class's images; 0 when both vanish.
inline Eigen::VectorXd csi(const FeatureResponseTable& table) {
    table.validate();
    std::vector<std::size_t> all(static_cast<std::size_t>(table.responses.rows()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    return analysis_detail::csi_impl(table, all, all);
}

// Split-half variant: the most-activating class is chosen on one half of the
// images and the index is computed on the other, removing the selection bias
// of reusing the same images twice.
inline Eigen::VectorXd csi_split_half(const FeatureResponseTable& table, std::uint64_t seed) {
    table.validate();
    std::vector<std::size_t> rows(static_cast<std::size_t>(table.responses.rows()));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, 0x637369u);
    rng.shuffle(rows);
    const std::size_t half = rows.size() / 2;
    std::vector<std::size_t> a(rows.begin(), rows.begin() + static_cast<long>(half));
    std::vector<std::size_t> b(rows.begin() + static_cast<long>(half), rows.end());
    return analysis_detail::csi_impl(table, a, b);
}

struct AttentionMap {
    nn::Mat raw;        // h x w class-weighted sum of spatial maps
    nn::Mat upsampled;  // out_size x out_size in [0,1]
    int class_id = -1;
    std::int64_t image_id = -1;
};

struct CamOptions {
    int out_size = 224;
    double amplification = 10.0;
    double std_floor = 1e-8;
    // default: upsample first, then normalize by the std over the upsampled
    // pixels; the alternative normalizes on the raw grid before upsampling
    bool normalize_on_raw = false;
};

// Composite attention map: raw = sum_d w_d * feature_d, upsampled bicubically,
// divided by the pixel std, amplified, squashed by a logistic sigmoid.
// Degenerate (near-zero std) maps come back uniform 0.5.
inline AttentionMap cam(const nn::Tensor4& spatial, int image_index,
                        const Eigen::VectorXd& class_weights, const CamOptions& opt = {}) {
    if (image_index < 0 || image_index >= spatial.n)
        throw ContractError("cam: image index out of range");
    if (class_weights.size() != spatial.c)
        throw ContractError("cam: weight count does not match feature count");

    AttentionMap map;
    map.raw = nn::Mat::Zero(spatial.h, spatial.w);
    for (int d = 0; d < spatial.c; ++d)
        for (int y = 0; y < spatial.h; ++y)
            for (int x = 0; x < spatial.w; ++x)
                map.raw(y, x) += class_weights[d] * spatial.at(image_index, d, y, x);

    const auto squash = [&opt](nn::Mat m) {
        // population std over all pixels
        const double std = std::sqrt((m.array() - m.mean()).square().mean());
        if (std < opt.std_floor) {
            m.setConstant(0.5);
            return m;
        }
        m = (opt.amplification * m / std).unaryExpr(
            [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        return m;
    };

    if (opt.normalize_on_raw) {
        nn::Mat squashed = squash(map.raw);
        Image tmp(spatial.h, spatial.w, 1);
        for (int y = 0; y < spatial.h; ++y)
            for (int x = 0; x < spatial.w; ++x) tmp.at(0, y, x) = squashed(y, x);
        const Image up = resize_bicubic(tmp, opt.out_size, opt.out_size);
        map.upsampled = nn::Mat(opt.out_size, opt.out_size);
        for (int y = 0; y < opt.out_size; ++y)
            for (int x = 0; x < opt.out_size; ++x)
                map.upsampled(y, x) = std::clamp(up.at(0, y, x), 0.0, 1.0);
    } else {
        Image tmp(spatial.h, spatial.w, 1);
        for (int y = 0; y < spatial.h; ++y)
            for (int x = 0; x < spatial.w; ++x) tmp.at(0, y, x) = map.raw(y, x);
        const Image up = resize_bicubic(tmp, opt.out_size, opt.out_size);
        nn::Mat upm(opt.out_size, opt.out_size);
        for (int y = 0; y < opt.out_size; ++y)
            for (int x = 0; x < opt.out_size; ++x) upm(y, x) = up.at(0, y, x);
        map.upsampled = squash(std::move(upm));
    }
    return map;
}

// Pixelwise product of image and attention map.
inline Image mask_image(const Image& image, const AttentionMap& map) {
    if (image.height != map.upsampled.rows() || image.width != map.upsampled.cols())
        throw ContractError("mask_image: image and map sizes differ");
    Image out = image;
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                out.at(c, y, x) = image.at(c, y, x) * map.upsampled(y, x);
    return out;
}

// Cumulative variance-explained curve, length min(N-1, D). Uses the Gram
// matrix when D > N so wide embeddings (e.g. HOG) stay exact.
inline Eigen::VectorXd pca_curve(const nn::Mat& embeddings) {
    const long n = embeddings.rows();
    const long d = embeddings.cols();
    if (n < 2) throw ContractError("pca_curve: need at least 2 rows");

    nn::Mat centered = embeddings.rowwise() - embeddings.colwise().mean();
    Eigen::VectorXd eig;
    if (d <= n) {
        const nn::Mat cov = centered.transpose() * centered / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<nn::Mat> solver(cov);
        eig = solver.eigenvalues();
    } else {
        const nn::Mat gram = centered * centered.transpose() / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<nn::Mat> solver(gram);
        eig = solver.eigenvalues();
    }
    // descending, numerical negatives clamped
    std::vector<double> vals(eig.data(), eig.data() + eig.size());
    std::sort(vals.begin(), vals.end(), std::greater<>());
    for (double& v : vals) v = std::max(v, 0.0);

    const long len = std::min(n - 1, d);
    const double total = std::accumulate(vals.begin(), vals.end(), 0.0);
    if (total <= 0.0) throw NumericError("pca_curve: zero total variance (identical rows)");

    Eigen::VectorXd curve(len);
    double cum = 0.0;
    for (long i = 0; i < len; ++i) {
        cum += i < static_cast<long>(vals.size()) ? vals[static_cast<std::size_t>(i)] : 0.0;
        curve[i] = cum / total;
    }
    return curve;
}

// Seeded sample of `sample_size` images, then the top_k most activating for
// the feature, descending; ties resolve by row order so runs are stable.
inline std::vector<std::size_t> top_activating_images(const FeatureResponseTable& table,
                                                      long feature_id, std::size_t sample_size,
                                                      std::size_t top_k, std::uint64_t seed) {
    table.validate();
    if (feature_id < 0 || feature_id >= table.responses.cols())
        throw ContractError("top_activating_images: feature id out of range");
    const std::size_t n = static_cast<std::size_t>(table.responses.rows());
    sample_size = std::min(sample_size, n);

    Rng rng = Rng::stream(seed, 0x746f7061u);
    std::vector<std::size_t> sample = rng.sample_without_replacement(n, sample_size);
    std::sort(sample.begin(), sample.end());
    std::stable_sort(sample.begin(), sample.end(), [&](std::size_t a, std::size_t b) {
        return table.responses(static_cast<long>(a), feature_id) >
               table.responses(static_cast<long>(b), feature_id);
    });
    if (sample.size() > top_k) sample.resize(top_k);
    return sample;
}

}  // namespace tiv

#endif
