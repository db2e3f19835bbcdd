#ifndef TIV_EMBEDDING_HPP
#define TIV_EMBEDDING_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiv/augment.hpp"
#include "tiv/backbone.hpp"
#include "tiv/errors.hpp"
#include "tiv/hog.hpp"
#include "tiv/image.hpp"
#include "tiv/manifest.hpp"
#include "tiv/nn.hpp"

namespace tiv {

// Embeddings aligned with labels: the substrate probes and analysis run on.
struct EmbeddingSet {
    nn::Mat embeddings;  // N x D
    std::vector<int> labels;
    std::vector<std::string> label_vocab;   // label id -> name
    std::vector<std::string> exemplar_ids;  // empty vector = absent
    std::vector<std::int64_t> frame_ids;
    std::string source;  // checkpoint id or baseline name

    long n() const { return embeddings.rows(); }
    long dim() const { return embeddings.cols(); }
    bool has_exemplars() const { return !exemplar_ids.empty(); }

    void validate() const {
        const auto rows = static_cast<std::size_t>(embeddings.rows());
        if (labels.size() != rows || frame_ids.size() != rows)
            throw ContractError("embedding set: field row counts disagree");
        if (!exemplar_ids.empty() && exemplar_ids.size() != rows)
            throw ContractError("embedding set: exemplar_ids row count mismatch");
        if (!embeddings.allFinite())
            throw ContractError("embedding set: non-finite embedding values");
    }

    EmbeddingSet select(const std::vector<std::size_t>& idx) const {
        EmbeddingSet out;
        out.embeddings = nn::Mat(static_cast<long>(idx.size()), embeddings.cols());
        out.labels.reserve(idx.size());
        out.frame_ids.reserve(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.embeddings.row(static_cast<long>(i)) = embeddings.row(static_cast<long>(idx[i]));
            out.labels.push_back(labels[idx[i]]);
            out.frame_ids.push_back(frame_ids[idx[i]]);
            if (!exemplar_ids.empty()) out.exemplar_ids.push_back(exemplar_ids[idx[i]]);
        }
        out.label_vocab = label_vocab;
        out.source = source;
        return out;
    }
};

// Maps manifest label strings to dense ids, vocabulary sorted for determinism.
inline std::pair<std::vector<int>, std::vector<std::string>> labels_from_manifest(
    const Manifest& manifest) {
    std::map<std::string, int> ids;
    for (const auto& e : manifest.entries)
        if (e.label) ids.emplace(*e.label, 0);
    std::vector<std::string> vocab;
    vocab.reserve(ids.size());
    for (auto& [name, id] : ids) {
        id = static_cast<int>(vocab.size());
        vocab.push_back(name);
    }
    std::vector<int> labels;
    labels.reserve(manifest.size());
    for (const auto& e : manifest.entries) labels.push_back(e.label ? ids[*e.label] : -1);
    return {labels, vocab};
}

// Frozen-trunk embedding extraction. Frames must already be preprocessed and
// normalized; extraction runs embed() on worker-local clones so parallelism
// cannot reorder floating-point work within a batch.
inline nn::Mat extract_embedding_matrix(const Backbone& backbone,
                                        const std::vector<Image>& frames, int batch_size = 256,
                                        int workers = 1) {
    if (frames.empty()) return nn::Mat(0, backbone.clone()->embedding_dim());
    const int d = backbone.clone()->embedding_dim();
    nn::Mat out(static_cast<long>(frames.size()), d);

    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t begin = 0; begin < frames.size(); begin += batch_size)
        ranges.emplace_back(begin, std::min(frames.size(), begin + batch_size));

    const auto run_range = [&](std::size_t lo, std::size_t hi) {
        auto local = backbone.clone();
        const Image& first = frames[lo];
        nn::Tensor4 batch(static_cast<int>(hi - lo), first.channels, first.height, first.width);
        for (std::size_t i = lo; i < hi; ++i)
            std::copy(frames[i].data.begin(), frames[i].data.end(),
                      batch.data.data() + static_cast<long>(i - lo) * frames[i].size());
        const EmbedResult res = local->embed(batch);
        if (res.embeddings.cols() != d)
            throw ContractError("extract_embeddings: backbone dimension mismatch");
        out.middleRows(static_cast<long>(lo), static_cast<long>(hi - lo)) = res.embeddings;
    };

    if (workers <= 1) {
        for (const auto& [lo, hi] : ranges) run_range(lo, hi);
    } else {
        std::vector<std::future<void>> tasks;
        std::size_t next = 0;
        while (next < ranges.size() || !tasks.empty()) {
            while (next < ranges.size() && tasks.size() < static_cast<std::size_t>(workers)) {
                const auto [lo, hi] = ranges[next++];
                tasks.push_back(std::async(std::launch::async, run_range, lo, hi));
            }
            tasks.front().get();
            tasks.erase(tasks.begin());
        }
    }
    return out;
}

inline EmbeddingSet extract_embeddings(const Backbone& backbone, const Manifest& manifest,
                                       const std::vector<Image>& normalized_frames,
                                       const std::string& source, int batch_size = 256,
                                       int workers = 1) {
    if (manifest.size() != normalized_frames.size())
        throw ContractError("extract_embeddings: manifest/frame count mismatch");
    EmbeddingSet set;
    set.embeddings = extract_embedding_matrix(backbone, normalized_frames, batch_size, workers);
    auto [labels, vocab] = labels_from_manifest(manifest);
    set.labels = std::move(labels);
    set.label_vocab = std::move(vocab);
    set.source = source;
    for (const auto& e : manifest.entries) {
        set.frame_ids.push_back(e.frame_id);
        if (e.exemplar_id) set.exemplar_ids.push_back(*e.exemplar_id);
    }
    if (!set.exemplar_ids.empty() && set.exemplar_ids.size() != manifest.size())
        throw DataError("extract_embeddings: exemplar ids present on only some frames");
    set.validate();
    return set;
}

// HOG runs on raw [0,1] pixels, not normalized tensors.
inline EmbeddingSet extract_hog_embeddings(const Manifest& manifest,
                                           const std::vector<Image>& frames,
                                           const HogConfig& cfg = {}) {
    if (manifest.size() != frames.size())
        throw ContractError("extract_hog_embeddings: manifest/frame count mismatch");
    EmbeddingSet set;
    set.source = "hog";
    const long d = frames.empty() ? 0 : hog_feature_length(frames[0].height, frames[0].width, cfg);
    set.embeddings = nn::Mat(static_cast<long>(frames.size()), d);
    for (std::size_t i = 0; i < frames.size(); ++i)
        set.embeddings.row(static_cast<long>(i)) = hog_features(frames[i], cfg).transpose();
    auto [labels, vocab] = labels_from_manifest(manifest);
    set.labels = std::move(labels);
    set.label_vocab = std::move(vocab);
    for (const auto& e : manifest.entries) {
        set.frame_ids.push_back(e.frame_id);
        if (e.exemplar_id) set.exemplar_ids.push_back(*e.exemplar_id);
    }
    set.validate();
    return set;
}

// --- EmbeddingSet container file ---------------------------------------------
//   magic "TIVEMB01" | u32 major | u32 minor | u64 meta_len | meta json
//   row-major little-endian f64 matrix blob

namespace embedding_detail {
constexpr char kMagic[8] = {'T', 'I', 'V', 'E', 'M', 'B', '0', '1'};
constexpr std::uint32_t kMajor = 1;
}  // namespace embedding_detail

inline void save_embeddings(const EmbeddingSet& set, const std::string& path) {
    set.validate();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_embeddings: cannot open " + path);
    nlohmann::json meta = {
        {"n", set.n()},       {"d", set.dim()},
        {"source", set.source}, {"label_vocab", set.label_vocab},
        {"labels", set.labels}, {"frame_ids", set.frame_ids},
        {"exemplar_ids", set.exemplar_ids},
    };
    const std::string meta_str = meta.dump();
    f.write(embedding_detail::kMagic, 8);
    const std::uint32_t major = embedding_detail::kMajor, minor = 0;
    f.write(reinterpret_cast<const char*>(&major), 4);
    f.write(reinterpret_cast<const char*>(&minor), 4);
    const std::uint64_t len = meta_str.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (long i = 0; i < set.embeddings.rows(); ++i) {
        Eigen::RowVectorXd row = set.embeddings.row(i);
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    if (!f) throw DataError("save_embeddings: short write to " + path);
}

inline EmbeddingSet load_embeddings(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_embeddings: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, embedding_detail::kMagic, 8) != 0)
        throw DataError("load_embeddings: not an embedding file: " + path);
    std::uint32_t major = 0, minor = 0;
    f.read(reinterpret_cast<char*>(&major), 4);
    f.read(reinterpret_cast<char*>(&minor), 4);
    if (major != embedding_detail::kMajor)
        throw DataError("load_embeddings: unsupported version in " + path);
    std::uint64_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 8);
    std::string meta_str(len, '\0');
    f.read(meta_str.data(), static_cast<std::streamsize>(len));
    if (!f) throw DataError("load_embeddings: truncated metadata in " + path);

    EmbeddingSet set;
    try {
        const auto meta = nlohmann::json::parse(meta_str);
        const long n = meta.at("n").get<long>();
        const long d = meta.at("d").get<long>();
        set.source = meta.at("source").get<std::string>();
        set.label_vocab = meta.at("label_vocab").get<std::vector<std::string>>();
        set.labels = meta.at("labels").get<std::vector<int>>();
        set.frame_ids = meta.at("frame_ids").get<std::vector<std::int64_t>>();
        set.exemplar_ids = meta.at("exemplar_ids").get<std::vector<std::string>>();
        set.embeddings = nn::Mat(n, d);
        for (long i = 0; i < n; ++i) {
            Eigen::RowVectorXd row(d);
            f.read(reinterpret_cast<char*>(row.data()),
                   static_cast<std::streamsize>(d * sizeof(double)));
            set.embeddings.row(i) = row;
        }
        if (!f) throw DataError("load_embeddings: truncated matrix in " + path);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("load_embeddings: malformed metadata in " + path + ": " + e.what());
    }
    set.validate();
    return set;
}

}  // namespace tiv

#endif
