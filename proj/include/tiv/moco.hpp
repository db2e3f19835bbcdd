#ifndef TIV_MOCO_HPP
#define TIV_MOCO_HPP

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "tiv/backbone.hpp"
#include "tiv/errors.hpp"
#include "tiv/nn.hpp"
#include "tiv/rng.hpp"

namespace tiv {

// Replaces rows [ptr, ptr+B) mod K with the new keys and advances the
// pointer. B must not exceed the queue capacity.
inline void enqueue(nn::Mat& queue, long& queue_ptr, const nn::Mat& keys) {
    const long k = queue.rows();
    const long b = keys.rows();
    if (b > k) throw ContractError("enqueue: batch larger than queue");
    if (keys.cols() != queue.cols()) throw ContractError("enqueue: key dimension mismatch");
    if (queue_ptr < 0 || queue_ptr >= k) throw ContractError("enqueue: pointer out of range");
    for (long i = 0; i < b; ++i) queue.row((queue_ptr + i) % k) = keys.row(i);
    queue_ptr = (queue_ptr + b) % k;
}

// 2-layer projection MLP (hidden = input dim) ending in L2 normalization.
class ProjectionHead {
public:
    ProjectionHead(int in_dim, int out_dim)
        : fc1_(in_dim, in_dim), fc2_(in_dim, out_dim) {}

    void init(Rng& rng) {
        fc1_.init(rng);
        fc2_.init(rng);
    }

    nn::Mat forward(const nn::Mat& x, bool train) {
        nn::Mat h = fc1_.forward(x, train);
        h = relu_.forward(h, train);
        h = fc2_.forward(h, train);
        return norm_.forward(h, train);
    }

    nn::Mat backward(const nn::Mat& dy) {
        nn::Mat g = norm_.backward(dy);
        g = fc2_.backward(g);
        g = relu_.backward(g);
        return fc1_.backward(g);
    }

    nn::ParamRefs params(const std::string& prefix) {
        nn::ParamRefs refs = fc1_.params(prefix + ".fc1");
        auto second = fc2_.params(prefix + ".fc2");
        refs.insert(refs.end(), second.begin(), second.end());
        return refs;
    }

private:
    nn::Linear fc1_, fc2_;
    nn::DenseReLU relu_;
    nn::L2NormalizeRows norm_;
};

struct MocoConfig {
    long queue_size = 65536;  // scaled to min(queue_size, floor(N/2)) at setup
    double momentum = 0.999;
    double temperature = 0.2;
    int proj_dim = 128;
};

// Query/key encoder pair with the negative-key queue. The key side is a
// momentum copy of the query side and never receives gradients.
struct ContrastiveState {
    std::unique_ptr<Backbone> query_encoder;
    std::unique_ptr<Backbone> key_encoder;
    ProjectionHead query_proj;
    ProjectionHead key_proj;
    nn::Mat queue;  // K x d, unit-norm rows
    long queue_ptr = 0;
    double momentum = 0.999;
    double temperature = 0.2;

    ContrastiveState(std::unique_ptr<Backbone> encoder, const MocoConfig& cfg,
                     long dataset_frames, std::uint64_t seed)
        : query_encoder(std::move(encoder)),
          query_proj(query_encoder->embedding_dim(), cfg.proj_dim),
          key_proj(query_encoder->embedding_dim(), cfg.proj_dim),
          momentum(cfg.momentum),
          temperature(cfg.temperature) {
        if (momentum < 0.0 || momentum > 1.0)
            throw ConfigError("moco: momentum must be in [0,1]");
        if (temperature <= 0.0) throw ConfigError("moco: temperature must be > 0");

        Rng rng = Rng::stream(seed, 0x306f63u);
        query_proj.init(rng);

        // degenerate queues are useless: never keep more negatives than half
        // the dataset
        long k = cfg.queue_size;
        if (dataset_frames > 0) k = std::min(k, std::max<long>(1, dataset_frames / 2));
        queue = nn::Mat(k, cfg.proj_dim);
        for (long i = 0; i < k; ++i) {
            for (long j = 0; j < cfg.proj_dim; ++j) queue(i, j) = rng.normal();
            queue.row(i) /= std::max(queue.row(i).norm(), 1e-12);
        }

        key_encoder = query_encoder->clone();
        key_proj = query_proj;
        sync_key_side();  // key starts as an exact copy
    }

    nn::ParamRefs query_params() {
        nn::ParamRefs refs = query_encoder->params();
        auto proj = query_proj.params("proj");
        refs.insert(refs.end(), proj.begin(), proj.end());
        return refs;
    }

    nn::ParamRefs key_params() {
        nn::ParamRefs refs = key_encoder->params();
        auto proj = key_proj.params("proj");
        refs.insert(refs.end(), proj.begin(), proj.end());
        return refs;
    }

    void momentum_step() { nn::momentum_update(query_params(), key_params(), momentum); }

    void validate() const {
        if (queue_ptr < 0 || queue_ptr >= queue.rows())
            throw ContractError("moco: queue pointer out of range");
        for (long i = 0; i < queue.rows(); ++i)
            if (std::fabs(queue.row(i).norm() - 1.0) > 1e-4)
                throw ContractError("moco: queue row " + std::to_string(i) + " not unit-norm");
    }

private:
    void sync_key_side() { nn::momentum_update(query_params(), key_params(), 0.0); }
};

// Positive partner for a frame at ordinal `anchor` in a stream of n frames:
// one of the two immediate neighbors, the single neighbor at the boundary.
inline std::size_t temporal_positive(std::size_t anchor, std::size_t n_frames, Rng& rng) {
    if (n_frames < 2) throw ContractError("temporal_positive: need at least 2 frames");
    if (anchor >= n_frames) throw ContractError("temporal_positive: anchor out of range");
    if (anchor == 0) return 1;
    if (anchor + 1 == n_frames) return anchor - 1;
    return rng.bernoulli(0.5) ? anchor + 1 : anchor - 1;
}

inline std::vector<std::pair<std::size_t, std::size_t>> temporal_positive_pairs(
    const std::vector<std::size_t>& anchors, std::size_t n_frames, Rng& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(anchors.size());
    for (std::size_t a : anchors) pairs.emplace_back(a, temporal_positive(a, n_frames, rng));
    return pairs;
}

}  // namespace tiv

#endif
