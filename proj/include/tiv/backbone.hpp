#ifndef TIV_BACKBONE_HPP
#define TIV_BACKBONE_HPP

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/nn.hpp"
#include "tiv/rng.hpp"

namespace tiv {

struct EmbedResult {
    nn::Mat embeddings;   // N x D
    nn::Tensor4 spatial;  // N x D x h x w; its spatial mean equals embeddings
};

// Trunk contract: deterministic embed() in inference mode, and the global
// average of the final spatial features must equal the embedding row — the
// attention-map math depends on it.
class Backbone {
public:
    virtual ~Backbone() = default;

    virtual EmbedResult embed(const nn::Tensor4& images) = 0;  // inference, no caches
    virtual int embedding_dim() const = 0;
    virtual std::string architecture() const = 0;
    virtual nn::ParamRefs params() = 0;
    virtual std::unique_ptr<Backbone> clone() const = 0;

    // training path: forward caches activations, backward consumes the
    // embedding gradient and accumulates parameter gradients
    virtual EmbedResult forward(const nn::Tensor4& images) = 0;
    virtual nn::Tensor4 backward(const nn::Mat& d_embeddings) = 0;
};

struct SmallCnnConfig {
    std::vector<int> widths = {32, 64, 128};  // last entry is the embedding dim
    int kernel = 3;
    int stride = 2;
    int pad = 1;
};

// Strided conv stack with instance normalization, ReLU, and a global average
// pool. The last block is left unnormalized so per-channel activation energy
// survives into the pooled embedding. A 32x32 input yields a 4x4 spatial grid
// at D = widths.back().
class SmallCnn final : public Backbone {
public:
    explicit SmallCnn(SmallCnnConfig cfg = {}, std::string arch_name = "small_cnn")
        : cfg_(std::move(cfg)), arch_(std::move(arch_name)) {
        int cin = 3;
        for (int width : cfg_.widths) {
            convs_.emplace_back(cin, width, cfg_.kernel, cfg_.stride, cfg_.pad);
            norms_.emplace_back();
            relus_.emplace_back();
            cin = width;
        }
    }

    void init(std::uint64_t seed) {
        Rng rng = Rng::stream(seed, 0x6262u);
        for (auto& conv : convs_) conv.init(rng);
    }

    EmbedResult embed(const nn::Tensor4& images) override { return run(images, false); }
    EmbedResult forward(const nn::Tensor4& images) override { return run(images, true); }

    nn::Tensor4 backward(const nn::Mat& d_embeddings) override {
        nn::Tensor4 grad = gap_.backward(d_embeddings);
        for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
            grad = relus_[static_cast<std::size_t>(i)].backward(grad);
            if (i + 1 < static_cast<int>(convs_.size()))
                grad = norms_[static_cast<std::size_t>(i)].backward(grad);
            grad = convs_[static_cast<std::size_t>(i)].backward(grad);
        }
        return grad;
    }

    int embedding_dim() const override { return cfg_.widths.back(); }
    std::string architecture() const override { return arch_; }

    nn::ParamRefs params() override {
        nn::ParamRefs refs;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            auto layer = convs_[i].params("trunk.conv" + std::to_string(i));
            refs.insert(refs.end(), layer.begin(), layer.end());
        }
        return refs;
    }

    std::unique_ptr<Backbone> clone() const override { return std::make_unique<SmallCnn>(*this); }

private:
    EmbedResult run(const nn::Tensor4& images, bool train) {
        nn::Tensor4 x = images;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            x = convs_[i].forward(x, train);
            if (i + 1 < convs_.size()) x = norms_[i].forward(x, train);
            x = relus_[i].forward(x, train);
        }
        EmbedResult out;
        out.embeddings = gap_.forward(x, train);
        out.spatial = std::move(x);
        return out;
    }

    SmallCnnConfig cfg_;
    std::string arch_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::InstanceNorm> norms_;
    std::vector<nn::ReLU> relus_;
    nn::GlobalAvgPool gap_;
};

using BackboneFactory = std::function<std::unique_ptr<Backbone>(std::uint64_t seed)>;

inline std::map<std::string, BackboneFactory>& backbone_registry() {
    static std::map<std::string, BackboneFactory> reg = {
        {"small_cnn",
         [](std::uint64_t seed) {
             auto b = std::make_unique<SmallCnn>(SmallCnnConfig{}, "small_cnn");
             b->init(seed);
             return b;
         }},
        {"small_cnn_64",
         [](std::uint64_t seed) {
             auto b = std::make_unique<SmallCnn>(SmallCnnConfig{{16, 32, 64}, 3, 2, 1},
                                                 "small_cnn_64");
             b->init(seed);
             return b;
         }},
    };
    return reg;
}

// Freshly initialized trunk with the architecture's standard initialization;
// also the untrained baseline model.
inline std::unique_ptr<Backbone> random_backbone(const std::string& architecture_id,
                                                 std::uint64_t seed) {
    auto& reg = backbone_registry();
    const auto it = reg.find(architecture_id);
    if (it == reg.end())
        throw ConfigError("random_backbone: unknown architecture '" + architecture_id + "'");
    return it->second(seed);
}

}  // namespace tiv

#endif
