#ifndef TIV_TRAIN_HPP
#define TIV_TRAIN_HPP

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiv/adam.hpp"
#include "tiv/augment.hpp"
#include "tiv/backbone.hpp"
#include "tiv/checkpoint.hpp"
#include "tiv/errors.hpp"
#include "tiv/image.hpp"
#include "tiv/losses.hpp"
#include "tiv/manifest.hpp"
#include "tiv/moco.hpp"
#include "tiv/nn.hpp"
#include "tiv/rng.hpp"
#include "tiv/temporal.hpp"

namespace tiv {

enum class Objective { temporal_classification, static_contrastive, temporal_contrastive };

inline std::string objective_name(Objective o) {
    switch (o) {
        case Objective::temporal_classification: return "temporal_classification";
        case Objective::static_contrastive: return "static_contrastive";
        default: return "temporal_contrastive";
    }
}

inline Objective objective_from_name(const std::string& s) {
    if (s == "temporal_classification") return Objective::temporal_classification;
    if (s == "static_contrastive") return Objective::static_contrastive;
    if (s == "temporal_contrastive") return Objective::temporal_contrastive;
    throw ConfigError("unknown objective '" + s + "'");
}

struct TrainConfig {
    Objective objective = Objective::temporal_classification;
    double fps = 5.0;
    double segment_length_s = 288.0;
    double lr = 0.0005;
    int batch_size = 732;
    int epochs = 20;
    std::uint64_t seed = 0;
    AugmentConfig augment;
    NormalizationConstants normalization;
    std::string architecture = "small_cnn";
    MocoConfig moco;
    bool contrastive_lr_drop = true;  // x0.1 in the final epoch

    void validate() const {
        if (lr < 0.0) throw ConfigError("train: lr must be >= 0");
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (objective != Objective::temporal_classification && batch_size < 2)
            throw ConfigError("train: contrastive objectives need batch_size >= 2");
        augment.validate();
        normalization.validate();
    }

    nlohmann::json to_json() const {
        return {
            {"objective", objective_name(objective)},
            {"fps", fps},
            {"segment_length_s", segment_length_s},
            {"lr", lr},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"seed", seed},
            {"architecture", architecture},
            {"augment",
             {{"enabled", augment.enabled},
              {"jitter_prob", augment.jitter_prob},
              {"brightness", augment.brightness},
              {"contrast", augment.contrast},
              {"saturation", augment.saturation},
              {"hue", augment.hue},
              {"grayscale_prob", augment.grayscale_prob}}},
            {"moco",
             {{"queue_size", moco.queue_size},
              {"momentum", moco.momentum},
              {"temperature", moco.temperature},
              {"proj_dim", moco.proj_dim}}},
        };
    }
};

struct TrainResult {
    std::string checkpoint_path;
    double final_loss = 0.0;
    double final_accuracy = 0.0;
    int epochs_run = 0;
};

namespace train_detail {

inline double wall_time_s() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Augmentation streams are keyed by (seed, frame_id, epoch, view) so worker
// parallelism or resume cannot change the pixels a given step sees.
inline Image view_of(const Image& frame, std::int64_t frame_id, int epoch, int view,
                     const TrainConfig& cfg) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(frame_id),
                          static_cast<std::uint64_t>(epoch) * 2 + view, 0x617567u);
    return normalize(augment_frame(frame, cfg.augment, rng), cfg.normalization);
}

inline nn::Tensor4 batch_tensor(const std::vector<Image>& frames, const Manifest& manifest,
                                const std::vector<std::size_t>& ordinals, int epoch, int view,
                                const TrainConfig& cfg) {
    const Image& first = frames.at(ordinals.front());
    nn::Tensor4 batch(static_cast<int>(ordinals.size()), first.channels, first.height,
                      first.width);
    for (std::size_t b = 0; b < ordinals.size(); ++b) {
        const Image img = view_of(frames[ordinals[b]], manifest.entries[ordinals[b]].frame_id,
                                  epoch, view, cfg);
        std::copy(img.data.begin(), img.data.end(),
                  batch.data.data() + static_cast<long>(b) * img.size());
    }
    return batch;
}

class TrainLogger {
public:
    explicit TrainLogger(const std::filesystem::path& path) : out_(path, std::ios::app) {
        if (!out_) throw DataError("train: cannot open log " + path.string());
    }
    void log(long step, int epoch, double loss, double accuracy) {
        nlohmann::json rec = {{"step", step},
                              {"epoch", epoch},
                              {"loss", loss},
                              {"accuracy", accuracy},
                              {"wall_time", wall_time_s()}};
        out_ << rec.dump() << "\n";
        out_.flush();
    }

private:
    std::ofstream out_;
};

}  // namespace train_detail

// Rebuilds the trunk stored in a checkpoint (query encoder for contrastive
// checkpoints). The head/projection is deliberately not restored: evaluation
// probes the frozen trunk only.
inline std::unique_ptr<Backbone> backbone_from_checkpoint(const Checkpoint& ckpt) {
    const std::string arch = ckpt.meta.at("architecture").get<std::string>();
    auto backbone = random_backbone(arch, 0);
    unpack_params(ckpt, backbone->params());
    return backbone;
}

inline std::unique_ptr<Backbone> load_backbone(const std::string& checkpoint_path) {
    return backbone_from_checkpoint(load_checkpoint(checkpoint_path));
}

// Trains one model with the configured objective and writes an epoch-level
// checkpoint (atomically) plus an append-only JSONL step log under out_dir.
// Returns after `cfg.epochs` passes; throws TrainingDivergedError carrying the
// last finite checkpoint if the loss stops being finite.
inline TrainResult train(const TrainConfig& cfg, const Manifest& manifest,
                         const std::vector<Image>& frames, const TemporalLabeling* labeling,
                         const std::filesystem::path& out_dir,
                         const std::string& resume_from = "") {
    cfg.validate();
    if (manifest.size() != frames.size())
        throw ContractError("train: manifest/frame count mismatch");
    if (frames.empty()) throw DataError("train: empty dataset");
    const bool is_tc = cfg.objective == Objective::temporal_classification;
    if (is_tc && labeling == nullptr)
        throw ConfigError("train: temporal_classification requires a temporal labeling");
    if (!is_tc && frames.size() < 2)
        throw ContractError("train: contrastive objectives need at least 2 frames");

    std::filesystem::create_directories(out_dir);
    const std::string ckpt_path = (out_dir / "checkpoint.tivckpt").string();
    train_detail::TrainLogger logger(out_dir / "train_log.jsonl");

    // training pool: all frames, minus any excluded from the labeling
    std::vector<std::size_t> pool;
    std::vector<int> pool_class;
    int n_classes = 0;
    if (is_tc) {
        n_classes = labeling->n_classes;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (labeling->classes[i] < 0) continue;
            pool.push_back(i);
            pool_class.push_back(labeling->classes[i]);
        }
        if (pool.empty()) throw DataError("train: labeling excludes every frame");
    } else {
        pool.resize(frames.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
    }

    auto trunk = random_backbone(cfg.architecture, cfg.seed);
    const int d = trunk->embedding_dim();

    std::optional<nn::Linear> head;
    std::unique_ptr<ContrastiveState> moco;
    Backbone* query_trunk = nullptr;
    nn::ParamRefs learnable;
    if (is_tc) {
        head.emplace(d, n_classes);
        Rng head_rng = Rng::stream(cfg.seed, 0x68656164u);
        head->init(head_rng);
        query_trunk = trunk.get();
        learnable = trunk->params();
        auto h = head->params("head");
        learnable.insert(learnable.end(), h.begin(), h.end());
    } else {
        moco = std::make_unique<ContrastiveState>(std::move(trunk), cfg.moco,
                                                  static_cast<long>(frames.size()), cfg.seed);
        query_trunk = moco->query_encoder.get();
        learnable = moco->query_params();
    }

    Adam adam(learnable, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

    auto snapshot = [&](int epoch, double loss, double acc) {
        Checkpoint ckpt;
        ckpt.meta = {{"config", cfg.to_json()},
                     {"architecture", cfg.architecture},
                     {"objective", objective_name(cfg.objective)},
                     {"seed", cfg.seed},
                     {"epoch", epoch},
                     {"adam_steps", adam.steps()},
                     {"embedding_dim", d},
                     {"metrics", {{"loss", loss}, {"accuracy", acc}}}};
        if (is_tc) ckpt.meta["n_classes"] = n_classes;
        pack_params(is_tc ? query_trunk->params() : moco->query_params(), ckpt);
        if (is_tc) pack_params(head->params("head"), ckpt);
        if (!is_tc) {
            pack_params(moco->key_params(), ckpt, "key.");
            nn::Vec qflat(moco->queue.size());
            Eigen::Map<nn::Mat>(qflat.data(), moco->queue.rows(), moco->queue.cols()) =
                moco->queue;
            ckpt.blobs["moco.queue"] = qflat;
            ckpt.meta["moco_state"] = {{"queue_ptr", moco->queue_ptr},
                                       {"queue_rows", moco->queue.rows()},
                                       {"queue_cols", moco->queue.cols()}};
        }
        for (const auto& [name, v] : adam.state()) ckpt.blobs[name] = v;
        save_checkpoint(ckpt, ckpt_path);
    };

    int start_epoch = 0;
    if (!resume_from.empty()) {
        Checkpoint prev = load_checkpoint(resume_from);
        if (prev.meta.at("objective").get<std::string>() != objective_name(cfg.objective))
            throw ConfigError("train: resume objective mismatch");
        unpack_params(prev, is_tc ? query_trunk->params() : moco->query_params());
        if (is_tc) unpack_params(prev, head->params("head"));
        if (!is_tc) {
            unpack_params(prev, moco->key_params(), "key.");
            const auto& ms = prev.meta.at("moco_state");
            const long rows = ms.at("queue_rows").get<long>();
            const long cols = ms.at("queue_cols").get<long>();
            moco->queue = Eigen::Map<nn::Mat>(prev.blobs.at("moco.queue").data(), rows, cols);
            moco->queue_ptr = ms.at("queue_ptr").get<long>();
        }
        std::map<std::string, nn::Vec> adam_state;
        for (const auto& [name, v] : prev.blobs)
            if (name.rfind("adam.", 0) == 0) adam_state[name] = v;
        adam.restore(adam_state, prev.meta.at("adam_steps").get<long>());
        start_epoch = prev.meta.at("epoch").get<int>() + 1;
        if (start_epoch >= cfg.epochs)
            throw ConfigError("train: resumed checkpoint already covers " +
                              std::to_string(start_epoch) + " epochs");
    }

    // initial snapshot so a first-epoch divergence still has a finite state
    if (start_epoch == 0) snapshot(-1, std::nan(""), 0.0);

    long global_step = adam.steps();
    double epoch_loss = 0.0, epoch_acc = 0.0;
    int epochs_run = start_epoch;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng = Rng::stream(cfg.seed, 0x73687566u, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);
        Rng pair_rng = Rng::stream(cfg.seed, 0x70616972u, static_cast<std::uint64_t>(epoch));

        double loss_sum = 0.0, acc_sum = 0.0;
        long steps_in_epoch = 0;
        const double lr_scale =
            (!is_tc && cfg.contrastive_lr_drop && epoch == cfg.epochs - 1) ? 0.1 : 1.0;

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<std::size_t> batch_pool(order.begin() + static_cast<long>(begin),
                                                order.begin() + static_cast<long>(end));
            if (!is_tc && batch_pool.size() < 2) break;  // a lone sample has no negatives

            std::vector<std::size_t> anchors(batch_pool.size());
            for (std::size_t b = 0; b < batch_pool.size(); ++b) anchors[b] = pool[batch_pool[b]];

            nn::zero_grads(learnable);
            double loss = 0.0, acc = 0.0;
            nn::Mat keys_for_queue;
            if (is_tc) {
                std::vector<int> labels(batch_pool.size());
                for (std::size_t b = 0; b < batch_pool.size(); ++b)
                    labels[b] = pool_class[batch_pool[b]];
                const nn::Tensor4 x =
                    train_detail::batch_tensor(frames, manifest, anchors, epoch, 0, cfg);
                EmbedResult fwd = query_trunk->forward(x);
                const nn::Mat logits = head->forward(fwd.embeddings, true);
                ClassificationLoss cls = softmax_cross_entropy(logits, labels);
                loss = cls.loss;
                acc = cls.accuracy;
                if (std::isfinite(loss)) {
                    const nn::Mat d_emb = head->backward(cls.grad_logits);
                    query_trunk->backward(d_emb);
                }
            } else {
                std::vector<std::size_t> positives(anchors.size());
                if (cfg.objective == Objective::temporal_contrastive) {
                    for (std::size_t b = 0; b < anchors.size(); ++b)
                        positives[b] = temporal_positive(anchors[b], frames.size(), pair_rng);
                } else {
                    positives = anchors;  // second view of the same frame
                }
                const nn::Tensor4 xq =
                    train_detail::batch_tensor(frames, manifest, anchors, epoch, 0, cfg);
                const nn::Tensor4 xk =
                    train_detail::batch_tensor(frames, manifest, positives, epoch, 1, cfg);

                EmbedResult qfwd = moco->query_encoder->forward(xq);
                const nn::Mat q = moco->query_proj.forward(qfwd.embeddings, true);
                const nn::Mat k = moco->key_proj.forward(
                    moco->key_encoder->embed(xk).embeddings, false);

                InfoNceLoss nce = info_nce_loss(q, k, moco->queue, moco->temperature);
                loss = nce.loss;
                // fraction of rows whose positive outranks every queue entry
                long hits = 0;
                for (long i = 0; i < q.rows(); ++i) {
                    const double pos = q.row(i).dot(k.row(i));
                    if (pos > (moco->queue * q.row(i).transpose()).maxCoeff()) ++hits;
                }
                acc = static_cast<double>(hits) / static_cast<double>(q.rows());
                if (std::isfinite(loss)) {
                    const nn::Mat d_emb = moco->query_proj.backward(nce.grad_query);
                    moco->query_encoder->backward(d_emb);
                }
                keys_for_queue = k;
            }

            if (!std::isfinite(loss))
                throw TrainingDivergedError(
                    "train: non-finite loss at step " + std::to_string(global_step), ckpt_path);

            adam.step(lr_scale);
            if (!is_tc) {
                moco->momentum_step();
                enqueue(moco->queue, moco->queue_ptr, keys_for_queue);
            }

            ++global_step;
            ++steps_in_epoch;
            loss_sum += loss;
            acc_sum += acc;
            logger.log(global_step, epoch, loss, acc);
        }

        epoch_loss = steps_in_epoch ? loss_sum / steps_in_epoch : 0.0;
        epoch_acc = steps_in_epoch ? acc_sum / steps_in_epoch : 0.0;
        epochs_run = epoch + 1;
        snapshot(epoch, epoch_loss, epoch_acc);
    }

    TrainResult result;
    result.checkpoint_path = ckpt_path;
    result.final_loss = epoch_loss;
    result.final_accuracy = epoch_acc;
    result.epochs_run = epochs_run;
    return result;
}

}  // namespace tiv

#endif
