#ifndef TIV_PIPELINE_HPP
#define TIV_PIPELINE_HPP

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiv/analysis.hpp"
#include "tiv/augment.hpp"
#include "tiv/backbone.hpp"
#include "tiv/config.hpp"
#include "tiv/curate.hpp"
#include "tiv/embedding.hpp"
#include "tiv/errors.hpp"
#include "tiv/hog.hpp"
#include "tiv/ingest.hpp"
#include "tiv/manifest.hpp"
#include "tiv/plots.hpp"
#include "tiv/probe.hpp"
#include "tiv/shards.hpp"
#include "tiv/split.hpp"
#include "tiv/synth.hpp"
#include "tiv/temporal.hpp"
#include "tiv/train.hpp"

namespace tiv {

// Orchestration shared by the CLI subcommands and the end-to-end tests.
// Every step reads a resolved config document and leaves its outputs (plus
// the resolved config itself) under an output directory.

namespace pipeline_detail {

inline double wall_time_s() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline AugmentConfig augment_from_json(const nlohmann::json& cfg) {
    AugmentConfig a;
    if (!cfg.contains("augment")) return a;
    const auto& j = cfg["augment"];
    a.enabled = j.value("enabled", a.enabled);
    a.jitter_prob = j.value("jitter_prob", a.jitter_prob);
    a.brightness = j.value("brightness", a.brightness);
    a.contrast = j.value("contrast", a.contrast);
    a.saturation = j.value("saturation", a.saturation);
    a.hue = j.value("hue", a.hue);
    a.grayscale_prob = j.value("grayscale_prob", a.grayscale_prob);
    a.validate();
    return a;
}

inline SplitSpec split_from_json(const nlohmann::json& cfg, std::uint64_t seed) {
    SplitSpec spec;
    spec.seed = seed;
    if (cfg.contains("probe") && cfg["probe"].contains("split")) {
        const auto& j = cfg["probe"]["split"];
        if (j.contains("kind")) spec.kind = split_kind_from_name(j["kind"].get<std::string>());
        spec.train_fraction = j.value("train_fraction", spec.train_fraction);
        spec.subsample_factor = j.value("subsample_factor", spec.subsample_factor);
        spec.holdout_fraction = j.value("holdout_fraction", spec.holdout_fraction);
        spec.holdout_count = j.value("holdout_count", spec.holdout_count);
        spec.stratified = j.value("stratified", spec.stratified);
    }
    spec.validate();
    return spec;
}

inline ProbeConfig probe_from_json(const nlohmann::json& cfg, const std::string& source,
                                   std::uint64_t seed) {
    ProbeConfig pc;
    pc.seed = seed;
    std::string family = "auto";
    if (cfg.contains("probe")) {
        const auto& j = cfg["probe"];
        family = j.value("family", family);
        pc.lr = j.value("lr", pc.lr);
        pc.epochs = j.value("epochs", pc.epochs);
        pc.batch = j.value("batch", pc.batch);
        pc.alpha = j.value("alpha", pc.alpha);
        pc.max_iter = j.value("max_iter", pc.max_iter);
    }
    if (family == "auto")
        pc.family = source == "hog" ? ProbeFamily::linear_hinge
                                    : ProbeFamily::multinomial_logistic;
    else
        pc.family = probe_family_from_name(family);
    pc.validate();
    return pc;
}

inline TrainConfig train_from_json(const nlohmann::json& cfg, double data_fps) {
    TrainConfig tc;
    tc.fps = data_fps;
    tc.seed = cfg.value("seed", 0);
    tc.augment = augment_from_json(cfg);
    if (cfg.contains("train")) {
        const auto& j = cfg["train"];
        if (j.contains("objective"))
            tc.objective = objective_from_name(j["objective"].get<std::string>());
        tc.segment_length_s = j.value("segment_length_s", tc.segment_length_s);
        tc.lr = j.value("lr", tc.lr);
        tc.batch_size = j.value("batch_size", tc.batch_size);
        tc.epochs = j.value("epochs", tc.epochs);
        tc.architecture = j.value("architecture", tc.architecture);
        tc.contrastive_lr_drop = j.value("contrastive_lr_drop", tc.contrastive_lr_drop);
        if (j.contains("moco")) {
            const auto& m = j["moco"];
            tc.moco.queue_size = m.value("queue_size", tc.moco.queue_size);
            tc.moco.momentum = m.value("momentum", tc.moco.momentum);
            tc.moco.temperature = m.value("temperature", tc.moco.temperature);
            tc.moco.proj_dim = m.value("proj_dim", tc.moco.proj_dim);
        }
    }
    tc.validate();
    return tc;
}

}  // namespace pipeline_detail

// --- dataset directory I/O ----------------------------------------------------

struct Dataset {
    Manifest manifest;
    std::vector<Image> frames;  // raw [0,1] pixels, aligned with manifest rows
};

inline void write_dataset(const Manifest& manifest, const std::vector<Image>& frames,
                          const std::filesystem::path& dir, std::size_t shard_size = 4096) {
    if (manifest.size() != frames.size())
        throw ContractError("write_dataset: manifest/frame count mismatch");
    std::filesystem::create_directories(dir);
    Manifest out = manifest;
    ShardWriter writer(dir, "frames", manifest.frame_height, manifest.frame_width, 3, shard_size);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto loc = writer.add(image_to_u8(frames[i]));
        out.entries[i].shard_path = loc.shard_path;
        out.entries[i].shard_offset = loc.offset;
    }
    writer.finish();
    out.validate();
    save_manifest(out, (dir / "manifest.jsonl").string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.manifest = load_manifest((dir / "manifest.jsonl").string());
    FrameStore store(dir);
    ds.frames.reserve(ds.manifest.size());
    for (const auto& e : ds.manifest.entries) ds.frames.push_back(store.load(e));
    return ds;
}

inline std::vector<Image> normalized_frames(const std::vector<Image>& frames,
                                            const NormalizationConstants& k = {}) {
    std::vector<Image> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(normalize(f, k));
    return out;
}

// --- synth ---------------------------------------------------------------------

inline nlohmann::json run_synth(const nlohmann::json& cfg,
                                const std::filesystem::path& out_dir) {
    if (!cfg.contains("data") || !cfg["data"].contains("kind"))
        throw ConfigError("synth: config needs data.kind");
    const std::string kind = cfg["data"]["kind"].get<std::string>();
    const std::uint64_t seed = cfg.value("seed", 0);
    const std::size_t shard_size = cfg["data"].value("shard_size", 4096);

    nlohmann::json summary;
    if (kind == "synthetic_episodic") {
        EpisodicWorldConfig ec;
        if (cfg["data"].contains("episodic")) {
            const auto& j = cfg["data"]["episodic"];
            ec.n_episodes = j.value("n_episodes", ec.n_episodes);
            ec.frames_per_episode = j.value("frames_per_episode", ec.frames_per_episode);
            ec.image_size = j.value("image_size", ec.image_size);
            ec.drift_rate = j.value("drift_rate", ec.drift_rate);
            ec.noise_sigma = j.value("noise_sigma", ec.noise_sigma);
            ec.fps = j.value("fps", ec.fps);
        }
        ec.seed = seed;
        EpisodicDataset ds = generate_episodic(ec);
        write_dataset(ds.manifest, ds.frames, out_dir, shard_size);
        summary = {{"kind", kind},
                   {"frames", ds.manifest.size()},
                   {"n_episodes", ec.n_episodes},
                   {"segment_length_s", ds.labeling.segment_length_s}};
    } else if (kind == "synthetic_shapes") {
        ShapeWorldConfig sc;
        if (cfg["data"].contains("shapes")) {
            const auto& j = cfg["data"]["shapes"];
            sc.n_classes = j.value("n_classes", sc.n_classes);
            sc.exemplars_per_class = j.value("exemplars_per_class", sc.exemplars_per_class);
            sc.views_per_exemplar = j.value("views_per_exemplar", sc.views_per_exemplar);
            sc.image_size = j.value("image_size", sc.image_size);
            sc.fps = j.value("fps", sc.fps);
        }
        sc.seed = seed;
        ShapeDataset ds = generate_shapes(sc);
        write_dataset(ds.manifest, ds.frames, out_dir, shard_size);
        summary = {{"kind", kind},
                   {"frames", ds.manifest.size()},
                   {"n_classes", sc.n_classes},
                   {"exemplars_per_class", sc.exemplars_per_class}};
    } else {
        throw ConfigError("synth: unknown data.kind '" + kind + "'");
    }
    write_resolved_config(cfg, out_dir);
    return summary;
}

// --- ingest --------------------------------------------------------------------

inline nlohmann::json run_ingest(const nlohmann::json& cfg,
                                 const std::filesystem::path& out_dir) {
    if (!cfg.contains("data") || !cfg["data"].contains("recordings"))
        throw ConfigError("ingest: config needs data.recordings");
    std::vector<RawRecording> recordings;
    for (const auto& r : cfg["data"]["recordings"]) {
        RawRecording rec;
        rec.id = r.at("id").get<std::string>();
        rec.uri = r.at("uri").get<std::string>();
        rec.native_fps = r.at("native_fps").get<double>();
        rec.duration_s = r.value("duration_s", 0.0);
        rec.child_tag = r.value("child_tag", "");
        recordings.push_back(std::move(rec));
    }
    IngestConfig ic;
    ic.target_fps = cfg["data"].value("fps", 1.0);
    if (ic.target_fps <= 0.0) throw ConfigError("ingest: fps must be > 0");
    ic.shard_size = cfg["data"].value("shard_size", 4096);
    ic.workers = cfg.value("workers", 1);
    if (cfg["data"].contains("preprocessing")) {
        const auto& p = cfg["data"]["preprocessing"];
        ic.preprocessing.minor_edge = p.value("minor_edge", ic.preprocessing.minor_edge);
        ic.preprocessing.crop = p.value("crop", ic.preprocessing.crop);
        ic.preprocessing.shift_up = p.value("shift_up", ic.preprocessing.shift_up);
    }

    const IngestResult result = ingest_recordings(recordings, ic, out_dir);

    // optional temporal-class preview when a segment length is configured
    if (cfg.contains("train") && cfg["train"].contains("segment_length_s")) {
        const double seg = cfg["train"]["segment_length_s"].get<double>();
        const TemporalLabeling lab = assign_temporal_classes(result.manifest, seg);
        nlohmann::json tl = {{"segment_length_s", seg},
                             {"fps", lab.fps},
                             {"frames_per_class", lab.frames_per_class},
                             {"n_classes", lab.n_classes},
                             {"classes", lab.classes}};
        std::ofstream f(out_dir / "temporal_classes.json");
        f << tl.dump(2) << "\n";
    }
    write_resolved_config(cfg, out_dir);
    return {{"frames", result.manifest.size()}, {"fps", result.manifest.fps}};
}

// --- train ---------------------------------------------------------------------

inline TrainResult run_train(const nlohmann::json& cfg, const std::filesystem::path& data_dir,
                             const std::filesystem::path& out_dir,
                             const std::string& resume_from = "") {
    Dataset ds = load_dataset(data_dir);
    TrainConfig tc = pipeline_detail::train_from_json(cfg, ds.manifest.fps);

    TemporalAssignOptions opts;
    if (cfg.contains("train")) {
        opts.reset_per_recording =
            cfg["train"].value("reset_episodes_per_recording", false);
        opts.drop_last_partial = cfg["train"].value("drop_last_partial", false);
    }
    TemporalLabeling labeling;
    const bool is_tc = tc.objective == Objective::temporal_classification;
    if (is_tc) labeling = assign_temporal_classes(ds.manifest, tc.segment_length_s, opts);

    const TrainResult result =
        train(tc, ds.manifest, ds.frames, is_tc ? &labeling : nullptr, out_dir, resume_from);
    write_resolved_config(cfg, out_dir);
    return result;
}

// --- probe ---------------------------------------------------------------------

// Model identity for results documents: baseline name, or the checkpoint
// file name rather than its absolute location, so reports are comparable
// across run directories.
inline std::string model_id(const std::string& model) {
    if (model.rfind("checkpoint:", 0) == 0) {
        const std::filesystem::path p = model.substr(std::string("checkpoint:").size());
        return "checkpoint:" + p.filename().string();
    }
    return model;
}

// model strings: "checkpoint:<path>", "hog", "random", "random:<architecture>"
inline EmbeddingSet embeddings_for_model(const std::string& model, const Dataset& ds,
                                         std::uint64_t seed, int workers = 1) {
    if (model == "hog") return extract_hog_embeddings(ds.manifest, ds.frames);
    if (model.rfind("checkpoint:", 0) == 0) {
        const std::string path = model.substr(std::string("checkpoint:").size());
        auto backbone = load_backbone(path);
        return extract_embeddings(*backbone, ds.manifest, normalized_frames(ds.frames),
                                  model_id(model), 256, workers);
    }
    if (model == "random" || model.rfind("random:", 0) == 0) {
        const std::string arch =
            model == "random" ? "small_cnn" : model.substr(std::string("random:").size());
        auto backbone = random_backbone(arch, seed);
        return extract_embeddings(*backbone, ds.manifest, normalized_frames(ds.frames), model,
                                  256, workers);
    }
    throw ConfigError("probe: unknown model '" + model + "'");
}

namespace pipeline_detail {

// drop rows without labels; probes need supervision
inline EmbeddingSet labeled_rows(const EmbeddingSet& set) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < set.labels.size(); ++i)
        if (set.labels[i] >= 0) keep.push_back(i);
    return set.select(keep);
}

}  // namespace pipeline_detail

inline nlohmann::json run_probe(const nlohmann::json& cfg, const std::filesystem::path& data_dir,
                                const std::filesystem::path& out_dir) {
    const std::uint64_t seed = cfg.value("seed", 0);
    const int workers = cfg.value("workers", 1);
    const std::string model =
        cfg.contains("probe") ? cfg["probe"].value("model", "random") : "random";

    Dataset ds = load_dataset(data_dir);
    EmbeddingSet all = embeddings_for_model(model, ds, seed, workers);
    EmbeddingSet labeled = pipeline_detail::labeled_rows(all);
    if (labeled.n() == 0) throw DataError("probe: dataset has no labeled frames");

    const SplitSpec split_spec = pipeline_detail::split_from_json(cfg, seed);
    const SplitResult parts =
        split(static_cast<std::size_t>(labeled.n()), &labeled.labels,
              labeled.has_exemplars() ? &labeled.exemplar_ids : nullptr, split_spec);
    const EmbeddingSet train_set = labeled.select(parts.train_indices);
    const EmbeddingSet test_set = labeled.select(parts.test_indices);

    const ProbeConfig pc = pipeline_detail::probe_from_json(cfg, all.source, seed);
    const LinearClassifier clf = fit_probe(train_set, pc);

    nlohmann::json results = {
        {"model", model_id(model)},
        {"dataset", data_dir.filename().string()},
        {"split", split_kind_name(split_spec.kind)},
        {"family", probe_family_name(pc.family)},
        {"top1", top1_accuracy(clf, test_set)},
        {"majority", majority_baseline(test_set.labels)},
        {"n_train", train_set.n()},
        {"n_test", test_set.n()},
        {"seed", seed},
        {"wall_time", pipeline_detail::wall_time_s()},
    };

    if (cfg.contains("probe") && cfg["probe"].contains("binary")) {
        auto tasks = nlohmann::json::array();
        for (const auto& pair : cfg["probe"]["binary"]) {
            const std::string a = pair.at(0).get<std::string>();
            const std::string b = pair.at(1).get<std::string>();
            const EmbeddingSet task_train = binary_task(train_set, a, b);
            const EmbeddingSet task_test = binary_task(test_set, a, b);
            const LinearClassifier task_clf = fit_probe(task_train, pc);
            tasks.push_back({{"task", a + "_vs_" + b},
                             {"top1", top1_accuracy(task_clf, task_test)},
                             {"majority", majority_baseline(task_test.labels)},
                             {"n_train", task_train.n()},
                             {"n_test", task_test.n()}});
        }
        results["binary_tasks"] = tasks;
    }

    std::filesystem::create_directories(out_dir);
    save_embeddings(all, (out_dir / "embeddings.tivemb").string());
    std::ofstream f(out_dir / "results.json");
    f << results.dump(2) << "\n";
    write_resolved_config(cfg, out_dir);
    return results;
}

// --- analyze -------------------------------------------------------------------

inline nlohmann::json run_analyze(const nlohmann::json& cfg,
                                  const std::filesystem::path& data_dir,
                                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::uint64_t seed = cfg.value("seed", 0);
    const nlohmann::json analysis =
        cfg.contains("analysis") ? cfg["analysis"] : nlohmann::json::object();
    nlohmann::json summary;

    const bool want_csi = analysis.value("csi", true);
    const bool want_pca = analysis.value("pca", true);
    const bool want_cam = analysis.contains("cam");
    const bool want_sweep = analysis.contains("sweep");

    if (want_csi || want_pca || want_cam) {
        if (!analysis.contains("checkpoint"))
            throw ConfigError("analyze: analysis.checkpoint required");
        auto backbone = load_backbone(analysis["checkpoint"].get<std::string>());
        Dataset ds = load_dataset(data_dir);
        const std::vector<Image> norm = normalized_frames(ds.frames);
        EmbeddingSet set = extract_embeddings(*backbone, ds.manifest, norm, "analysis");
        EmbeddingSet labeled = pipeline_detail::labeled_rows(set);

        if (want_csi) {
            if (labeled.n() == 0) throw DataError("analyze: csi needs labeled frames");
            FeatureResponseTable table{labeled.embeddings, labeled.labels, "trunk.final"};
            const Eigen::VectorXd scores =
                analysis.value("csi_split_half", false) ? csi_split_half(table, seed)
                                                        : csi(table);
            std::ofstream f(out_dir / "csi.tsv");
            f << "feature\tcsi\n";
            for (long i = 0; i < scores.size(); ++i) f << i << "\t" << scores[i] << "\n";
            summary["csi_mean"] = scores.mean();

            if (analysis.contains("top_activating")) {
                const auto& ta = analysis["top_activating"];
                const int feature_count = ta.value("feature_count", 3);
                const std::size_t sample_size = ta.value("sample_size", 1024);
                const std::size_t top_k = ta.value("top_k", 10);
                std::vector<long> by_csi(static_cast<std::size_t>(scores.size()));
                std::iota(by_csi.begin(), by_csi.end(), 0L);
                std::stable_sort(by_csi.begin(), by_csi.end(),
                                 [&](long a, long b) { return scores[a] > scores[b]; });
                auto out = nlohmann::json::array();
                for (int i = 0; i < feature_count && i < static_cast<int>(by_csi.size()); ++i) {
                    const long feat = by_csi[static_cast<std::size_t>(i)];
                    const auto rows =
                        top_activating_images(table, feat, sample_size, top_k, seed);
                    std::vector<std::int64_t> frame_ids;
                    for (std::size_t r : rows) frame_ids.push_back(labeled.frame_ids[r]);
                    out.push_back({{"feature", feat},
                                   {"csi", scores[feat]},
                                   {"frame_ids", frame_ids}});
                }
                std::ofstream tf(out_dir / "top_activating.json");
                tf << out.dump(2) << "\n";
            }
        }

        if (want_pca) {
            const Eigen::VectorXd curve = pca_curve(set.embeddings);
            std::ofstream f(out_dir / "pca_curve.tsv");
            f << "components\tvariance_explained\n";
            for (long i = 0; i < curve.size(); ++i) f << (i + 1) << "\t" << curve[i] << "\n";
            summary["pca_components"] = curve.size();
        }

        if (want_cam) {
            const auto& camcfg = analysis["cam"];
            CamOptions opts;
            opts.out_size = camcfg.value("out_size", ds.manifest.frame_height);
            opts.normalize_on_raw = camcfg.value("normalize_on_raw", false);
            const int n_images = camcfg.value("n_images", 4);

            if (labeled.n() == 0) throw DataError("analyze: cam needs labeled frames");
            SplitSpec split_spec;
            split_spec.seed = seed;
            const SplitResult parts = split(static_cast<std::size_t>(labeled.n()),
                                            &labeled.labels, nullptr, split_spec);
            const ProbeConfig pc = pipeline_detail::probe_from_json(cfg, "analysis", seed);
            const LinearClassifier clf = fit_probe(labeled.select(parts.train_indices), pc);

            std::vector<std::string> class_names =
                camcfg.contains("classes")
                    ? camcfg["classes"].get<std::vector<std::string>>()
                    : labeled.label_vocab;

            std::filesystem::create_directories(out_dir / "cam");
            auto index = nlohmann::json::array();
            // map frame_id -> manifest row for pixels
            std::map<std::int64_t, std::size_t> row_of;
            for (std::size_t i = 0; i < ds.manifest.size(); ++i)
                row_of[ds.manifest.entries[i].frame_id] = i;

            for (const auto& cls : class_names) {
                const auto vit =
                    std::find(labeled.label_vocab.begin(), labeled.label_vocab.end(), cls);
                if (vit == labeled.label_vocab.end())
                    throw DataError("analyze: cam class '" + cls + "' not present");
                const int cls_id = static_cast<int>(vit - labeled.label_vocab.begin());
                const auto cit = std::find(clf.class_ids.begin(), clf.class_ids.end(), cls_id);
                if (cit == clf.class_ids.end())
                    throw DataError("analyze: cam class '" + cls + "' missing from probe");
                const Eigen::VectorXd w = clf.weights.col(cit - clf.class_ids.begin());

                int exported = 0;
                for (long i = 0; i < labeled.n() && exported < n_images; ++i) {
                    if (labeled.labels[static_cast<std::size_t>(i)] != cls_id) continue;
                    const std::size_t row =
                        row_of.at(labeled.frame_ids[static_cast<std::size_t>(i)]);
                    nn::Tensor4 one(1, 3, ds.frames[row].height, ds.frames[row].width);
                    const Image n1 = normalize(ds.frames[row]);
                    std::copy(n1.data.begin(), n1.data.end(), one.data.data());
                    const EmbedResult er = backbone->embed(one);
                    AttentionMap map = cam(er.spatial, 0, w, opts);
                    map.class_id = cls_id;
                    map.image_id = labeled.frame_ids[static_cast<std::size_t>(i)];

                    Image scaled = ds.frames[row];
                    if (scaled.height != opts.out_size || scaled.width != opts.out_size)
                        scaled = resize_bicubic(scaled, opts.out_size, opts.out_size);
                    const Image masked = mask_image(scaled, map);
                    char name[64];
                    std::snprintf(name, sizeof(name), "%s_%lld_mask.ppm", cls.c_str(),
                                  static_cast<long long>(map.image_id));
                    write_ppm((out_dir / "cam" / name).string(), masked);
                    index.push_back({{"class", cls},
                                     {"frame_id", map.image_id},
                                     {"file", std::string("cam/") + name}});
                    ++exported;
                }
            }
            std::ofstream f(out_dir / "cam_index.json");
            f << index.dump(2) << "\n";
            summary["cam_exports"] = index.size();
        }
    }

    if (want_sweep) {
        const auto& sw = analysis["sweep"];
        const std::vector<double> fps_grid =
            sw.value("fps", std::vector<double>{1.0, 5.0});
        const std::vector<double> seg_grid =
            sw.value("segment_length", std::vector<double>{});
        const std::vector<bool> aug_grid = sw.value("augment", std::vector<bool>{true});
        const double episode_duration = sw.value("episode_duration_s", 16.0);
        const int n_episodes = sw.value("n_episodes", 8);
        const int sweep_epochs = sw.value("epochs", 6);

        // intermediate cell training goes to TIV_CACHE_DIR when set
        const char* cache_env = std::getenv("TIV_CACHE_DIR");
        const std::filesystem::path cell_base =
            cache_env ? std::filesystem::path(cache_env) / "sweep_cells" : out_dir;

        auto report = nlohmann::json::array();
        std::ofstream tsv(out_dir / "sweep.tsv");
        tsv << "fps\tsegment_length_s\taugment\ttop1\n";
        for (const double fps : fps_grid) {
            std::vector<double> segs = seg_grid;
            if (segs.empty()) segs = {episode_duration};
            for (const double seg : segs) {
                for (const bool aug : aug_grid) {
                    EpisodicWorldConfig ec;
                    ec.n_episodes = n_episodes;
                    ec.frames_per_episode =
                        std::max(1, static_cast<int>(std::lround(episode_duration * fps)));
                    ec.fps = fps;
                    ec.seed = seed;
                    const EpisodicDataset eds = generate_episodic(ec);

                    nlohmann::json cell_cfg = cfg;
                    cell_cfg["train"]["objective"] = "temporal_classification";
                    cell_cfg["train"]["segment_length_s"] = seg;
                    cell_cfg["train"]["epochs"] = sweep_epochs;
                    cell_cfg["augment"]["enabled"] = aug;

                    TrainConfig tc = pipeline_detail::train_from_json(cell_cfg, fps);
                    const TemporalLabeling lab = assign_temporal_classes(eds.manifest, seg);
                    const std::filesystem::path cell_dir =
                        cell_base / ("sweep_" + std::to_string(report.size()));
                    const TrainResult tr =
                        train(tc, eds.manifest, eds.frames, &lab, cell_dir);

                    auto backbone = load_backbone(tr.checkpoint_path);
                    EmbeddingSet set = extract_embeddings(
                        *backbone, eds.manifest, normalized_frames(eds.frames), "sweep");
                    SplitSpec split_spec;
                    split_spec.seed = seed;
                    const SplitResult parts = split(static_cast<std::size_t>(set.n()),
                                                    &set.labels, nullptr, split_spec);
                    ProbeConfig pc;
                    pc.seed = seed;
                    const LinearClassifier clf = fit_probe(set.select(parts.train_indices), pc);
                    const double top1 = top1_accuracy(clf, set.select(parts.test_indices));

                    tsv << fps << "\t" << seg << "\t" << (aug ? 1 : 0) << "\t" << top1 << "\n";
                    report.push_back({{"fps", fps},
                                      {"segment_length_s", seg},
                                      {"augment", aug},
                                      {"top1", top1}});
                }
            }
        }
        std::ofstream f(out_dir / "sweep.json");
        f << report.dump(2) << "\n";
        summary["sweep_cells"] = report.size();
    }

    write_resolved_config(cfg, out_dir);
    return summary;
}

// --- report --------------------------------------------------------------------

inline nlohmann::json run_report(const std::filesystem::path& run_dir,
                                 const std::filesystem::path& out_dir, bool skip_plots = false) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    nlohmann::json summary;

    if (fs::exists(run_dir / "train_log.jsonl")) {
        std::ifstream f(run_dir / "train_log.jsonl");
        PlotSeries loss, acc;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            loss.x.push_back(rec.at("step").get<double>());
            loss.y.push_back(rec.at("loss").get<double>());
            acc.x.push_back(rec.at("step").get<double>());
            acc.y.push_back(rec.at("accuracy").get<double>());
        }
        summary["train_steps"] = loss.x.size();
        if (!skip_plots && !loss.x.empty()) {
            render_line_chart({loss}, (out_dir / "loss_curve.ppm").string());
            acc.color[0] = 0.7;
            acc.color[1] = 0.3;
            acc.color[2] = 0.2;
            render_line_chart({acc}, (out_dir / "accuracy_curve.ppm").string());
        }
    }

    const auto read_tsv_column = [](const fs::path& p, int col) {
        std::vector<double> out;
        std::ifstream f(p);
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            std::istringstream ss(line);
            std::string field;
            for (int i = 0; i <= col; ++i) std::getline(ss, field, '\t');
            if (!field.empty()) out.push_back(std::stod(field));
        }
        return out;
    };

    if (fs::exists(run_dir / "pca_curve.tsv")) {
        const auto ys = read_tsv_column(run_dir / "pca_curve.tsv", 1);
        summary["pca_components"] = ys.size();
        if (!skip_plots && !ys.empty()) {
            PlotSeries s;
            for (std::size_t i = 0; i < ys.size(); ++i) {
                s.x.push_back(static_cast<double>(i + 1));
                s.y.push_back(ys[i]);
            }
            render_line_chart({s}, (out_dir / "pca_curve.ppm").string());
        }
    }

    if (fs::exists(run_dir / "csi.tsv")) {
        auto ys = read_tsv_column(run_dir / "csi.tsv", 1);
        summary["csi_features"] = ys.size();
        if (!skip_plots && !ys.empty()) {
            std::sort(ys.begin(), ys.end(), std::greater<>());
            render_bar_chart(ys, (out_dir / "csi_distribution.ppm").string());
        }
    }

    if (fs::exists(run_dir / "sweep.tsv")) {
        const auto ys = read_tsv_column(run_dir / "sweep.tsv", 3);
        summary["sweep_cells"] = ys.size();
        if (!skip_plots && !ys.empty())
            render_bar_chart(ys, (out_dir / "sweep_accuracy.ppm").string());
    }

    std::ofstream f(out_dir / "report_summary.json");
    f << summary.dump(2) << "\n";
    return summary;
}

}  // namespace tiv

#endif
