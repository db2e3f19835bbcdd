#ifndef TIV_SYNTH_HPP
#define TIV_SYNTH_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"
#include "tiv/manifest.hpp"
#include "tiv/rng.hpp"
#include "tiv/temporal.hpp"

namespace tiv {

// --- episodic world ----------------------------------------------------------
// A longitudinal stream of episodes, each with its own palette and texture
// signature. Within an episode the texture phase drifts smoothly and pixel
// noise is added, so frames are similar but not identical.

struct EpisodicWorldConfig {
    int n_episodes = 20;
    int frames_per_episode = 200;
    int image_size = 32;
    double drift_rate = 0.02;   // per-frame latent change magnitude
    double noise_sigma = 0.02;  // pixel noise
    double fps = 5.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_episodes < 1 || frames_per_episode < 1 || image_size < 4)
            throw ConfigError("episodic: sizes must be positive");
        if (drift_rate < 0.0 || noise_sigma < 0.0 || fps <= 0.0)
            throw ConfigError("episodic: rates must be non-negative, fps positive");
        // episode latents live on a unit scale; per-frame drift at or above it
        // would make episodes inseparable in principle
        if (drift_rate >= 1.0)
            throw ConfigError("episodic: drift_rate must be below the inter-episode scale");
    }
};

struct EpisodicDataset {
    std::vector<Image> frames;
    Manifest manifest;
    TemporalLabeling labeling;  // ground truth episode assignment
};

namespace synth_detail {

struct EpisodeLatent {
    double col_a[3], col_b[3], col_stripe[3];
    double theta;      // stripe orientation
    double freq;       // stripe spatial frequency (cycles per image)
    double phase0;
    double blob_x, blob_y, blob_r;
    double blob_col[3];
};

inline EpisodeLatent episode_latent(std::uint64_t seed, int episode) {
    Rng rng = Rng::stream(seed, 0x657069u, static_cast<std::uint64_t>(episode));
    EpisodeLatent l;
    for (double& v : l.col_a) v = rng.uniform(0.1, 0.9);
    for (double& v : l.col_b) v = rng.uniform(0.1, 0.9);
    for (double& v : l.col_stripe) v = rng.uniform(0.0, 1.0);
    l.theta = rng.uniform(0.0, M_PI);
    l.freq = rng.uniform(2.0, 6.0);
    l.phase0 = rng.uniform(0.0, 2.0 * M_PI);
    l.blob_x = rng.uniform(0.25, 0.75);
    l.blob_y = rng.uniform(0.25, 0.75);
    l.blob_r = rng.uniform(0.12, 0.22);
    for (double& v : l.blob_col) v = rng.uniform(0.0, 1.0);
    return l;
}

// latent coordinates used by the separability certificate
inline std::vector<double> latent_vector(const EpisodeLatent& l, double phase) {
    return {l.col_a[0], l.col_a[1], l.col_a[2], l.col_b[0],      l.col_b[1], l.col_b[2],
            l.col_stripe[0], l.col_stripe[1], l.col_stripe[2],
            std::cos(l.theta), std::sin(l.theta), l.freq / 6.0,
            0.2 * std::cos(phase), 0.2 * std::sin(phase), l.blob_x, l.blob_y};
}

inline double latent_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

}  // namespace synth_detail

inline EpisodicDataset generate_episodic(const EpisodicWorldConfig& cfg) {
    cfg.validate();
    EpisodicDataset out;
    const int s = cfg.image_size;
    const std::string recording = "episodic";

    std::vector<std::vector<double>> latents;
    std::vector<int> latent_episode;

    std::int64_t frame_id = 0;
    for (int ep = 0; ep < cfg.n_episodes; ++ep) {
        const auto lat = synth_detail::episode_latent(cfg.seed, ep);
        for (int i = 0; i < cfg.frames_per_episode; ++i) {
            const double phase = lat.phase0 + cfg.drift_rate * i * 2.0 * M_PI;
            Rng noise_rng = Rng::stream(cfg.seed, 0x6e6f6973u,
                                        static_cast<std::uint64_t>(frame_id));
            Image img(s, s, 3);
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    const double fx = (x + 0.5) / s, fy = (y + 0.5) / s;
                    const double wave =
                        0.5 + 0.5 * std::sin(2.0 * M_PI * lat.freq *
                                                 (fx * std::cos(lat.theta) +
                                                  fy * std::sin(lat.theta)) +
                                             phase);
                    const double dx = fx - lat.blob_x, dy = fy - lat.blob_y;
                    const bool in_blob = dx * dx + dy * dy <= lat.blob_r * lat.blob_r;
                    for (int c = 0; c < 3; ++c) {
                        double v = (1.0 - fy) * lat.col_a[c] + fy * lat.col_b[c];
                        v = 0.55 * v + 0.45 * (wave * lat.col_stripe[c]);
                        if (in_blob) v = 0.3 * v + 0.7 * lat.blob_col[c];
                        v += cfg.noise_sigma * noise_rng.normal();
                        img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
                    }
                }
            out.frames.push_back(std::move(img));

            FrameRecord rec;
            rec.frame_id = frame_id;
            rec.recording_id = recording;
            rec.timestamp_s = static_cast<double>(frame_id) / cfg.fps;
            char label[16];
            std::snprintf(label, sizeof(label), "ep%03d", ep);
            rec.label = label;
            out.manifest.entries.push_back(std::move(rec));

            latents.push_back(synth_detail::latent_vector(lat, phase));
            latent_episode.push_back(ep);
            ++frame_id;
        }
    }
    out.manifest.fps = cfg.fps;
    out.manifest.frame_height = s;
    out.manifest.frame_width = s;
    out.manifest.preprocessing = PreprocessParams{s, s, 0};

    // separability certificate: episodes must be farther apart than the
    // within-episode drift
    if (cfg.n_episodes > 1) {
        double intra = 0.0, inter = 0.0;
        long intra_n = 0, inter_n = 0;
        Rng pick = Rng::stream(cfg.seed, 0x63657274u);
        const std::size_t n = latents.size();
        for (int trial = 0; trial < 2000; ++trial) {
            const std::size_t a = pick.uniform_index(n);
            const std::size_t b = pick.uniform_index(n);
            if (a == b) continue;
            const double dist = synth_detail::latent_distance(latents[a], latents[b]);
            if (latent_episode[a] == latent_episode[b]) {
                intra += dist;
                ++intra_n;
            } else {
                inter += dist;
                ++inter_n;
            }
        }
        if (intra_n > 0 && inter_n > 0 && intra / intra_n >= inter / inter_n)
            throw ConfigError(
                "episodic: drift exceeds inter-episode distance; episodes not separable");
    }

    out.labeling = assign_temporal_classes(
        out.manifest, static_cast<double>(cfg.frames_per_episode) / cfg.fps);
    return out;
}

// --- shape world ---------------------------------------------------------------
// Labeled object fixture with exemplar ids. Classes are geometry families
// with a class hue prototype; exemplars jitter the prototype (hue, size,
// aspect), so color is informative but ambiguous between neighboring classes;
// views apply rotation/translation/scale. Frame order is class-major then
// exemplar-major, a natural "video" stream.

struct ShapeWorldConfig {
    int n_classes = 12;
    int exemplars_per_class = 30;
    int views_per_exemplar = 8;
    int image_size = 32;
    double fps = 5.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_classes < 1 || n_classes > 12)
            throw ConfigError("shapes: n_classes must be in [1,12]");
        if (exemplars_per_class < 2)
            throw ConfigError("shapes: need >= 2 exemplars per class for exemplar splits");
        if (views_per_exemplar < 1 || image_size < 8)
            throw ConfigError("shapes: sizes must be positive");
        if (fps <= 0.0) throw ConfigError("shapes: fps must be positive");
    }
};

struct ShapeDataset {
    std::vector<Image> frames;
    Manifest manifest;
};

namespace synth_detail {

inline const char* shape_name(int cls) {
    static const char* names[12] = {"disk", "ring",    "square", "triangle",
                                    "cross", "star",   "bar",    "ell",
                                    "tee",   "diamond", "frame",  "dots"};
    return names[cls];
}

// inside-test in the shape's local frame, |u|,|v| <~ 1
inline bool shape_inside(int cls, double u, double v) {
    switch (cls) {
        case 0: return u * u + v * v <= 1.0;
        case 1: {
            const double r = std::sqrt(u * u + v * v);
            return r >= 0.55 && r <= 1.0;
        }
        case 2: return std::max(std::fabs(u), std::fabs(v)) <= 0.85;
        case 3: return v >= -1.0 && v <= 1.0 && std::fabs(u) <= 0.9 * (1.0 + v) / 2.0;
        case 4: return (std::fabs(u) <= 0.3 && std::fabs(v) <= 1.0) ||
                       (std::fabs(v) <= 0.3 && std::fabs(u) <= 1.0);
        case 5: {
            const double a = std::fabs(u - v) / std::sqrt(2.0);
            const double b = std::fabs(u + v) / std::sqrt(2.0);
            return u * u + v * v <= 1.0 && (a <= 0.28 || b <= 0.28);
        }
        case 6: return std::fabs(v) <= 0.33 && std::fabs(u) <= 1.0;
        case 7: return (u >= -0.9 && u <= -0.35 && std::fabs(v) <= 0.9) ||
                       (v >= 0.35 && v <= 0.9 && std::fabs(u) <= 0.9);
        case 8: return (std::fabs(u) <= 0.9 && v >= -0.9 && v <= -0.35) ||
                       (std::fabs(u) <= 0.28 && std::fabs(v) <= 0.9);
        case 9: return std::fabs(u) + std::fabs(v) <= 1.0;
        case 10: {
            const double m = std::max(std::fabs(u), std::fabs(v));
            return m >= 0.55 && m <= 0.9;
        }
        default: {
            for (double cu : {-0.5, 0.5})
                for (double cv : {-0.5, 0.5})
                    if ((u - cu) * (u - cu) + (v - cv) * (v - cv) <= 0.32 * 0.32) return true;
            return false;
        }
    }
}

inline void hsv_color(double h, double s, double v, double out[3]) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (i) {
        case 0: out[0] = v; out[1] = t; out[2] = p; break;
        case 1: out[0] = q; out[1] = v; out[2] = p; break;
        case 2: out[0] = p; out[1] = v; out[2] = t; break;
        case 3: out[0] = p; out[1] = q; out[2] = v; break;
        case 4: out[0] = t; out[1] = p; out[2] = v; break;
        default: out[0] = v; out[1] = p; out[2] = q; break;
    }
}

}  // namespace synth_detail

inline ShapeDataset generate_shapes(const ShapeWorldConfig& cfg) {
    cfg.validate();
    ShapeDataset out;
    const int s = cfg.image_size;

    std::int64_t frame_id = 0;
    for (int cls = 0; cls < cfg.n_classes; ++cls) {
        for (int ex = 0; ex < cfg.exemplars_per_class; ++ex) {
            Rng ex_rng = Rng::stream(cfg.seed, 0x6578u,
                                     static_cast<std::uint64_t>(cls) * 100000 + ex);
            const double proto_hue = (cls + 0.5) / cfg.n_classes;
            const double hue = proto_hue + ex_rng.uniform(-0.15, 0.15);
            double shape_col[3];
            synth_detail::hsv_color(std::fmod(hue + 1.0, 1.0), ex_rng.uniform(0.5, 0.95),
                                    ex_rng.uniform(0.55, 0.95), shape_col);
            const double base_size = ex_rng.uniform(0.5, 0.75);
            const double aspect = ex_rng.uniform(0.8, 1.25);

            for (int view = 0; view < cfg.views_per_exemplar; ++view) {
                Rng vrng = Rng::stream(cfg.seed, 0x7669u,
                                       static_cast<std::uint64_t>(cls) * 100000 + ex,
                                       static_cast<std::uint64_t>(view));
                const double rot = vrng.uniform(-0.35, 0.35);
                const double tx = vrng.uniform(-0.15, 0.15);
                const double ty = vrng.uniform(-0.15, 0.15);
                const double scale = base_size * vrng.uniform(0.8, 1.2);
                const double bg_level = vrng.uniform(0.25, 0.5);
                const double value_jitter = vrng.uniform(0.85, 1.1);

                Image img(s, s, 3);
                const double cosr = std::cos(rot), sinr = std::sin(rot);
                for (int y = 0; y < s; ++y)
                    for (int x = 0; x < s; ++x) {
                        // 2x2 supersampling for soft edges
                        double alpha = 0.0;
                        for (int sy = 0; sy < 2; ++sy)
                            for (int sx = 0; sx < 2; ++sx) {
                                const double fx =
                                    (x + 0.25 + 0.5 * sx) / s * 2.0 - 1.0 - tx;
                                const double fy =
                                    (y + 0.25 + 0.5 * sy) / s * 2.0 - 1.0 - ty;
                                const double u = (cosr * fx + sinr * fy) / (scale * aspect);
                                const double v = (-sinr * fx + cosr * fy) / (scale / aspect);
                                if (synth_detail::shape_inside(cls, u, v)) alpha += 0.25;
                            }
                        const double bg =
                            bg_level + 0.08 * vrng.normal();
                        for (int c = 0; c < 3; ++c) {
                            const double fg = std::clamp(shape_col[c] * value_jitter, 0.0, 1.0);
                            img.at(c, y, x) =
                                std::clamp(alpha * fg + (1.0 - alpha) * bg, 0.0, 1.0);
                        }
                    }
                out.frames.push_back(std::move(img));

                FrameRecord rec;
                rec.frame_id = frame_id;
                rec.recording_id = "shapes";
                rec.timestamp_s = static_cast<double>(frame_id) / cfg.fps;
                rec.label = synth_detail::shape_name(cls);
                char exemplar[24];
                std::snprintf(exemplar, sizeof(exemplar), "c%02de%03d", cls, ex);
                rec.exemplar_id = exemplar;
                out.manifest.entries.push_back(std::move(rec));
                ++frame_id;
            }
        }
    }
    out.manifest.fps = cfg.fps;
    out.manifest.frame_height = s;
    out.manifest.frame_width = s;
    out.manifest.preprocessing = PreprocessParams{s, s, 0};
    return out;
}

}  // namespace tiv

#endif
