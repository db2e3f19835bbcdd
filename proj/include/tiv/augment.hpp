#ifndef TIV_AUGMENT_HPP
#define TIV_AUGMENT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"
#include "tiv/rng.hpp"

namespace tiv {

struct AugmentConfig {
    double jitter_prob = 0.8;
    double brightness = 0.8;
    double saturation = 0.8;
    double contrast = 0.8;
    double hue = 0.2;           // fraction of the hue circle, <= 0.5
    double grayscale_prob = 0.2;
    bool enabled = true;

    void validate() const {
        const auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob_ok(jitter_prob) || !prob_ok(grayscale_prob))
            throw ConfigError("augment: probabilities must be in [0,1]");
        if (brightness < 0.0 || contrast < 0.0 || saturation < 0.0 || hue < 0.0)
            throw ConfigError("augment: strengths must be >= 0");
        if (hue > 0.5) throw ConfigError("augment: hue strength must be <= 0.5");
    }
};

struct NormalizationConstants {
    std::array<double, 3> mean = {0.485, 0.456, 0.406};
    std::array<double, 3> std = {0.229, 0.224, 0.225};

    void validate() const {
        for (double s : std)
            if (s <= 0.0) throw ConfigError("normalize: std components must be > 0");
    }
};

namespace augment_detail {

// h in [0,1), s,v in [0,1]
inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double maxc = std::max({r, g, b});
    const double minc = std::min({r, g, b});
    v = maxc;
    const double delta = maxc - minc;
    s = maxc > 0.0 ? delta / maxc : 0.0;
    if (delta <= 0.0) {
        h = 0.0;
        return;
    }
    if (maxc == r) h = std::fmod((g - b) / delta, 6.0);
    else if (maxc == g) h = (b - r) / delta + 2.0;
    else h = (r - g) / delta + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

inline void apply_brightness(Image& img, double f) {
    for (auto& v : img.data) v = std::clamp(v * f, 0.0, 1.0);
}

inline void apply_contrast(Image& img, double f) {
    // blend toward the mean luminance of the whole image
    double mean = 0.0;
    const int n = img.height * img.width;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            mean += luminance(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
    mean /= n;
    for (auto& v : img.data) v = std::clamp(f * v + (1.0 - f) * mean, 0.0, 1.0);
}

inline void apply_saturation(Image& img, double f) {
    // blend toward the per-pixel luminance; achromatic pixels are fixed points
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double l = luminance(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = std::clamp(f * img.at(c, y, x) + (1.0 - f) * l, 0.0, 1.0);
        }
}

inline void apply_hue(Image& img, double shift) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double h, s, v;
            rgb_to_hsv(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x), h, s, v);
            h = std::fmod(h + shift + 1.0, 1.0);
            hsv_to_rgb(h, s, v, img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
        }
}

}  // namespace augment_detail

// With probability jitter_prob applies brightness / contrast / saturation
// scaling and hue rotation in a random order. Factors are drawn even when a
// strength is zero so the rng stream layout does not depend on the config.
inline Image color_jitter(const Image& input, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    if (input.channels != 3) throw ContractError("color_jitter: 3-channel image required");
    Image img = input;
    if (!rng.bernoulli(cfg.jitter_prob)) return img;

    std::array<int, 4> order = {0, 1, 2, 3};
    std::vector<int> perm(order.begin(), order.end());
    rng.shuffle(perm);
    for (int op : perm) {
        switch (op) {
            case 0: {
                const double f = rng.uniform(std::max(0.0, 1.0 - cfg.brightness), 1.0 + cfg.brightness);
                if (cfg.brightness > 0.0) augment_detail::apply_brightness(img, f);
                break;
            }
            case 1: {
                const double f = rng.uniform(std::max(0.0, 1.0 - cfg.contrast), 1.0 + cfg.contrast);
                if (cfg.contrast > 0.0) augment_detail::apply_contrast(img, f);
                break;
            }
            case 2: {
                const double f = rng.uniform(std::max(0.0, 1.0 - cfg.saturation), 1.0 + cfg.saturation);
                if (cfg.saturation > 0.0) augment_detail::apply_saturation(img, f);
                break;
            }
            default: {
                const double shift = rng.uniform(-cfg.hue, cfg.hue);
                if (cfg.hue > 0.0) augment_detail::apply_hue(img, shift);
                break;
            }
        }
    }
    return img;
}

inline Image random_grayscale(const Image& input, double p, Rng& rng) {
    if (input.channels != 3) throw ContractError("random_grayscale: 3-channel image required");
    Image img = input;
    if (!rng.bernoulli(p)) return img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double l = luminance(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
            img.at(0, y, x) = l;
            img.at(1, y, x) = l;
            img.at(2, y, x) = l;
        }
    return img;
}

// Per-channel standardization; output is no longer restricted to [0,1].
inline Image normalize(const Image& input, const NormalizationConstants& k = {}) {
    k.validate();
    if (input.channels != 3) throw ContractError("normalize: 3-channel image required");
    Image img = input;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                img.at(c, y, x) = (img.at(c, y, x) - k.mean[c]) / k.std[c];
    return img;
}

// The stochastic part of the pipeline (jitter + grayscale). Normalization is
// applied separately by the training/eval loaders. With enabled=false this is
// the identity, so the full chain reduces to normalize alone.
inline Image augment_frame(const Image& input, const AugmentConfig& cfg, Rng& rng) {
    if (!cfg.enabled) return input;
    Image img = color_jitter(input, cfg, rng);
    return random_grayscale(img, cfg.grayscale_prob, rng);
}

}  // namespace tiv

#endif
