#ifndef TIV_RESIZE_HPP
#define TIV_RESIZE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"

namespace tiv {

// Keys cubic convolution kernel with a = -0.5 (the common "bicubic").
inline double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

namespace detail {

// Precomputed taps for one output coordinate along one axis.
struct CubicTaps {
    int idx[4];
    double w[4];
};

inline std::vector<CubicTaps> make_taps(int src_size, int dst_size) {
    std::vector<CubicTaps> taps(static_cast<std::size_t>(dst_size));
    const double scale = static_cast<double>(src_size) / dst_size;
    for (int i = 0; i < dst_size; ++i) {
        const double src = (i + 0.5) * scale - 0.5;
        const int base = static_cast<int>(std::floor(src)) - 1;
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double t = src - (base + k);
            taps[i].idx[k] = std::clamp(base + k, 0, src_size - 1);
            taps[i].w[k] = cubic_weight(t);
            sum += taps[i].w[k];
        }
        // renormalize so constant inputs stay constant
        for (double& wk : taps[i].w) wk /= sum;
    }
    return taps;
}

}  // namespace detail

// Separable bicubic resize. Values are not clamped; callers that need a
// bounded range clamp themselves.
inline Image resize_bicubic(const Image& src, int out_h, int out_w) {
    if (src.height < 1 || src.width < 1 || src.channels < 1)
        throw DataError("resize_bicubic: empty input image");
    if (out_h < 1 || out_w < 1) throw ConfigError("resize_bicubic: output size must be positive");
    if (out_h == src.height && out_w == src.width) return src;

    const auto tx = detail::make_taps(src.width, out_w);
    const auto ty = detail::make_taps(src.height, out_h);

    Image tmp(src.height, out_w, src.channels);
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < out_w; ++x) {
                const auto& t = tx[static_cast<std::size_t>(x)];
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.w[k] * src.at(c, y, t.idx[k]);
                tmp.at(c, y, x) = acc;
            }

    Image dst(out_h, out_w, src.channels);
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < out_h; ++y) {
            const auto& t = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.w[k] * tmp.at(c, t.idx[k], x);
                dst.at(c, y, x) = acc;
            }
        }
    return dst;
}

struct PreprocessParams {
    int minor_edge = 256;  // resize target for the shorter image edge
    int crop = 224;
    int shift_up = 16;     // crop window translation toward the top of the frame
};

// Resize so the minor edge equals `minor_edge`, then take the crop x crop
// window centered horizontally and shifted `shift_up` pixels above center.
inline Image preprocess_frame(const Image& raw, const PreprocessParams& p = {}) {
    if (raw.channels != 3)
        throw DataError("preprocess_frame: expected 3 channels, got " + std::to_string(raw.channels));
    if (raw.height < 1 || raw.width < 1)
        throw DataError("preprocess_frame: image smaller than 1x1");

    Image resized;
    if (std::min(raw.height, raw.width) == p.minor_edge) {
        resized = raw;
    } else if (raw.height <= raw.width) {
        const int new_w = static_cast<int>(std::lround(
            static_cast<double>(raw.width) * p.minor_edge / raw.height));
        resized = resize_bicubic(raw, p.minor_edge, std::max(new_w, 1));
    } else {
        const int new_h = static_cast<int>(std::lround(
            static_cast<double>(raw.height) * p.minor_edge / raw.width));
        resized = resize_bicubic(raw, std::max(new_h, 1), p.minor_edge);
    }

    if (resized.height < p.crop || resized.width < p.crop)
        throw ConfigError("preprocess_frame: crop larger than resized image");

    int top = (resized.height - p.crop) / 2 - p.shift_up;
    top = std::clamp(top, 0, resized.height - p.crop);
    const int left = (resized.width - p.crop) / 2;

    Image out(p.crop, p.crop, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < p.crop; ++y)
            for (int x = 0; x < p.crop; ++x)
                out.at(c, y, x) = std::clamp(resized.at(c, top + y, left + x), 0.0, 1.0);
    return out;
}

}  // namespace tiv

#endif
