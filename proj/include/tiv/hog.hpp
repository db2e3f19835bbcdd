#ifndef TIV_HOG_HPP
#define TIV_HOG_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"

namespace tiv {

struct HogConfig {
    int orientations = 9;
    int cell_px = 16;
    int block_cells = 3;
    bool signed_gradients = false;  // unsigned: bins over [0, 180)

    void validate() const {
        if (orientations < 1 || cell_px < 1 || block_cells < 1)
            throw ConfigError("hog: all sizes must be >= 1");
        if (signed_gradients) throw ConfigError("hog: signed gradients not supported");
    }
};

inline long hog_feature_length(int h, int w, const HogConfig& cfg = {}) {
    const long cy = h / cfg.cell_px;
    const long cx = w / cfg.cell_px;
    const long by = cy - cfg.block_cells + 1;
    const long bx = cx - cfg.block_cells + 1;
    if (by < 1 || bx < 1) return 0;
    return by * bx * cfg.block_cells * cfg.block_cells * cfg.orientations;
}

// Unsigned gradient-orientation histograms per cell, grouped into overlapping
// block_cells x block_cells blocks with stride one cell, each block
// L2-normalized (zero-norm blocks stay zero), concatenated row-major.
// Multichannel images use, per pixel, the channel with the largest gradient
// magnitude. Gradients are central differences, one-sided at the borders.
inline Eigen::VectorXd hog_features(const Image& img, const HogConfig& cfg = {}) {
    cfg.validate();
    const int h = img.height, w = img.width;
    if (h < cfg.block_cells * cfg.cell_px || w < cfg.block_cells * cfg.cell_px)
        throw ConfigError("hog: image smaller than one block");

    // per-pixel dominant-channel gradient
    std::vector<double> gy(static_cast<std::size_t>(h) * w), gx(gy.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double best_mag2 = -1.0, best_gy = 0.0, best_gx = 0.0;
            for (int c = 0; c < img.channels; ++c) {
                double dy, dx;
                if (y == 0) dy = img.at(c, 1, x) - img.at(c, 0, x);
                else if (y == h - 1) dy = img.at(c, y, x) - img.at(c, y - 1, x);
                else dy = (img.at(c, y + 1, x) - img.at(c, y - 1, x)) / 2.0;
                if (x == 0) dx = img.at(c, y, 1) - img.at(c, y, 0);
                else if (x == w - 1) dx = img.at(c, y, x) - img.at(c, y, x - 1);
                else dx = (img.at(c, y, x + 1) - img.at(c, y, x - 1)) / 2.0;
                const double mag2 = dy * dy + dx * dx;
                if (mag2 > best_mag2) {
                    best_mag2 = mag2;
                    best_gy = dy;
                    best_gx = dx;
                }
            }
            gy[static_cast<std::size_t>(y) * w + x] = best_gy;
            gx[static_cast<std::size_t>(y) * w + x] = best_gx;
        }

    const int cy = h / cfg.cell_px;
    const int cx = w / cfg.cell_px;
    const int nb = cfg.orientations;
    std::vector<double> hist(static_cast<std::size_t>(cy) * cx * nb, 0.0);
    const double bin_deg = 180.0 / nb;
    for (int y = 0; y < cy * cfg.cell_px; ++y)
        for (int x = 0; x < cx * cfg.cell_px; ++x) {
            const double dy = gy[static_cast<std::size_t>(y) * w + x];
            const double dx = gx[static_cast<std::size_t>(y) * w + x];
            const double mag = std::hypot(dy, dx);
            if (mag == 0.0) continue;
            double angle = std::atan2(dy, dx) * 180.0 / M_PI;
            angle = std::fmod(angle + 360.0, 180.0);
            int bin = static_cast<int>(angle / bin_deg);
            if (bin >= nb) bin = nb - 1;
            const int ci = (y / cfg.cell_px) * cx + (x / cfg.cell_px);
            hist[static_cast<std::size_t>(ci) * nb + bin] += mag;
        }

    const int by = cy - cfg.block_cells + 1;
    const int bx = cx - cfg.block_cells + 1;
    const int block_len = cfg.block_cells * cfg.block_cells * nb;
    Eigen::VectorXd out(static_cast<long>(by) * bx * block_len);
    long pos = 0;
    for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x) {
            double norm2 = 0.0;
            for (int dy = 0; dy < cfg.block_cells; ++dy)
                for (int dx = 0; dx < cfg.block_cells; ++dx) {
                    const int ci = (y + dy) * cx + (x + dx);
                    for (int b = 0; b < nb; ++b) {
                        const double v = hist[static_cast<std::size_t>(ci) * nb + b];
                        norm2 += v * v;
                    }
                }
            const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
            for (int dy = 0; dy < cfg.block_cells; ++dy)
                for (int dx = 0; dx < cfg.block_cells; ++dx) {
                    const int ci = (y + dy) * cx + (x + dx);
                    for (int b = 0; b < nb; ++b)
                        out[pos++] = hist[static_cast<std::size_t>(ci) * nb + b] * inv;
                }
        }
    return out;
}

}  // namespace tiv

#endif
