#ifndef TIV_PLOTS_HPP
#define TIV_PLOTS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tiv/image.hpp"

namespace tiv {

// Minimal chart rendering to PPM for the batch `report` step. Axes are drawn
// as plain lines; no text labels (values live in the TSV/JSON next to the
// plot).

struct PlotSeries {
    std::vector<double> x;
    std::vector<double> y;
    double color[3] = {0.15, 0.35, 0.8};
};

inline void render_line_chart(const std::vector<PlotSeries>& series, const std::string& path,
                              int width = 480, int height = 320) {
    Image img(height, width, 3);
    for (auto& v : img.data) v = 1.0;

    const int margin = 24;
    const auto draw_px = [&](int x, int y, const double* col) {
        if (x < 0 || x >= width || y < 0 || y >= height) return;
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = col[c];
    };
    const double axis_col[3] = {0.2, 0.2, 0.2};
    for (int x = margin; x < width - margin; ++x) draw_px(x, height - margin, axis_col);
    for (int y = margin; y < height - margin; ++y) draw_px(margin, y, axis_col);

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;

    const auto to_px = [&](double x, double y) {
        const int px = margin + static_cast<int>(std::lround(
                                    (x - xmin) / (xmax - xmin) * (width - 2 * margin)));
        const int py = height - margin -
                       static_cast<int>(std::lround(
                           (y - ymin) / (ymax - ymin) * (height - 2 * margin)));
        return std::pair<int, int>(px, py);
    };

    for (const auto& s : series)
        for (std::size_t i = 1; i < s.x.size(); ++i) {
            auto [x0, y0] = to_px(s.x[i - 1], s.y[i - 1]);
            auto [x1, y1] = to_px(s.x[i], s.y[i]);
            const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
            for (int t = 0; t <= steps; ++t) {
                const int x = x0 + (x1 - x0) * t / steps;
                const int y = y0 + (y1 - y0) * t / steps;
                draw_px(x, y, s.color);
                draw_px(x, y + 1, s.color);
            }
        }
    write_ppm(path, img);
}

inline void render_bar_chart(const std::vector<double>& values, const std::string& path,
                             int width = 480, int height = 320) {
    Image img(height, width, 3);
    for (auto& v : img.data) v = 1.0;
    if (values.empty()) {
        write_ppm(path, img);
        return;
    }
    const int margin = 24;
    const double vmax = std::max(1e-12, *std::max_element(values.begin(), values.end()));
    const int plot_w = width - 2 * margin;
    const int bar_w = std::max(1, plot_w / static_cast<int>(values.size()));
    const double col[3] = {0.2, 0.5, 0.3};
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int h = static_cast<int>(std::lround(
            std::max(0.0, values[i]) / vmax * (height - 2 * margin)));
        for (int x = 0; x < bar_w - 1; ++x)
            for (int y = 0; y < h; ++y) {
                const int px = margin + static_cast<int>(i) * bar_w + x;
                const int py = height - margin - 1 - y;
                if (px < width - margin && py >= margin)
                    for (int c = 0; c < 3; ++c) img.at(c, py, px) = col[c];
            }
    }
    write_ppm(path, img);
}

}  // namespace tiv

#endif
