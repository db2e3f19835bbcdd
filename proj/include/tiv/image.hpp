#ifndef TIV_IMAGE_HPP
#define TIV_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tiv/errors.hpp"

namespace tiv {

// Planar (channel-major) image with values nominally in [0, 1].
// Frames on disk are 8-bit; everything in memory is real-valued.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;  // size = channels * height * width

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

inline Image image_from_u8(const std::uint8_t* bytes, int h, int w, int c) {
    Image img(h, w, c);
    const std::size_t n = img.size();
    for (std::size_t i = 0; i < n; ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

inline std::vector<std::uint8_t> image_to_u8(const Image& img) {
    std::vector<std::uint8_t> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

// Rec.601 luminance, also used by the grayscale augmentation.
inline double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

// --- PPM (binary P6) read/write. Lossless and dependency-free; used for
// image-directory recordings, attention-map export, and report plots.

inline void write_ppm(const std::string& path, const Image& img) {
    if (img.channels != 3) throw DataError("write_ppm: image must have 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_ppm: cannot open " + path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
                row[3 * x + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw DataError("write_ppm: short write to " + path);
}

inline Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_ppm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P6") throw DataError("read_ppm: not a binary PPM: " + path);
    auto next_int = [&f, &path]() {
        // skip whitespace and # comments
        int ch = f.peek();
        while (ch == '#' || std::isspace(ch)) {
            if (ch == '#') f.ignore(1 << 20, '\n');
            else f.get();
            ch = f.peek();
        }
        long v = -1;
        f >> v;
        if (!f || v < 0) throw DataError("read_ppm: bad header in " + path);
        return v;
    };
    const long w = next_int();
    const long h = next_int();
    const long maxval = next_int();
    if (maxval != 255) throw DataError("read_ppm: only maxval 255 supported: " + path);
    f.get();  // single whitespace after header
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() != static_cast<std::streamsize>(buf.size()))
        throw DataError("read_ppm: truncated pixel data in " + path);
    Image img(static_cast<int>(h), static_cast<int>(w), 3);
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, static_cast<int>(y), static_cast<int>(x)) =
                    buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
    return img;
}

}  // namespace tiv

#endif
