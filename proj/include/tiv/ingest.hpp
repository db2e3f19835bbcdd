#ifndef TIV_INGEST_HPP
#define TIV_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"
#include "tiv/manifest.hpp"
#include "tiv/resize.hpp"
#include "tiv/shards.hpp"

namespace tiv {

struct RawRecording {
    std::string id;
    std::string uri;       // directory of PPM frames, lexicographic = native order
    double native_fps = 0.0;
    double duration_s = 0.0;  // 0 = derive from frame count
    std::string child_tag;

    void validate() const {
        if (id.empty()) throw ConfigError("recording: empty id");
        if (native_fps <= 0.0) throw ConfigError("recording " + id + ": native_fps must be > 0");
    }
};

struct SampledFrame {
    double timestamp_s = 0.0;
    std::int64_t native_index = 0;
    Image image;
};

// Reads frames by native index. Keeps the sampler independent of where the
// pixels come from (image directories, procedural streams, tests).
struct FrameSource {
    std::int64_t native_frame_count = 0;
    std::function<Image(std::int64_t)> fetch;
};

inline FrameSource open_image_dir(const RawRecording& rec) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(rec.uri))
        throw DataError("decode error: recording " + rec.id + ": unreadable source " + rec.uri);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(rec.uri))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            files.push_back(entry.path().string());
    if (files.empty())
        throw DataError("decode error: recording " + rec.id + ": no frames in " + rec.uri);
    std::sort(files.begin(), files.end());
    FrameSource src;
    src.native_frame_count = static_cast<std::int64_t>(files.size());
    src.fetch = [files, id = rec.id](std::int64_t i) {
        try {
            return read_ppm(files.at(static_cast<std::size_t>(i)));
        } catch (const DataError& e) {
            throw DataError("decode error: recording " + id + ": " + e.what());
        }
    };
    return src;
}

// Uniform sampling at target_fps with nearest-native-frame selection.
// Emits timestamps k / target_fps for k = 0, 1, ... while t < duration.
inline std::vector<SampledFrame> decode_and_sample(const RawRecording& rec,
                                                   const FrameSource& src, double target_fps) {
    rec.validate();
    if (target_fps <= 0.0)
        throw ConfigError("decode_and_sample: target_fps must be > 0");
    if (target_fps > rec.native_fps)
        throw ConfigError("decode_and_sample: target_fps " + std::to_string(target_fps) +
                          " exceeds native_fps of recording " + rec.id);
    if (src.native_frame_count < 1)
        throw DataError("decode error: recording " + rec.id + ": empty source");

    const double duration =
        rec.duration_s > 0.0 ? rec.duration_s
                             : static_cast<double>(src.native_frame_count) / rec.native_fps;

    std::vector<SampledFrame> out;
    for (std::int64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) / target_fps;
        if (t >= duration) break;
        SampledFrame sf;
        sf.timestamp_s = t;
        sf.native_index = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::llround(t * rec.native_fps)), 0,
            src.native_frame_count - 1);
        sf.image = src.fetch(sf.native_index);
        out.push_back(std::move(sf));
    }
    return out;
}

struct IngestConfig {
    double target_fps = 1.0;
    PreprocessParams preprocessing;
    std::size_t shard_size = 4096;
    int workers = 1;
};

struct IngestResult {
    Manifest manifest;
};

// Decodes and preprocesses every recording, then writes shards and the merged
// manifest under out_dir. Recordings decode in parallel; the merged order is
// sorted by recording id (then timestamp), never arrival order.
inline IngestResult ingest_recordings(std::vector<RawRecording> recordings,
                                      const IngestConfig& cfg,
                                      const std::filesystem::path& out_dir,
                                      const std::function<FrameSource(const RawRecording&)>&
                                          open_source = open_image_dir) {
    if (recordings.empty()) throw DataError("ingest: no recordings given");
    for (const auto& r : recordings) r.validate();
    std::sort(recordings.begin(), recordings.end(),
              [](const RawRecording& a, const RawRecording& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < recordings.size(); ++i)
        if (recordings[i].id == recordings[i - 1].id)
            throw ConfigError("ingest: duplicate recording id " + recordings[i].id);

    const int workers = std::max(1, cfg.workers);
    std::vector<std::vector<SampledFrame>> decoded(recordings.size());
    std::vector<std::future<void>> pending;
    std::size_t next = 0;
    while (next < recordings.size() || !pending.empty()) {
        while (next < recordings.size() && pending.size() < static_cast<std::size_t>(workers)) {
            const std::size_t i = next++;
            pending.push_back(std::async(std::launch::async, [&, i]() {
                auto frames = decode_and_sample(recordings[i], open_source(recordings[i]),
                                                cfg.target_fps);
                for (auto& f : frames) f.image = preprocess_frame(f.image, cfg.preprocessing);
                decoded[i] = std::move(frames);
            }));
        }
        pending.front().get();
        pending.erase(pending.begin());
    }

    std::filesystem::create_directories(out_dir);
    ShardWriter writer(out_dir, "frames", cfg.preprocessing.crop, cfg.preprocessing.crop, 3,
                       cfg.shard_size);
    IngestResult result;
    result.manifest.fps = cfg.target_fps;
    result.manifest.preprocessing = cfg.preprocessing;
    result.manifest.frame_height = cfg.preprocessing.crop;
    result.manifest.frame_width = cfg.preprocessing.crop;

    std::int64_t frame_id = 0;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        for (auto& f : decoded[i]) {
            const auto loc = writer.add(image_to_u8(f.image));
            FrameRecord rec;
            rec.frame_id = frame_id++;
            rec.recording_id = recordings[i].id;
            rec.timestamp_s = f.timestamp_s;
            rec.shard_path = loc.shard_path;
            rec.shard_offset = loc.offset;
            result.manifest.entries.push_back(std::move(rec));
        }
    }
    writer.finish();
    result.manifest.validate();
    save_manifest(result.manifest, (out_dir / "manifest.jsonl").string());
    return result;
}

}  // namespace tiv

#endif
