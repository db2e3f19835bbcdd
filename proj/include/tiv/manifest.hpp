#ifndef TIV_MANIFEST_HPP
#define TIV_MANIFEST_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiv/errors.hpp"
#include "tiv/resize.hpp"

namespace tiv {

// Metadata for one preprocessed frame. Pixels live in shards, not here.
struct FrameRecord {
    std::int64_t frame_id = 0;  // global, monotone in chronological order
    std::string recording_id;
    double timestamp_s = 0.0;
    std::optional<std::string> label;
    std::optional<std::string> exemplar_id;
    std::string shard_path;        // relative to the manifest's directory
    std::uint64_t shard_offset = 0;  // byte offset of the frame blob in the shard
};

struct Manifest {
    std::vector<FrameRecord> entries;
    double fps = 0.0;  // sampling rate the frames were taken at
    PreprocessParams preprocessing;
    int frame_height = 224;
    int frame_width = 224;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    // Manifest invariants: chronological order per recording, strictly
    // increasing frame ids, positive fps.
    void validate() const {
        if (fps <= 0.0) throw DataError("manifest: fps must be positive");
        for (std::size_t i = 1; i < entries.size(); ++i) {
            if (entries[i].frame_id <= entries[i - 1].frame_id)
                throw DataError("manifest: frame_ids not strictly increasing at row " +
                                std::to_string(i));
            if (entries[i].recording_id == entries[i - 1].recording_id &&
                entries[i].timestamp_s < entries[i - 1].timestamp_s)
                throw DataError("manifest: timestamps out of order within recording " +
                                entries[i].recording_id);
        }
        for (const auto& e : entries)
            if (e.timestamp_s < 0.0)
                throw DataError("manifest: negative timestamp for frame " +
                                std::to_string(e.frame_id));
    }
};

// Line-delimited format: first line is a header object with fps and
// preprocessing parameters, every following line is one frame record.
inline void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("save_manifest: cannot open " + path);
    nlohmann::json header = {
        {"fps", m.fps},
        {"frame_height", m.frame_height},
        {"frame_width", m.frame_width},
        {"preprocessing",
         {{"minor_edge", m.preprocessing.minor_edge},
          {"crop", m.preprocessing.crop},
          {"shift_up", m.preprocessing.shift_up}}},
    };
    f << header.dump() << "\n";
    for (const auto& e : m.entries) {
        nlohmann::json rec = {
            {"frame_id", e.frame_id},
            {"recording_id", e.recording_id},
            {"timestamp_s", e.timestamp_s},
            {"label", e.label ? nlohmann::json(*e.label) : nlohmann::json(nullptr)},
            {"exemplar_id", e.exemplar_id ? nlohmann::json(*e.exemplar_id) : nlohmann::json(nullptr)},
            {"shard_path", e.shard_path},
            {"shard_offset", e.shard_offset},
        };
        f << rec.dump() << "\n";
    }
    if (!f) throw DataError("save_manifest: short write to " + path);
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("load_manifest: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("load_manifest: empty file " + path);
    Manifest m;
    try {
        const auto header = nlohmann::json::parse(line);
        m.fps = header.at("fps").get<double>();
        m.frame_height = header.value("frame_height", 224);
        m.frame_width = header.value("frame_width", 224);
        const auto& pp = header.at("preprocessing");
        m.preprocessing.minor_edge = pp.at("minor_edge").get<int>();
        m.preprocessing.crop = pp.at("crop").get<int>();
        m.preprocessing.shift_up = pp.at("shift_up").get<int>();
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            FrameRecord e;
            e.frame_id = rec.at("frame_id").get<std::int64_t>();
            e.recording_id = rec.at("recording_id").get<std::string>();
            e.timestamp_s = rec.at("timestamp_s").get<double>();
            if (!rec.at("label").is_null()) e.label = rec.at("label").get<std::string>();
            if (!rec.at("exemplar_id").is_null())
                e.exemplar_id = rec.at("exemplar_id").get<std::string>();
            e.shard_path = rec.at("shard_path").get<std::string>();
            e.shard_offset = rec.at("shard_offset").get<std::uint64_t>();
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError("load_manifest: malformed record in " + path + ": " + ex.what());
    }
    m.validate();
    return m;
}

}  // namespace tiv

#endif
