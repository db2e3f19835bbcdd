#ifndef TIV_TEMPORAL_HPP
#define TIV_TEMPORAL_HPP

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/manifest.hpp"

namespace tiv {

// Mapping from frames to temporal classes (episodes): consecutive runs of
// round(segment_length_s * fps) frames over the chronological sequence.
struct TemporalLabeling {
    double segment_length_s = 0.0;
    double fps = 0.0;
    std::int64_t frames_per_class = 0;
    int n_classes = 0;
    std::vector<int> classes;            // aligned with manifest order; -1 = excluded
    std::vector<std::int64_t> frame_ids; // aligned with `classes`

    int class_of(std::int64_t frame_id) const {
        const auto it = index_.find(frame_id);
        if (it == index_.end())
            throw ContractError("TemporalLabeling: unknown frame id " + std::to_string(frame_id));
        return classes[it->second];
    }

    void build_index() {
        index_.clear();
        index_.reserve(frame_ids.size());
        for (std::size_t i = 0; i < frame_ids.size(); ++i) index_[frame_ids[i]] = i;
    }

private:
    std::unordered_map<std::int64_t, std::size_t> index_;
};

struct TemporalAssignOptions {
    // Restart episode segmentation at every recording boundary. Ids still
    // increase globally so the labeling stays monotone.
    bool reset_per_recording = false;
    // Drop the final partial episode instead of keeping it as its own class.
    bool drop_last_partial = false;
};

inline TemporalLabeling assign_temporal_classes(const Manifest& manifest,
                                                double segment_length_s,
                                                const TemporalAssignOptions& opt = {}) {
    if (manifest.empty()) throw DataError("assign_temporal_classes: empty manifest");
    const std::int64_t fpc =
        static_cast<std::int64_t>(std::llround(segment_length_s * manifest.fps));
    if (fpc < 1)
        throw ConfigError("assign_temporal_classes: segment_length_s * fps must be >= 1");

    TemporalLabeling lab;
    lab.segment_length_s = segment_length_s;
    lab.fps = manifest.fps;
    lab.frames_per_class = fpc;
    lab.classes.resize(manifest.size());
    lab.frame_ids.resize(manifest.size());

    int next_class = 0;
    std::int64_t within = 0;  // ordinal position inside the current segmentation run
    const std::string* prev_recording = nullptr;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& e = manifest.entries[i];
        if (opt.reset_per_recording && prev_recording && e.recording_id != *prev_recording) {
            if (within > 0) ++next_class;  // close the open episode of the previous file
            within = 0;
        }
        lab.frame_ids[i] = e.frame_id;
        lab.classes[i] = next_class;
        if (++within == fpc) {
            ++next_class;
            within = 0;
        }
        prev_recording = &e.recording_id;
    }
    lab.n_classes = (within > 0) ? next_class + 1 : next_class;

    if (opt.drop_last_partial && within > 0) {
        for (auto& c : lab.classes)
            if (c == next_class) c = -1;
        lab.n_classes = next_class;
    }

    lab.build_index();
    return lab;
}

}  // namespace tiv

#endif
