#ifndef TIV_CURATE_HPP
#define TIV_CURATE_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/manifest.hpp"

namespace tiv {

// One annotated span: frames of `recording_id` with timestamp in
// [t_start_s, t_end_s) carry these labels. Only the first label is used.
struct AnnotationCell {
    std::string recording_id;
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    std::vector<std::string> labels;
};

struct CurateParams {
    int top_k = 30;      // keep this many most frequent classes
    int drop_top = 2;    // then drop this many most frequent of those
    int min_frames = 100;
    std::unordered_map<std::string, std::string> synonyms;  // normalized -> canonical
};

inline std::string normalize_label(std::string s,
                                   const std::unordered_map<std::string, std::string>& synonyms) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto it = synonyms.find(s);
    return it != synonyms.end() ? it->second : s;
}

// Two-column text file: "<variant> <canonical>" per line; '#' starts a comment.
inline std::unordered_map<std::string, std::string> load_synonyms(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("load_synonyms: cannot open " + path);
    std::unordered_map<std::string, std::string> table;
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        std::string from, to;
        if (ss >> from >> to) table[from] = to;
    }
    return table;
}

// Applies the curation rule pipeline: first label per cell, normalization,
// keep top_k classes, drop the drop_top most frequent of those, drop classes
// under min_frames. Returns the manifest restricted to surviving frames.
inline Manifest curate_labels(const Manifest& manifest,
                              const std::vector<AnnotationCell>& cells,
                              const CurateParams& params) {
    if (params.min_frames < 1) throw ConfigError("curate_labels: min_frames must be >= 1");
    if (params.top_k < 0 || params.drop_top < 0)
        throw ConfigError("curate_labels: top_k and drop_top must be >= 0");

    // Assign each frame the label of the first matching cell.
    std::vector<std::string> frame_label(manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& e = manifest.entries[i];
        for (const auto& cell : cells) {
            if (cell.labels.empty()) continue;
            if (cell.recording_id != e.recording_id) continue;
            if (e.timestamp_s < cell.t_start_s || e.timestamp_s >= cell.t_end_s) continue;
            frame_label[i] = normalize_label(cell.labels.front(), params.synonyms);
            break;
        }
    }

    std::map<std::string, std::int64_t> counts;
    for (const auto& l : frame_label)
        if (!l.empty()) ++counts[l];

    // Rank by count descending, label ascending for determinism.
    std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > static_cast<std::size_t>(params.top_k)) ranked.resize(params.top_k);
    if (ranked.size() > static_cast<std::size_t>(params.drop_top))
        ranked.erase(ranked.begin(), ranked.begin() + params.drop_top);
    else
        ranked.clear();

    std::vector<std::string> survivors;
    for (const auto& [label, n] : ranked)
        if (n >= params.min_frames) survivors.push_back(label);

    Manifest out;
    out.fps = manifest.fps;
    out.preprocessing = manifest.preprocessing;
    out.frame_height = manifest.frame_height;
    out.frame_width = manifest.frame_width;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (frame_label[i].empty()) continue;
        if (std::find(survivors.begin(), survivors.end(), frame_label[i]) == survivors.end())
            continue;
        FrameRecord rec = manifest.entries[i];
        rec.label = frame_label[i];
        out.entries.push_back(std::move(rec));
    }
    return out;
}

}  // namespace tiv

#endif
