#ifndef TIV_CONFIG_HPP
#define TIV_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiv/errors.hpp"

namespace tiv {

// Run configuration: a hierarchical JSON document with an "include" list.
// Included files merge first (later files override earlier, the including
// document overrides all); unknown keys anywhere are rejected. CLI flags are
// merged on top by the tool.

namespace config_detail {

inline void deep_merge(nlohmann::json& base, const nlohmann::json& overlay) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (const auto& [key, value] : overlay.items()) {
        if (base.contains(key) && base[key].is_object() && value.is_object())
            deep_merge(base[key], value);
        else
            base[key] = value;
    }
}

// allowed-key tree: object nodes list their children; leaves accept anything
inline const nlohmann::json& config_schema() {
    static const nlohmann::json schema = {
        {"seed", true},
        {"output_dir", true},
        {"workers", true},
        {"data",
         {{"kind", true},
          {"path", true},
          {"fps", true},
          {"shard_size", true},
          {"recordings", true},
          {"preprocessing", {{"minor_edge", true}, {"crop", true}, {"shift_up", true}}},
          {"episodic",
           {{"n_episodes", true},
            {"frames_per_episode", true},
            {"image_size", true},
            {"drift_rate", true},
            {"noise_sigma", true},
            {"fps", true}}},
          {"shapes",
           {{"n_classes", true},
            {"exemplars_per_class", true},
            {"views_per_exemplar", true},
            {"image_size", true},
            {"fps", true}}}}},
        {"augment",
         {{"enabled", true},
          {"jitter_prob", true},
          {"brightness", true},
          {"contrast", true},
          {"saturation", true},
          {"hue", true},
          {"grayscale_prob", true}}},
        {"train",
         {{"objective", true},
          {"segment_length_s", true},
          {"reset_episodes_per_recording", true},
          {"drop_last_partial", true},
          {"lr", true},
          {"batch_size", true},
          {"epochs", true},
          {"architecture", true},
          {"contrastive_lr_drop", true},
          {"moco",
           {{"queue_size", true}, {"momentum", true}, {"temperature", true}, {"proj_dim", true}}}}},
        {"probe",
         {{"model", true},
          {"family", true},
          {"lr", true},
          {"epochs", true},
          {"batch", true},
          {"alpha", true},
          {"max_iter", true},
          {"binary", true},
          {"split",
           {{"kind", true},
            {"train_fraction", true},
            {"subsample_factor", true},
            {"holdout_fraction", true},
            {"holdout_count", true},
            {"stratified", true}}}}},
        {"analysis",
         {{"checkpoint", true},
          {"csi", true},
          {"csi_split_half", true},
          {"pca", true},
          {"cam",
           {{"classes", true},
            {"n_images", true},
            {"out_size", true},
            {"normalize_on_raw", true}}},
          {"top_activating", {{"feature_count", true}, {"sample_size", true}, {"top_k", true}}},
          {"sweep",
           {{"fps", true},
            {"segment_length", true},
            {"augment", true},
            {"episode_duration_s", true},
            {"n_episodes", true},
            {"epochs", true}}}}},
    };
    return schema;
}

inline void check_keys(const nlohmann::json& doc, const nlohmann::json& schema,
                       const std::string& path) {
    if (!doc.is_object()) return;
    for (const auto& [key, value] : doc.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) throw ConfigError("config: unknown key '" + where + "'");
        if (schema[key].is_object()) check_keys(value, schema[key], where);
    }
}

}  // namespace config_detail

inline nlohmann::json load_config_file(const std::string& path);

inline nlohmann::json resolve_config(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir) {
    nlohmann::json merged = nlohmann::json::object();
    if (doc.contains("include")) {
        if (!doc["include"].is_array())
            throw ConfigError("config: 'include' must be a list of paths");
        for (const auto& inc : doc["include"]) {
            const std::filesystem::path p = base_dir / inc.get<std::string>();
            config_detail::deep_merge(merged, load_config_file(p.string()));
        }
    }
    nlohmann::json body = doc;
    body.erase("include");
    config_detail::deep_merge(merged, body);
    config_detail::check_keys(merged, config_detail::config_schema(), "");
    return merged;
}

inline nlohmann::json load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("config: cannot open " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse error in " + path + ": " + e.what());
    }
    return resolve_config(doc, std::filesystem::path(path).parent_path());
}

// Every run writes the fully resolved configuration next to its outputs.
inline void write_resolved_config(const nlohmann::json& cfg,
                                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir / "resolved_config.json");
    if (!f) throw DataError("config: cannot write resolved config in " + out_dir.string());
    f << cfg.dump(2) << "\n";
}

}  // namespace tiv

#endif
