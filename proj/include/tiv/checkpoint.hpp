#ifndef TIV_CHECKPOINT_HPP
#define TIV_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "tiv/errors.hpp"
#include "tiv/nn.hpp"

namespace tiv {

// Versioned archive: a JSON metadata document (config, seed, epoch, metrics)
// followed by named float64 blobs. Readers accept any minor version of the
// current major and reject everything newer.
//
//   magic "TIVCKPT1" | u32 major | u32 minor | u64 meta_len | meta json
//   per blob listed in meta["blobs"]: raw little-endian f64 values

struct Checkpoint {
    nlohmann::json meta;
    std::map<std::string, nn::Vec> blobs;
};

namespace checkpoint_detail {
constexpr char kMagic[8] = {'T', 'I', 'V', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kMajor = 1;
constexpr std::uint32_t kMinor = 0;
}  // namespace checkpoint_detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path final_path(path);
    const fs::path tmp_path(path + ".tmp");
    if (final_path.has_parent_path()) fs::create_directories(final_path.parent_path());

    nlohmann::json meta = ckpt.meta;
    meta["format"] = {{"major", checkpoint_detail::kMajor}, {"minor", checkpoint_detail::kMinor}};
    auto blob_list = nlohmann::json::array();
    for (const auto& [name, v] : ckpt.blobs)
        blob_list.push_back({{"name", name}, {"count", v.size()}});
    meta["blobs"] = blob_list;
    const std::string meta_str = meta.dump();

    {
        std::ofstream f(tmp_path, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("save_checkpoint: cannot open " + tmp_path.string());
        f.write(checkpoint_detail::kMagic, 8);
        const std::uint32_t major = checkpoint_detail::kMajor;
        const std::uint32_t minor = checkpoint_detail::kMinor;
        f.write(reinterpret_cast<const char*>(&major), 4);
        f.write(reinterpret_cast<const char*>(&minor), 4);
        const std::uint64_t meta_len = meta_str.size();
        f.write(reinterpret_cast<const char*>(&meta_len), 8);
        f.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
        for (const auto& [name, v] : ckpt.blobs)
            f.write(reinterpret_cast<const char*>(v.data()),
                    static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!f) throw DataError("save_checkpoint: short write to " + tmp_path.string());
    }
    fs::rename(tmp_path, final_path);  // atomic publish
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, checkpoint_detail::kMagic, 8) != 0)
        throw DataError("load_checkpoint: not a checkpoint file: " + path);
    std::uint32_t major = 0, minor = 0;
    f.read(reinterpret_cast<char*>(&major), 4);
    f.read(reinterpret_cast<char*>(&minor), 4);
    if (major != checkpoint_detail::kMajor)
        throw DataError("load_checkpoint: unsupported major version " + std::to_string(major) +
                        " in " + path);
    std::uint64_t meta_len = 0;
    f.read(reinterpret_cast<char*>(&meta_len), 8);
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!f) throw DataError("load_checkpoint: truncated metadata in " + path);

    Checkpoint ckpt;
    try {
        ckpt.meta = nlohmann::json::parse(meta_str);
        for (const auto& entry : ckpt.meta.at("blobs")) {
            const std::string name = entry.at("name").get<std::string>();
            const long count = entry.at("count").get<long>();
            nn::Vec v(count);
            f.read(reinterpret_cast<char*>(v.data()),
                   static_cast<std::streamsize>(count * sizeof(double)));
            if (!f) throw DataError("load_checkpoint: truncated blob " + name + " in " + path);
            ckpt.blobs[name] = std::move(v);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("load_checkpoint: malformed metadata in " + path + ": " + e.what());
    }
    return ckpt;
}

inline void pack_params(const nn::ParamRefs& params, Checkpoint& ckpt,
                        const std::string& prefix = "") {
    for (const auto& [name, t] : params) ckpt.blobs[prefix + name] = t->v;
}

inline void unpack_params(const Checkpoint& ckpt, const nn::ParamRefs& params,
                          const std::string& prefix = "") {
    for (const auto& [name, t] : params) {
        const auto it = ckpt.blobs.find(prefix + name);
        if (it == ckpt.blobs.end())
            throw DataError("checkpoint: missing parameter blob " + prefix + name);
        if (it->second.size() != t->size())
            throw DataError("checkpoint: size mismatch for " + prefix + name);
        t->v = it->second;
    }
}

}  // namespace tiv

#endif
