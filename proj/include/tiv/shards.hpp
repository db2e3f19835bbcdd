#ifndef TIV_SHARDS_HPP
#define TIV_SHARDS_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "tiv/errors.hpp"
#include "tiv/image.hpp"
#include "tiv/manifest.hpp"

namespace tiv {

// Frame shard: a fixed-capacity archive of deflate-compressed 8-bit frames.
// Blobs are written first so their offsets are known immediately; the index
// sits at the tail with a fixed-size footer pointing back at it.
//
//   magic "TIVSHRD1" | u32 version | u32 h | u32 w | u32 c
//   blob*                            (raw deflate streams)
//   u32 count | count * {u64 offset, u64 comp_size, u64 raw_size}
//   u64 index_offset | magic "TIVSHRD1"

namespace shard_detail {

constexpr char kMagic[8] = {'T', 'I', 'V', 'S', 'H', 'R', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

struct IndexEntry {
    std::uint64_t offset = 0;
    std::uint64_t comp_size = 0;
    std::uint64_t raw_size = 0;
};

inline std::vector<std::uint8_t> deflate_bytes(const std::uint8_t* data, std::size_t n) {
    uLongf bound = compressBound(static_cast<uLong>(n));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, data, static_cast<uLong>(n), 6) != Z_OK)
        throw DataError("shard: deflate failed");
    out.resize(bound);
    return out;
}

inline std::vector<std::uint8_t> inflate_bytes(const std::uint8_t* data, std::size_t n,
                                               std::size_t raw_size) {
    std::vector<std::uint8_t> out(raw_size);
    uLongf len = static_cast<uLongf>(raw_size);
    if (uncompress(out.data(), &len, data, static_cast<uLong>(n)) != Z_OK || len != raw_size)
        throw DataError("shard: inflate failed");
    return out;
}

}  // namespace shard_detail

struct ShardLocation {
    std::string shard_path;  // relative to the dataset directory
    std::uint64_t offset = 0;
};

class ShardWriter {
public:
    // Shards are named <prefix>-NNNNN.shard under dir.
    ShardWriter(std::filesystem::path dir, std::string prefix, int h, int w, int c,
                std::size_t frames_per_shard = 4096)
        : dir_(std::move(dir)), prefix_(std::move(prefix)), h_(h), w_(w), c_(c),
          capacity_(frames_per_shard) {
        if (capacity_ < 1) throw ConfigError("ShardWriter: shard size must be >= 1");
        std::filesystem::create_directories(dir_);
    }

    ~ShardWriter() {
        // finish() must be called explicitly; a destructor cannot report errors
    }

    ShardLocation add(const std::vector<std::uint8_t>& frame_bytes) {
        const std::size_t expect = static_cast<std::size_t>(h_) * w_ * c_;
        if (frame_bytes.size() != expect)
            throw ContractError("ShardWriter: frame byte count mismatch");
        if (!file_.is_open()) open_next();
        const std::uint64_t offset = static_cast<std::uint64_t>(file_.tellp());
        const auto comp = shard_detail::deflate_bytes(frame_bytes.data(), frame_bytes.size());
        file_.write(reinterpret_cast<const char*>(comp.data()),
                    static_cast<std::streamsize>(comp.size()));
        index_.push_back({offset, comp.size(), frame_bytes.size()});
        ShardLocation loc{current_name_, offset};
        if (index_.size() >= capacity_) close_current();
        return loc;
    }

    void finish() {
        if (file_.is_open()) close_current();
    }

private:
    void open_next() {
        char name[64];
        std::snprintf(name, sizeof(name), "%s-%05zu.shard", prefix_.c_str(), shard_count_);
        current_name_ = name;
        file_.open(dir_ / current_name_, std::ios::binary | std::ios::trunc);
        if (!file_) throw DataError("ShardWriter: cannot open " + (dir_ / current_name_).string());
        file_.write(shard_detail::kMagic, 8);
        write_u32(shard_detail::kVersion);
        write_u32(static_cast<std::uint32_t>(h_));
        write_u32(static_cast<std::uint32_t>(w_));
        write_u32(static_cast<std::uint32_t>(c_));
        index_.clear();
        ++shard_count_;
    }

    void close_current() {
        const std::uint64_t index_offset = static_cast<std::uint64_t>(file_.tellp());
        write_u32(static_cast<std::uint32_t>(index_.size()));
        for (const auto& e : index_) {
            write_u64(e.offset);
            write_u64(e.comp_size);
            write_u64(e.raw_size);
        }
        write_u64(index_offset);
        file_.write(shard_detail::kMagic, 8);
        if (!file_) throw DataError("ShardWriter: short write to " + current_name_);
        file_.close();
    }

    void write_u32(std::uint32_t v) { file_.write(reinterpret_cast<const char*>(&v), 4); }
    void write_u64(std::uint64_t v) { file_.write(reinterpret_cast<const char*>(&v), 8); }

    std::filesystem::path dir_;
    std::string prefix_;
    int h_, w_, c_;
    std::size_t capacity_;
    std::size_t shard_count_ = 0;
    std::ofstream file_;
    std::string current_name_;
    std::vector<shard_detail::IndexEntry> index_;
};

class ShardReader {
public:
    explicit ShardReader(const std::filesystem::path& path) : path_(path.string()) {
        file_.open(path, std::ios::binary);
        if (!file_) throw DataError("ShardReader: cannot open " + path_);
        char magic[8];
        file_.read(magic, 8);
        if (std::memcmp(magic, shard_detail::kMagic, 8) != 0)
            throw DataError("ShardReader: bad magic in " + path_);
        const std::uint32_t version = read_u32();
        if (version != shard_detail::kVersion)
            throw DataError("ShardReader: unsupported shard version in " + path_);
        h_ = static_cast<int>(read_u32());
        w_ = static_cast<int>(read_u32());
        c_ = static_cast<int>(read_u32());

        file_.seekg(-16, std::ios::end);
        const std::uint64_t index_offset = read_u64();
        file_.read(magic, 8);
        if (std::memcmp(magic, shard_detail::kMagic, 8) != 0)
            throw DataError("ShardReader: truncated shard " + path_);
        file_.seekg(static_cast<std::streamoff>(index_offset));
        const std::uint32_t count = read_u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            shard_detail::IndexEntry e;
            e.offset = read_u64();
            e.comp_size = read_u64();
            e.raw_size = read_u64();
            by_offset_[e.offset] = e;
        }
    }

    int height() const { return h_; }
    int width() const { return w_; }
    int channels() const { return c_; }
    std::size_t count() const { return by_offset_.size(); }

    std::vector<std::uint8_t> read_bytes(std::uint64_t offset) {
        const auto it = by_offset_.find(offset);
        if (it == by_offset_.end())
            throw DataError("ShardReader: no frame at offset " + std::to_string(offset) +
                            " in " + path_);
        const auto& e = it->second;
        std::vector<std::uint8_t> comp(e.comp_size);
        file_.seekg(static_cast<std::streamoff>(e.offset));
        file_.read(reinterpret_cast<char*>(comp.data()), static_cast<std::streamsize>(comp.size()));
        if (!file_) throw DataError("ShardReader: truncated frame in " + path_);
        return shard_detail::inflate_bytes(comp.data(), comp.size(), e.raw_size);
    }

    Image read_image(std::uint64_t offset) {
        const auto bytes = read_bytes(offset);
        return image_from_u8(bytes.data(), h_, w_, c_);
    }

private:
    std::uint32_t read_u32() {
        std::uint32_t v = 0;
        file_.read(reinterpret_cast<char*>(&v), 4);
        return v;
    }
    std::uint64_t read_u64() {
        std::uint64_t v = 0;
        file_.read(reinterpret_cast<char*>(&v), 8);
        return v;
    }

    std::string path_;
    std::ifstream file_;
    int h_ = 0, w_ = 0, c_ = 0;
    std::unordered_map<std::uint64_t, shard_detail::IndexEntry> by_offset_;
};

// Resolves manifest rows to pixel data, caching one reader per shard file.
class FrameStore {
public:
    explicit FrameStore(std::filesystem::path dataset_dir) : dir_(std::move(dataset_dir)) {}

    Image load(const FrameRecord& rec) {
        return reader(rec.shard_path).read_image(rec.shard_offset);
    }

    std::vector<std::uint8_t> load_bytes(const FrameRecord& rec) {
        return reader(rec.shard_path).read_bytes(rec.shard_offset);
    }

private:
    ShardReader& reader(const std::string& rel) {
        auto it = readers_.find(rel);
        if (it == readers_.end())
            it = readers_.emplace(rel, std::make_unique<ShardReader>(dir_ / rel)).first;
        return *it->second;
    }

    std::filesystem::path dir_;
    std::unordered_map<std::string, std::unique_ptr<ShardReader>> readers_;
};

}  // namespace tiv

#endif
