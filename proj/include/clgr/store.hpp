#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/embedding.hpp"

namespace clgr {

// Embedding store file layout (all integers little-endian):
//   magic "VLME" | version u32 = 1 | dim u32 | count u64
//   count records of: key length u16 | key bytes | dim x f32
// Frame keys are "frame:<id>", goal keys "goal:<text>".

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class ByteReader {
public:
    ByteReader(const std::string& bytes, const std::string& origin)
        : bytes_(bytes), origin_(origin) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size())
            throw DataError(origin_ + ": truncated " + what + " at byte offset " +
                            std::to_string(pos_));
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint8_t>(bytes_[pos_]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes_[pos_ + 1])) << 8);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    std::string raw(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    float f32(const char* what) {
        std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

private:
    const std::string& bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kStoreVersion = 1;

/// Serializes `entries` in key order. Values are quantized to f32 on disk.
inline void store_write(const std::string& path, const std::map<std::string, Embedding>& entries) {
    int dim = -1;
    for (const auto& [key, emb] : entries) {
        if (dim < 0) dim = emb.dim();
        if (emb.dim() != dim)
            throw ConfigError("store entries disagree on dimension: " + std::to_string(dim) +
                              " vs " + std::to_string(emb.dim()) + " for key \"" + key + "\"");
        if (key.size() > 0xffff)
            throw ConfigError("store key longer than 65535 bytes");
    }
    if (dim < 0) dim = 0;

    std::string out;
    out += "VLME";
    detail::put_u32(out, kStoreVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(dim));
    detail::put_u64(out, entries.size());
    for (const auto& [key, emb] : entries) {
        detail::put_u16(out, static_cast<std::uint16_t>(key.size()));
        out += key;
        for (int i = 0; i < dim; ++i) detail::put_f32(out, static_cast<float>(emb[i]));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open embedding store for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("short write to embedding store: " + path);
}

struct StoreContents {
    int dim = 0;
    std::map<std::string, Embedding> entries;
};

/// Reads a store file back. Entries that are not unit norm (real VLM outputs
/// are typically unnormalized) are renormalized on load; entries already unit
/// within 1e-6 are kept bit-for-bit so write-read-write is byte identical.
inline StoreContents store_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open embedding store: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::ByteReader r(bytes, path);
    if (r.raw(4, "magic") != "VLME")
        throw DataError(path + ": bad magic at byte offset 0, expected \"VLME\"");
    const std::uint32_t version = r.u32("version");
    if (version != kStoreVersion)
        throw DataError(path + ": unsupported store version " + std::to_string(version) +
                        " at byte offset 4");
    const std::uint32_t dim = r.u32("dim");
    const std::uint64_t count = r.u64("count");

    StoreContents out;
    out.dim = static_cast<int>(dim);
    for (std::uint64_t rec = 0; rec < count; ++rec) {
        const std::uint16_t keylen = r.u16("record key length");
        std::string key = r.raw(keylen, "record key");
        std::vector<double> vals(dim);
        for (std::uint32_t i = 0; i < dim; ++i) vals[i] = static_cast<double>(r.f32("record value"));

        double n2 = 0.0;
        for (double v : vals) n2 += v * v;
        const double n = std::sqrt(n2);
        if (n < 1e-12)
            throw DataError(path + ": zero-norm embedding for key \"" + key + "\"");
        Embedding emb = std::abs(n - 1.0) <= 1e-6 ? Embedding::unit(std::move(vals))
                                                  : Embedding::normalized(std::move(vals));
        out.entries.insert_or_assign(std::move(key), std::move(emb));
    }
    if (r.offset() != bytes.size())
        throw DataError(path + ": " + std::to_string(bytes.size() - r.offset()) +
                        " trailing bytes at byte offset " + std::to_string(r.offset()));
    return out;
}

}  // namespace clgr
