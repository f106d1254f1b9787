#pragma once

// Tagged little-endian binary container used by the CLI to move keys and
// ciphertexts between invocations: magic, format version, a parameter digest
// guarding against cross-parameter mixups, then the payload sections.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "primes.hpp"

namespace encctl {

inline constexpr u32 kContainerMagic = 0x4543544Cu;  // "ECTL"
inline constexpr u32 kContainerVersion = 1;

class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u32(u32 v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void put_u64(u64 v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void put_i64(i64 v) { put_u64(static_cast<u64>(v)); }
    void put_f64(double v) {
        u64 bits;
        std::memcpy(&bits, &v, 8);
        put_u64(bits);
    }
    const std::vector<std::uint8_t>& bytes() const { return buf_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw std::runtime_error("write failed: " + path);
    }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t get_u8() {
        need(1);
        return data_[pos_++];
    }
    u32 get_u32() {
        need(4);
        u32 v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<u32>(data_[pos_++]) << (8 * i);
        return v;
    }
    u64 get_u64() {
        need(8);
        u64 v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<u64>(data_[pos_++]) << (8 * i);
        return v;
    }
    i64 get_i64() { return static_cast<i64>(get_u64()); }
    double get_f64() {
        const u64 bits = get_u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t k) const {
        if (pos_ + k > data_.size()) throw std::runtime_error("container truncated");
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> load_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw std::runtime_error("read failed: " + path);
    return buf;
}

// kind: one byte identifying the payload ('K' keys, 'S' controller state, ...).
inline void write_container_header(ByteWriter& w, std::uint8_t kind, u64 params_digest) {
    w.put_u32(kContainerMagic);
    w.put_u32(kContainerVersion);
    w.put_u8(kind);
    w.put_u64(params_digest);
}

inline void read_container_header(ByteReader& r, std::uint8_t expect_kind, u64 expect_digest) {
    if (r.get_u32() != kContainerMagic) throw std::runtime_error("bad container magic");
    if (r.get_u32() != kContainerVersion) throw std::runtime_error("unsupported container version");
    const auto kind = r.get_u8();
    if (kind != expect_kind) throw std::runtime_error(std::string("unexpected container kind: ") + static_cast<char>(kind));
    if (r.get_u64() != expect_digest) throw std::runtime_error("container was produced under different parameters");
}

}  // namespace encctl
