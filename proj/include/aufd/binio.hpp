#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "aufd/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are not supported");

namespace aufd {

inline constexpr char kMagic[4] = {'A', 'U', 'F', 'D'};

class BinWriter {
public:
    explicit BinWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    }

    void bytes(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u16(std::uint16_t v) { bytes(&v, 2); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void i64(std::int64_t v) { bytes(&v, 8); }
    void f32s(const float* data, std::size_t n) { bytes(data, n * 4); }
    void str(const std::string& s) { bytes(s.data(), s.size()); }

    void finish(const std::filesystem::path& path) {
        out_.flush();
        if (!out_) throw IoError("write failed for " + path.string());
    }

private:
    std::ofstream out_;
};

class BinReader {
public:
    explicit BinReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path_);
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

    void bytes(void* dst, std::size_t n) {
        if (remaining() < n)
            throw FormatError(path_ + ": truncated at byte offset " + std::to_string(pos_) + " (need " +
                              std::to_string(n) + " more bytes, have " + std::to_string(remaining()) + ")");
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint16_t u16() { std::uint16_t v; bytes(&v, 2); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    std::int64_t i64() { std::int64_t v; bytes(&v, 8); return v; }
    void f32s(float* dst, std::size_t n) { bytes(dst, n * 4); }
    std::string str(std::size_t n) {
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    void expect_magic() {
        char m[4];
        bytes(m, 4);
        if (std::memcmp(m, kMagic, 4) != 0) throw FormatError(path_ + ": bad magic");
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

} // namespace aufd
