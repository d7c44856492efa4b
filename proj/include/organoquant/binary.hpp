#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace organoquant::bin {

/// Bounds-checked little-endian reader over a byte span. Reads past the end
/// throw std::out_of_range; callers translate that into their own truncation
/// error at the operation boundary.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data, std::size_t pos = 0)
        : data_(data), pos_(pos) {}

    std::size_t pos() const { return pos_; }
    std::size_t size() const { return data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool can_read(std::size_t n) const { return n <= remaining(); }

    void seek(std::size_t pos) {
        if (pos > data_.size()) throw std::out_of_range("seek past end");
        pos_ = pos;
    }

    void skip(std::size_t n) { require(n); pos_ += n; }

    std::uint8_t u8() {
        require(1);
        return data_[pos_++];
    }

    std::uint16_t u16le() {
        require(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                          static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    std::uint32_t u32le() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = v << 8 | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le() {
        require(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = v << 8 | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 8;
        return v;
    }

    std::int32_t i32le() { return static_cast<std::int32_t>(u32le()); }
    std::int64_t i64le() { return static_cast<std::int64_t>(u64le()); }

    float f32le() { return std::bit_cast<float>(u32le()); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        require(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::string ascii(std::size_t n) {
        auto s = bytes(n);
        return std::string(reinterpret_cast<const char*>(s.data()), s.size());
    }

private:
    void require(std::size_t n) const {
        if (!can_read(n)) throw std::out_of_range("read past end of input");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Appending little-endian writer.
class Writer {
public:
    std::vector<std::uint8_t>& buffer() { return buf_; }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }
    std::size_t size() const { return buf_.size(); }

    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u16le(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v));
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    }

    void u32le(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> 8 * i));
    }

    void u64le(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> 8 * i));
    }

    void i32le(std::int32_t v) { u32le(static_cast<std::uint32_t>(v)); }
    void i64le(std::int64_t v) { u64le(static_cast<std::uint64_t>(v)); }
    void f32le(float v) { u32le(std::bit_cast<std::uint32_t>(v)); }

    void bytes(std::span<const std::uint8_t> data) {
        buf_.insert(buf_.end(), data.begin(), data.end());
    }

    void ascii(std::string_view s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    void zeros(std::size_t n) { buf_.insert(buf_.end(), n, 0); }

    /// Patches a previously written u64le in place.
    void patch_u64le(std::size_t at, std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_[at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> 8 * i);
    }

private:
    std::vector<std::uint8_t> buf_;
};

}  // namespace organoquant::bin
