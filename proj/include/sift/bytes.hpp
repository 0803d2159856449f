#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "sift/error.hpp"

namespace sift {

using Bytes = std::vector<std::uint8_t>;

/// Bounds-checked cursor over an immutable byte buffer. Every read throws
/// Error(TruncatedInput) carrying the current offset instead of reading past
/// the end.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

    void require(std::size_t n) const {
        if (remaining() < n)
            throw Error(ErrorCode::TruncatedInput,
                        "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_),
                        pos_);
    }

    std::uint8_t u8() {
        require(1);
        return data_[pos_++];
    }

    std::uint16_t u16be() {
        require(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32be() {
        require(4);
        std::uint32_t v = (std::uint32_t(data_[pos_]) << 24) | (std::uint32_t(data_[pos_ + 1]) << 16) |
                          (std::uint32_t(data_[pos_ + 2]) << 8) | std::uint32_t(data_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    std::uint16_t u16le() {
        require(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | data_[pos_ + 1] << 8);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32le() {
        require(4);
        std::uint32_t v = std::uint32_t(data_[pos_]) | (std::uint32_t(data_[pos_ + 1]) << 8) |
                          (std::uint32_t(data_[pos_ + 2]) << 16) | (std::uint32_t(data_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le() {
        std::uint64_t lo = u32le();
        std::uint64_t hi = u32le();
        return lo | (hi << 32);
    }

    float f32le() {
        std::uint32_t bits = u32le();
        float out;
        std::memcpy(&out, &bits, sizeof out);
        return out;
    }

    double f64le() {
        std::uint64_t bits = u64le();
        double out;
        std::memcpy(&out, &bits, sizeof out);
        return out;
    }

    std::span<const std::uint8_t> raw(std::size_t n) {
        require(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::string str(std::size_t n) {
        auto s = raw(n);
        return std::string(reinterpret_cast<const char*>(s.data()), s.size());
    }

    void skip(std::size_t n) { raw(n); }
    void seek(std::size_t pos) {
        if (pos > data_.size())
            throw Error(ErrorCode::TruncatedInput, "seek past end", pos);
        pos_ = pos;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Append-only byte buffer with fixed-width integer encoders.
class ByteWriter {
public:
    Bytes& bytes() noexcept { return out_; }
    const Bytes& bytes() const noexcept { return out_; }
    std::size_t size() const noexcept { return out_.size(); }

    void u8(std::uint8_t v) { out_.push_back(v); }

    void u16be(std::uint16_t v) {
        out_.push_back(std::uint8_t(v >> 8));
        out_.push_back(std::uint8_t(v));
    }

    void u32be(std::uint32_t v) {
        out_.push_back(std::uint8_t(v >> 24));
        out_.push_back(std::uint8_t(v >> 16));
        out_.push_back(std::uint8_t(v >> 8));
        out_.push_back(std::uint8_t(v));
    }

    void u16le(std::uint16_t v) {
        out_.push_back(std::uint8_t(v));
        out_.push_back(std::uint8_t(v >> 8));
    }

    void u32le(std::uint32_t v) {
        out_.push_back(std::uint8_t(v));
        out_.push_back(std::uint8_t(v >> 8));
        out_.push_back(std::uint8_t(v >> 16));
        out_.push_back(std::uint8_t(v >> 24));
    }

    void u64le(std::uint64_t v) {
        u32le(std::uint32_t(v));
        u32le(std::uint32_t(v >> 32));
    }

    void f32le(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u32le(bits);
    }

    void f64le(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64le(bits);
    }

    void raw(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }

    void str(const std::string& s) {
        out_.insert(out_.end(), reinterpret_cast<const std::uint8_t*>(s.data()),
                    reinterpret_cast<const std::uint8_t*>(s.data()) + s.size());
    }

private:
    Bytes out_;
};

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

} // namespace sift
