#pragma once

// MSB-first bit buffer and cursor. Fields are at most 16 bits wide; wider
// values are written as several fields.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecgz/error.hpp"

namespace ecgz {

inline constexpr unsigned kMaxFieldBits = 16;

class BitBuffer {
public:
    BitBuffer() = default;

    /// Adopts `bytes` as a buffer of `bit_length` valid bits.
    BitBuffer(std::vector<std::uint8_t> bytes, std::size_t bit_length)
        : bytes_(std::move(bytes)), bit_length_(bit_length) {
        if (bit_length_ > bytes_.size() * 8) {
            throw Error(ErrorKind::range, "bit length exceeds payload");
        }
        if (bit_length_ % 8 != 0) {
            bytes_[bit_length_ / 8] &= static_cast<std::uint8_t>(0xFF00u >> (bit_length_ % 8));
        }
        bytes_.resize((bit_length_ + 7) / 8);
    }

    static BitBuffer from_bytes(std::span<const std::uint8_t> bytes) {
        return BitBuffer(std::vector<std::uint8_t>(bytes.begin(), bytes.end()), bytes.size() * 8);
    }

    void write_bits(std::uint32_t value, unsigned n) {
        if (n == 0 || n > kMaxFieldBits) {
            throw Error(ErrorKind::usage, "field width must be 1..16, got " + std::to_string(n));
        }
        if (value >> n != 0) {
            throw Error(ErrorKind::range,
                        std::to_string(value) + " does not fit in " + std::to_string(n) + " bits");
        }
        for (unsigned i = n; i-- > 0;) {
            if (bit_length_ % 8 == 0) {
                bytes_.push_back(0);
            }
            if ((value >> i) & 1u) {
                bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bit_length_ % 8));
            }
            ++bit_length_;
        }
    }

    std::size_t bit_length() const noexcept { return bit_length_; }
    std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

    bool bit(std::size_t pos) const noexcept {
        return (bytes_[pos / 8] >> (7 - pos % 8)) & 1u;
    }

    std::string to_bit_string() const {
        std::string s;
        s.reserve(bit_length_);
        for (std::size_t i = 0; i < bit_length_; ++i) {
            s.push_back(bit(i) ? '1' : '0');
        }
        return s;
    }

    friend bool operator==(const BitBuffer&, const BitBuffer&) = default;

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t bit_length_ = 0;
};

class BitCursor {
public:
    explicit BitCursor(const BitBuffer& source) noexcept : source_(&source) {}

    std::uint32_t read_bits(unsigned n) {
        if (n == 0 || n > kMaxFieldBits) {
            throw Error(ErrorKind::usage, "field width must be 1..16, got " + std::to_string(n));
        }
        if (position_ + n > source_->bit_length()) {
            throw Error(ErrorKind::truncated, "read of " + std::to_string(n) + " bits at offset " +
                                                  std::to_string(position_));
        }
        std::uint32_t value = 0;
        for (unsigned i = 0; i < n; ++i) {
            value = (value << 1) | (source_->bit(position_++) ? 1u : 0u);
        }
        return value;
    }

    std::size_t position() const noexcept { return position_; }
    std::size_t remaining() const noexcept { return source_->bit_length() - position_; }

private:
    const BitBuffer* source_;
    std::size_t position_ = 0;
};

/// Two's-complement interpretation of the low `n` bits of `raw`.
constexpr std::int32_t sign_extend(std::uint32_t raw, unsigned n) noexcept {
    const std::uint32_t sign = 1u << (n - 1);
    raw &= (sign << 1) - 1;
    return static_cast<std::int32_t>(raw ^ sign) - static_cast<std::int32_t>(sign);
}

/// The low `n` bits of the two's-complement form of `value`.
constexpr std::uint32_t truncate_bits(std::int32_t value, unsigned n) noexcept {
    return static_cast<std::uint32_t>(value) & ((n >= 32) ? ~0u : ((1u << n) - 1));
}

} // namespace ecgz
