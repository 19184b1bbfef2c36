#pragma once

// 16-bit frame layout. Every frame is a prefix-free header followed by
// equal-width two's-complement fields:
//
//   type  header  fields
//   A     1       3 x 5 bits   residuals
//   B     01      2 x 7 bits   residuals
//   C     0001    4 x 3 bits   residuals
//   D     0000    6 x 2 bits   residuals
//   E     0011    1 x 12 bits  original sample
//
// Header 0010 is reserved. Fields are stored in sample order, first sample
// just below the header.

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "ecgz/bitcodec.hpp"
#include "ecgz/error.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

using FrameWord = std::uint16_t;

inline constexpr unsigned kFrameBits = 16;
inline constexpr std::size_t kMaxFrameFields = 6;

enum class FrameType : std::uint8_t { A, B, C, D, E };

inline constexpr std::array<FrameType, 5> kAllFrameTypes = {FrameType::A, FrameType::B, FrameType::C,
                                                            FrameType::D, FrameType::E};
/// Framing priority, highest first.
inline constexpr std::array<FrameType, 5> kFramePriority = {FrameType::D, FrameType::C, FrameType::A,
                                                            FrameType::B, FrameType::E};

struct FrameLayout {
    std::uint8_t header;
    std::uint8_t header_len;
    std::uint8_t field_width;
    std::uint8_t field_count;
};

constexpr FrameLayout layout(FrameType t) noexcept {
    switch (t) {
    case FrameType::A: return {0b1, 1, 5, 3};
    case FrameType::B: return {0b01, 2, 7, 2};
    case FrameType::C: return {0b0001, 4, 3, 4};
    case FrameType::D: return {0b0000, 4, 2, 6};
    case FrameType::E: return {0b0011, 4, 12, 1};
    }
    return {};
}

constexpr unsigned field_count(FrameType t) noexcept { return layout(t).field_count; }
constexpr unsigned field_width(FrameType t) noexcept { return layout(t).field_width; }

constexpr char frame_letter(FrameType t) noexcept { return static_cast<char>('A' + static_cast<int>(t)); }

static_assert([] {
    for (FrameType t : kAllFrameTypes) {
        const auto l = layout(t);
        if (l.header_len + l.field_width * l.field_count != kFrameBits) return false;
    }
    return true;
}());

// Residual width classes. `escape` means the residual needs more than 7 bits
// and the sample has to travel as an original in a Type E frame.
enum class WidthClass : std::uint8_t { two = 2, three = 3, five = 5, seven = 7, escape = 0xFF };

constexpr unsigned width_bits(WidthClass c) noexcept { return static_cast<unsigned>(c); }

/// Smallest class whose two's-complement range holds `e`: the bits above
/// bit c-1 must all equal the sign bit.
constexpr WidthClass min_width_class(Residual e) noexcept {
    for (WidthClass c : {WidthClass::two, WidthClass::three, WidthClass::five, WidthClass::seven}) {
        const Residual upper = e >> (width_bits(c) - 1);
        if (upper == 0 || upper == -1) return c;
    }
    return WidthClass::escape;
}

/// Packs `fields` (residuals for A-D, the original sample for E) into one word.
inline FrameWord pack_frame(FrameType t, std::span<const std::int32_t> fields) {
    const auto l = layout(t);
    if (fields.size() != l.field_count) {
        throw Error(ErrorKind::usage, std::string("frame ") + frame_letter(t) + " takes " +
                                          std::to_string(l.field_count) + " fields");
    }
    std::uint32_t word = l.header;
    const std::int32_t lo = -(1 << (l.field_width - 1));
    const std::int32_t hi = (1 << (l.field_width - 1)) - 1;
    for (std::int32_t f : fields) {
        if (f < lo || f > hi) {
            throw Error(ErrorKind::range, "value " + std::to_string(f) + " overflows a " +
                                              std::to_string(l.field_width) + "-bit field of frame " +
                                              frame_letter(t));
        }
        word = (word << l.field_width) | truncate_bits(f, l.field_width);
    }
    return static_cast<FrameWord>(word);
}

inline FrameType parse_header(FrameWord word) {
    if (word & 0x8000u) return FrameType::A;
    if (word & 0x4000u) return FrameType::B;
    switch (word >> 12) {
    case 0b0000: return FrameType::D;
    case 0b0001: return FrameType::C;
    case 0b0011: return FrameType::E;
    default: break;
    }
    throw Error(ErrorKind::reserved_header, "frame word " + std::to_string(word) + " has header 0010");
}

struct DecodedFrame {
    FrameType type = FrameType::E;
    std::uint8_t count = 0;
    std::array<std::int32_t, kMaxFrameFields> values{};

    std::span<const std::int32_t> fields() const noexcept { return {values.data(), count}; }
};

inline DecodedFrame unpack_frame(FrameWord word) {
    DecodedFrame out;
    out.type = parse_header(word);
    const auto l = layout(out.type);
    out.count = l.field_count;
    unsigned shift = kFrameBits - l.header_len;
    for (unsigned i = 0; i < l.field_count; ++i) {
        shift -= l.field_width;
        out.values[i] = sign_extend(static_cast<std::uint32_t>(word) >> shift, l.field_width);
    }
    return out;
}

} // namespace ecgz
