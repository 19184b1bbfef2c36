#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "ecgz/bitcodec.hpp"

using namespace ecgz;

TEST(BitBuffer, ConcatenatesFieldsMsbFirst) {
    BitBuffer buf;
    buf.write_bits(0b0000, 4);
    buf.write_bits(0b01, 2);
    EXPECT_EQ(buf.bit_length(), 6u);
    EXPECT_EQ(buf.to_bit_string(), "000001");
}

TEST(BitBuffer, SixteenZeroBits) {
    BitBuffer buf;
    buf.write_bits(0, 16);
    EXPECT_EQ(buf.to_bit_string(), std::string(16, '0'));
    ASSERT_EQ(buf.bytes().size(), 2u);
}

TEST(BitBuffer, BigEndianWord) {
    BitBuffer buf;
    buf.write_bits(0x04D2, 16);
    ASSERT_EQ(buf.bytes().size(), 2u);
    EXPECT_EQ(buf.bytes()[0], 0x04);
    EXPECT_EQ(buf.bytes()[1], 0xD2);
}

TEST(BitBuffer, RejectsValueWiderThanField) {
    BitBuffer buf;
    try {
        buf.write_bits(4, 2);
        FAIL() << "expected range error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::range);
    }
    EXPECT_EQ(buf.bit_length(), 0u);
    EXPECT_THROW(buf.write_bits(0, 17), Error);
}

TEST(BitBuffer, TrailingBitsOfLastByteAreZero) {
    BitBuffer adopted({0xFF, 0xFF}, 11);
    EXPECT_EQ(adopted.bytes()[1], 0xE0);
    BitBuffer written;
    written.write_bits(0x7, 3);
    EXPECT_EQ(written.bytes()[0], 0xE0);
}

TEST(BitCursor, ReadsBackFieldsInOrder) {
    BitBuffer buf;
    buf.write_bits(0b0000, 4);
    buf.write_bits(0b01, 2);
    BitCursor cur(buf);
    EXPECT_EQ(cur.read_bits(4), 0u);
    EXPECT_EQ(cur.read_bits(2), 1u);
    EXPECT_EQ(cur.remaining(), 0u);
}

TEST(BitCursor, ReadsBigEndianWord) {
    const std::vector<std::uint8_t> bytes = {0x30, 0x64};
    const auto buf = BitBuffer::from_bytes(bytes);
    BitCursor cur(buf);
    EXPECT_EQ(cur.read_bits(16), 0x3064u);
}

TEST(BitCursor, OverrunIsTruncatedStream) {
    BitBuffer buf;
    buf.write_bits(0b101, 3);
    BitCursor cur(buf);
    cur.read_bits(3);
    try {
        cur.read_bits(1);
        FAIL() << "expected truncated-stream error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::truncated);
    }
    EXPECT_EQ(cur.position(), 3u);
}

TEST(SignExtend, TwosComplementDefinition) {
    EXPECT_EQ(sign_extend(0b11, 2), -1);
    EXPECT_EQ(sign_extend(0b10, 2), -2);
    EXPECT_EQ(sign_extend(0b01, 2), 1);
    EXPECT_EQ(sign_extend(0b011111111111, 12), 2047);
    EXPECT_EQ(sign_extend(0b100000000000, 12), -2048);
}

TEST(SignExtend, InvertsTruncationForEveryWidth) {
    for (unsigned n = 1; n <= 16; ++n) {
        const int lo = -(1 << (n - 1));
        const int hi = (1 << (n - 1)) - 1;
        for (int s = lo; s <= hi; ++s) {
            ASSERT_EQ(sign_extend(truncate_bits(s, n), n), s) << "n=" << n;
        }
    }
}

TEST(BitCodecProperty, RandomFieldSequencesRoundTrip) {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::uint32_t, unsigned>> fields;
        BitBuffer buf;
        const int count = std::uniform_int_distribution<int>(0, 64)(rng);
        for (int i = 0; i < count; ++i) {
            const unsigned n = std::uniform_int_distribution<unsigned>(1, 16)(rng);
            const std::uint32_t v = std::uniform_int_distribution<std::uint32_t>(0, (1u << n) - 1)(rng);
            fields.emplace_back(v, n);
            buf.write_bits(v, n);
        }
        // Prefix stability: a second batch never disturbs the first.
        const BitBuffer prefix = buf;
        buf.write_bits(0xFFFF, 16);
        BitCursor cur(buf);
        for (const auto& [v, n] : fields) ASSERT_EQ(cur.read_bits(n), v);
        EXPECT_EQ(cur.position(), prefix.bit_length());
        EXPECT_EQ(cur.read_bits(16), 0xFFFFu);
    }
}
