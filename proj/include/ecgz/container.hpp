#pragma once

// ECGZ archive format and the 3-byte wire unit used for loss simulation.
//
// ECGZ, all integers big-endian:
//
//   "ECGZ"                     4 bytes
//   version = 1                1
//   channel_count (1..4)       1
//   sample_rate_hz             2
//   resync_interval_samples    4   (0 = disabled)
//   predictor_order (1..4)     1
//   per channel:
//     sample_count             4
//     frame_count              4
//   payload: channel 0 frames, channel 1 frames, ... each frame 2 bytes
//
// Wire unit: tag = (channel << 6) | (sequence mod 64), then the 16-bit frame.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgz/decoder.hpp"
#include "ecgz/encoder.hpp"
#include "ecgz/error.hpp"
#include "ecgz/frame.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

inline constexpr std::array<std::uint8_t, 4> kEcgzMagic = {'E', 'C', 'G', 'Z'};
inline constexpr std::uint8_t kEcgzVersion = 1;
inline constexpr std::size_t kEcgzFixedHeaderBytes = 13;
inline constexpr std::size_t kEcgzChannelHeaderBytes = 8;

struct RecordMeta {
    std::uint8_t channel_count = 1;
    std::uint16_t sample_rate_hz = 360;
    std::uint32_t resync_interval_samples = 0;
    PredictorOrder order = kDefaultOrder;
    std::vector<std::uint32_t> sample_counts; // one per channel

    friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct EcgzRecord {
    RecordMeta meta;
    std::vector<std::vector<FrameWord>> frames; // one sequence per channel

    std::uint64_t payload_bits() const noexcept {
        std::uint64_t n = 0;
        for (const auto& c : frames) n += c.size() * kFrameBits;
        return n;
    }

    friend bool operator==(const EcgzRecord&, const EcgzRecord&) = default;
};

inline EcgzRecord make_ecgz_record(const EncodedRecord& enc, std::uint16_t sample_rate_hz,
                                   const EncoderConfig& cfg) {
    EcgzRecord rec;
    rec.meta.channel_count = static_cast<std::uint8_t>(enc.channels.size());
    rec.meta.sample_rate_hz = sample_rate_hz;
    rec.meta.resync_interval_samples = cfg.resync_interval_samples;
    rec.meta.order = cfg.order;
    rec.meta.sample_counts = enc.sample_counts;
    for (std::size_t ch = 0; ch < enc.channels.size(); ++ch) {
        rec.frames.push_back(enc.words(ch));
    }
    return rec;
}

namespace detail {

inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t get_be(int n, const char* what) {
        if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) {
            throw Error(ErrorKind::truncated, std::string("file ends inside ") + what);
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v = (v << 8) | bytes_[pos_++];
        return v;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::uint8_t> write_ecgz(const EcgzRecord& rec) {
    const auto& m = rec.meta;
    if (m.channel_count < 1 || m.channel_count > kMaxChannels) {
        throw Error(ErrorKind::usage, "channel count must be 1..4");
    }
    if (rec.frames.size() != m.channel_count || m.sample_counts.size() != m.channel_count) {
        throw Error(ErrorKind::usage, "per-channel frame/sample lists do not match channel count");
    }
    std::vector<std::uint8_t> out(kEcgzMagic.begin(), kEcgzMagic.end());
    out.push_back(kEcgzVersion);
    out.push_back(m.channel_count);
    detail::put_be(out, m.sample_rate_hz, 2);
    detail::put_be(out, m.resync_interval_samples, 4);
    out.push_back(static_cast<std::uint8_t>(m.order));
    for (std::size_t ch = 0; ch < m.channel_count; ++ch) {
        detail::put_be(out, m.sample_counts[ch], 4);
        detail::put_be(out, rec.frames[ch].size(), 4);
    }
    for (const auto& channel : rec.frames) {
        for (FrameWord w : channel) detail::put_be(out, w, 2);
    }
    return out;
}

inline EcgzRecord read_ecgz(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    for (std::uint8_t expected : kEcgzMagic) {
        if (in.remaining() == 0) throw Error(ErrorKind::truncated, "file ends inside magic");
        if (in.get_be(1, "magic") != expected) throw Error(ErrorKind::bad_magic, "not an ECGZ file");
    }
    const auto version = in.get_be(1, "version");
    if (version != kEcgzVersion) {
        throw Error(ErrorKind::bad_version, "unsupported ECGZ version " + std::to_string(version));
    }
    EcgzRecord rec;
    auto& m = rec.meta;
    m.channel_count = static_cast<std::uint8_t>(in.get_be(1, "channel count"));
    if (m.channel_count < 1 || m.channel_count > kMaxChannels) {
        throw Error(ErrorKind::corrupt, "channel count " + std::to_string(m.channel_count));
    }
    m.sample_rate_hz = static_cast<std::uint16_t>(in.get_be(2, "sample rate"));
    m.resync_interval_samples = static_cast<std::uint32_t>(in.get_be(4, "resync interval"));
    const auto order = in.get_be(1, "predictor order");
    if (order < 1 || order > 4) throw Error(ErrorKind::corrupt, "predictor order " + std::to_string(order));
    m.order = static_cast<PredictorOrder>(order);

    std::vector<std::uint64_t> frame_counts;
    std::uint64_t total_frames = 0;
    for (std::size_t ch = 0; ch < m.channel_count; ++ch) {
        m.sample_counts.push_back(static_cast<std::uint32_t>(in.get_be(4, "channel header")));
        frame_counts.push_back(in.get_be(4, "channel header"));
        total_frames += frame_counts.back();
    }
    if (in.remaining() < total_frames * 2) {
        throw Error(ErrorKind::truncated, "payload holds " + std::to_string(in.remaining()) + " bytes, header declares " +
                                              std::to_string(total_frames * 2));
    }
    if (in.remaining() > total_frames * 2) {
        throw Error(ErrorKind::count_mismatch, std::to_string(in.remaining() - total_frames * 2) +
                                                   " bytes after the declared payload");
    }
    for (std::uint64_t n : frame_counts) {
        auto& channel = rec.frames.emplace_back();
        channel.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            channel.push_back(static_cast<FrameWord>(in.get_be(2, "payload")));
        }
    }
    return rec;
}

/// Decodes every channel of an archive.
inline std::vector<std::vector<Sample>> decode_record(const EcgzRecord& rec) {
    std::vector<std::vector<Sample>> out;
    for (std::size_t ch = 0; ch < rec.frames.size(); ++ch) {
        out.push_back(decode_channel(rec.frames[ch], rec.meta.sample_counts.at(ch), rec.meta.order));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Wire transport

inline constexpr unsigned kSequenceModulus = 64;
inline constexpr std::size_t kWireUnitBytes = 3;

struct WireUnit {
    std::uint8_t tag = 0;
    FrameWord frame = 0;

    std::uint8_t channel() const noexcept { return tag >> 6; }
    std::uint8_t sequence() const noexcept { return tag & 0x3F; }

    friend bool operator==(const WireUnit&, const WireUnit&) = default;
};

inline std::vector<WireUnit> wire_encode(std::span<const EmissionEntry> log) {
    std::array<std::uint32_t, kMaxChannels> seq{};
    std::vector<WireUnit> units;
    units.reserve(log.size());
    for (const auto& e : log) {
        if (e.channel >= kMaxChannels) throw Error(ErrorKind::usage, "channel id out of range");
        const auto s = static_cast<std::uint8_t>(seq[e.channel]++ % kSequenceModulus);
        units.push_back({static_cast<std::uint8_t>((e.channel << 6) | s), e.frame.word});
    }
    return units;
}

inline std::vector<std::uint8_t> wire_bytes(std::span<const WireUnit> units) {
    std::vector<std::uint8_t> out;
    out.reserve(units.size() * kWireUnitBytes);
    for (const auto& u : units) {
        out.push_back(u.tag);
        detail::put_be(out, u.frame, 2);
    }
    return out;
}

inline std::vector<WireUnit> parse_wire_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % kWireUnitBytes != 0) {
        throw Error(ErrorKind::truncated, "wire stream is not a whole number of units");
    }
    std::vector<WireUnit> units;
    for (std::size_t i = 0; i < bytes.size(); i += kWireUnitBytes) {
        units.push_back({bytes[i], static_cast<FrameWord>((bytes[i + 1] << 8) | bytes[i + 2])});
    }
    return units;
}

struct WireGap {
    std::uint8_t channel = 0;
    std::size_t position = 0; // index of the first erased frame in the channel sequence
    std::size_t lost = 0;
    bool wraparound = false; // count inferred beyond what sequence numbers can show; at least 64 more were lost

    friend bool operator==(const WireGap&, const WireGap&) = default;
};

struct WireDecodeResult {
    std::vector<std::vector<MaybeFrame>> channels;
    std::vector<WireGap> gaps;
};

/// Rebuilds per-channel frame sequences from the units that arrived. Gaps in
/// the sequence numbers become erasures. With `expected_frames` (from the
/// archive header or the sender) trailing losses and 64-unit wraparounds are
/// also accounted for; wraparound losses are attributed to the largest gap.
inline WireDecodeResult wire_decode(std::span<const WireUnit> received, std::size_t channel_count,
                                    std::span<const std::uint64_t> expected_frames = {}) {
    if (channel_count < 1 || channel_count > kMaxChannels) {
        throw Error(ErrorKind::usage, "channel count must be 1..4");
    }
    if (!expected_frames.empty() && expected_frames.size() != channel_count) {
        throw Error(ErrorKind::usage, "expected frame counts must cover every channel");
    }
    WireDecodeResult out;
    out.channels.resize(channel_count);
    std::array<unsigned, kMaxChannels> next{};
    std::vector<std::vector<WireGap>> gaps(channel_count);
    for (const auto& u : received) {
        const auto ch = u.channel();
        if (ch >= channel_count) throw Error(ErrorKind::corrupt, "wire unit for channel " + std::to_string(ch));
        const unsigned skipped = (u.sequence() + kSequenceModulus - next[ch]) % kSequenceModulus;
        auto& seq = out.channels[ch];
        if (skipped > 0) {
            gaps[ch].push_back({ch, seq.size(), skipped, false});
            seq.insert(seq.end(), skipped, std::nullopt);
        }
        seq.push_back(u.frame);
        next[ch] = (u.sequence() + 1) % kSequenceModulus;
    }
    for (std::size_t ch = 0; ch < channel_count && !expected_frames.empty(); ++ch) {
        auto& seq = out.channels[ch];
        if (expected_frames[ch] < seq.size()) {
            throw Error(ErrorKind::count_mismatch, "more frames arrived than were sent on channel " + std::to_string(ch));
        }
        std::uint64_t deficit = expected_frames[ch] - seq.size();
        if (deficit == 0) continue;
        const std::uint64_t trailing = deficit % kSequenceModulus;
        const std::uint64_t wrapped = deficit - trailing;
        if (wrapped > 0 && !gaps[ch].empty()) {
            auto largest = std::max_element(gaps[ch].begin(), gaps[ch].end(),
                                            [](const WireGap& a, const WireGap& b) { return a.lost < b.lost; });
            const auto pos = static_cast<std::ptrdiff_t>(largest->position);
            seq.insert(seq.begin() + pos, wrapped, std::nullopt);
            for (auto it = largest + 1; it != gaps[ch].end(); ++it) it->position += wrapped;
            largest->lost += wrapped;
            largest->wraparound = true;
        }
        const std::uint64_t tail = (wrapped > 0 && gaps[ch].empty()) ? deficit : trailing;
        if (tail > 0) {
            gaps[ch].push_back({static_cast<std::uint8_t>(ch), seq.size(), tail, tail >= kSequenceModulus});
            seq.insert(seq.end(), tail, std::nullopt);
        }
    }
    for (auto& g : gaps) out.gaps.insert(out.gaps.end(), g.begin(), g.end());
    return out;
}

} // namespace ecgz
