#pragma once

// Coding-packaging encoder. Each channel keeps a six-entry queue of pending
// samples; whenever the queue is full the highest-priority frame type that
// fits the queue head is emitted (D, C, A, B, E) and only the samples it
// carries leave the queue.
//
// Periodic resynchronization: every `resync_interval_samples` pushes the
// channel owes `resync_e_frames` forced Type E frames, taken from the queue
// head at the next framing decisions. Consecutive originals let a receiver
// that lost frames rebuild its predictor history.

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ecgz/error.hpp"
#include "ecgz/frame.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

inline constexpr int kMaxChannels = 4;
inline constexpr std::size_t kQueueDepth = 6;

struct EncoderConfig {
    std::uint32_t resync_interval_samples = 2048; // 4 s at 512 Hz; 0 disables
    int channel_count = 1;
    PredictorOrder order = kDefaultOrder;
    int resync_e_frames = 0; // 0 selects one frame per predictor tap

    int forced_e_frames() const noexcept {
        return resync_e_frames == 0 ? order_length(order) : resync_e_frames;
    }

    void validate() const {
        if (channel_count < 1 || channel_count > kMaxChannels) {
            throw Error(ErrorKind::usage, "channel count must be 1..4, got " + std::to_string(channel_count));
        }
        if (resync_e_frames < 0 || resync_e_frames > 4) {
            throw Error(ErrorKind::usage, "resync_e_frames must be 0..4");
        }
    }
};

struct PendingSample {
    Sample original = 0;
    Residual error = 0;
    WidthClass width = WidthClass::two;
};

inline PendingSample make_pending(Sample x, const PredictorState& state) noexcept {
    const Residual e = prediction_error(x, state);
    return {x, e, min_width_class(e)};
}

class FrameSet {
public:
    constexpr void insert(FrameType t) noexcept { bits_ |= bit(t); }
    constexpr bool contains(FrameType t) const noexcept { return (bits_ & bit(t)) != 0; }
    constexpr std::size_t size() const noexcept { return static_cast<std::size_t>(__builtin_popcount(bits_)); }

    friend constexpr bool operator==(FrameSet, FrameSet) = default;

    static constexpr FrameSet of(std::initializer_list<FrameType> types) noexcept {
        FrameSet s;
        for (FrameType t : types) s.insert(t);
        return s;
    }

private:
    static constexpr unsigned bit(FrameType t) noexcept { return 1u << static_cast<unsigned>(t); }
    unsigned bits_ = 0;
};

namespace detail {

inline bool head_fits(std::span<const PendingSample> queue, FrameType t) noexcept {
    const unsigned n = field_count(t);
    if (queue.size() < n) return false;
    for (unsigned i = 0; i < n; ++i) {
        if (queue[i].width == WidthClass::escape || width_bits(queue[i].width) > field_width(t)) {
            return false;
        }
    }
    return true;
}

} // namespace detail

/// Frame types whose field count and width admit the head of `queue`.
inline FrameSet frame_enable(std::span<const PendingSample> queue) {
    if (queue.empty()) {
        throw Error(ErrorKind::usage, "frame_enable on an empty queue");
    }
    FrameSet set;
    for (FrameType t : {FrameType::A, FrameType::B, FrameType::C, FrameType::D}) {
        if (detail::head_fits(queue, t)) set.insert(t);
    }
    set.insert(FrameType::E);
    return set;
}

inline FrameType select_frame(std::span<const PendingSample> queue, int resync_pending) {
    if (resync_pending > 0) return FrameType::E;
    const FrameSet enabled = frame_enable(queue);
    for (FrameType t : kFramePriority) {
        if (enabled.contains(t)) return t;
    }
    return FrameType::E;
}

inline FrameWord pack_frame(FrameType t, std::span<const PendingSample> payload) {
    std::array<std::int32_t, kMaxFrameFields> fields{};
    const unsigned n = field_count(t);
    if (payload.size() < n) {
        throw Error(ErrorKind::usage, std::string("not enough samples for frame ") + frame_letter(t));
    }
    for (unsigned i = 0; i < n; ++i) {
        fields[i] = t == FrameType::E ? payload[i].original : payload[i].error;
    }
    return pack_frame(t, std::span<const std::int32_t>(fields.data(), n));
}

struct EmittedFrame {
    FrameWord word = 0;
    FrameType type = FrameType::E;
    std::uint32_t first_sample = 0; // channel-local index of the first carried sample
    bool forced = false;            // resynchronization frame
};

class ChannelEncoder {
public:
    explicit ChannelEncoder(const EncoderConfig& cfg = {}) : cfg_(cfg), state_(cfg.order) { cfg_.validate(); }

    void push(Sample x, std::vector<EmittedFrame>& out) {
        if (!in_sample_range(x)) {
            throw Error(ErrorKind::range, "sample " + std::to_string(x) + " outside 12-bit range");
        }
        queue_[size_++] = make_pending(x, state_);
        state_.advance(x);
        ++pushed_;
        if (cfg_.resync_interval_samples != 0 && ++since_resync_ == cfg_.resync_interval_samples) {
            resync_pending_ = cfg_.forced_e_frames();
            since_resync_ = 0;
        }
        if (size_ == kQueueDepth) {
            emit_one(out);
        }
    }

    /// Frames whatever is left in the queue; the channel then holds no samples.
    void flush(std::vector<EmittedFrame>& out) {
        while (size_ > 0) {
            emit_one(out);
        }
    }

    std::span<const PendingSample> queue() const noexcept { return {queue_.data(), size_}; }
    int resync_pending() const noexcept { return resync_pending_; }
    std::uint32_t samples_pushed() const noexcept { return pushed_; }
    std::uint32_t samples_since_resync() const noexcept { return since_resync_; }
    const PredictorState& state() const noexcept { return state_; }
    const EncoderConfig& config() const noexcept { return cfg_; }

private:
    void emit_one(std::vector<EmittedFrame>& out) {
        const auto pending = queue();
        const FrameType t = select_frame(pending, resync_pending_);
        const bool forced = resync_pending_ > 0;
        if (forced) --resync_pending_;
        const unsigned n = field_count(t);
        out.push_back({pack_frame(t, pending), t, pushed_ - static_cast<std::uint32_t>(size_), forced});
        for (std::size_t i = n; i < size_; ++i) {
            queue_[i - n] = queue_[i];
        }
        size_ -= n;
    }

    EncoderConfig cfg_;
    PredictorState state_;
    std::array<PendingSample, kQueueDepth> queue_{};
    std::size_t size_ = 0;
    std::uint32_t pushed_ = 0;
    std::uint32_t since_resync_ = 0;
    int resync_pending_ = 0;
};

inline std::vector<FrameWord> frame_words(std::span<const EmittedFrame> frames) {
    std::vector<FrameWord> words;
    words.reserve(frames.size());
    for (const auto& f : frames) words.push_back(f.word);
    return words;
}

/// Encodes one channel start to finish.
inline std::vector<EmittedFrame> encode_channel(std::span<const Sample> samples, const EncoderConfig& cfg = {}) {
    ChannelEncoder enc(cfg);
    std::vector<EmittedFrame> out;
    out.reserve(samples.size() / 2 + 8);
    for (Sample x : samples) enc.push(x, out);
    enc.flush(out);
    return out;
}

struct ChannelSample {
    std::uint8_t channel = 0;
    Sample value = 0;
};

struct EmissionEntry {
    std::uint8_t channel = 0;
    EmittedFrame frame;
};

struct EncodedRecord {
    std::vector<std::vector<EmittedFrame>> channels;
    std::vector<std::uint32_t> sample_counts;
    std::vector<EmissionEntry> emission_log; // frames in the order they left the encoders

    std::vector<FrameWord> words(std::size_t ch) const { return frame_words(channels.at(ch)); }

    std::uint64_t frame_count() const noexcept {
        std::uint64_t n = 0;
        for (const auto& c : channels) n += c.size();
        return n;
    }
    std::uint64_t sample_count() const noexcept {
        std::uint64_t n = 0;
        for (auto c : sample_counts) n += c;
        return n;
    }
};

/// Demultiplexes a tagged sample stream onto independent channel encoders.
inline EncodedRecord encode_multichannel(std::span<const ChannelSample> stream, const EncoderConfig& cfg) {
    cfg.validate();
    const auto nch = static_cast<std::size_t>(cfg.channel_count);
    std::vector<ChannelEncoder> encoders(nch, ChannelEncoder(cfg));
    EncodedRecord rec;
    rec.channels.resize(nch);
    rec.sample_counts.assign(nch, 0);
    std::vector<EmittedFrame> scratch;
    for (const auto& cs : stream) {
        if (cs.channel >= nch) {
            throw Error(ErrorKind::usage, "channel id " + std::to_string(cs.channel) + " >= channel count " +
                                              std::to_string(nch));
        }
        scratch.clear();
        encoders[cs.channel].push(cs.value, scratch);
        ++rec.sample_counts[cs.channel];
        for (const auto& f : scratch) {
            rec.channels[cs.channel].push_back(f);
            rec.emission_log.push_back({cs.channel, f});
        }
    }
    for (std::size_t ch = 0; ch < nch; ++ch) {
        scratch.clear();
        encoders[ch].flush(scratch);
        for (const auto& f : scratch) {
            rec.channels[ch].push_back(f);
            rec.emission_log.push_back({static_cast<std::uint8_t>(ch), f});
        }
    }
    return rec;
}

/// Round-robin interleave of per-channel sequences (ragged tails allowed).
inline std::vector<ChannelSample> interleave(std::span<const std::vector<Sample>> channels) {
    std::vector<ChannelSample> stream;
    std::size_t longest = 0;
    std::size_t total = 0;
    for (const auto& c : channels) {
        longest = std::max(longest, c.size());
        total += c.size();
    }
    stream.reserve(total);
    for (std::size_t i = 0; i < longest; ++i) {
        for (std::size_t ch = 0; ch < channels.size(); ++ch) {
            if (i < channels[ch].size()) {
                stream.push_back({static_cast<std::uint8_t>(ch), channels[ch][i]});
            }
        }
    }
    return stream;
}

inline EncodedRecord encode_channels(std::span<const std::vector<Sample>> channels, EncoderConfig cfg) {
    cfg.channel_count = static_cast<int>(channels.size());
    const auto stream = interleave(channels);
    return encode_multichannel(stream, cfg);
}

} // namespace ecgz
