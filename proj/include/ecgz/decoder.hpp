#pragma once

// Frame decoder: the exact reverse of the encoder, plus a loss-tolerant mode
// that works on a frame sequence with erasures.
//
// After an erasure the receiver no longer knows its predictor history, so
// residual frames yield unknown samples until L consecutive originals (Type E
// frames) arrive. An erased frame also hides how many samples it carried
// (1 to 6), so every run of frames received after an erasure has to be
// positioned again:
//
//  * frames before the first erasure are counted from the start;
//  * frames after the last erasure are counted back from the known total;
//  * a run between two erasures is placed at the unique offset where every
//    resynchronization the encoder must have performed (one every r pushes,
//    starting at the first frame decided at or after the trigger) lands on
//    Type E frames. A run that admits zero or several offsets stays unknown.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgz/encoder.hpp"
#include "ecgz/error.hpp"
#include "ecgz/frame.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

/// Streaming decoder for one channel whose frames all arrived.
class ChannelDecoder {
public:
    explicit ChannelDecoder(PredictorOrder order = kDefaultOrder) : state_(order) {}

    template <typename Out>
    void push(FrameWord word, Out&& emit) {
        const DecodedFrame f = unpack_frame(word);
        for (std::int32_t v : f.fields()) {
            const Sample x = f.type == FrameType::E ? static_cast<Sample>(v) : reconstruct(v, state_);
            state_.advance(x);
            emit(x);
        }
    }

    const PredictorState& state() const noexcept { return state_; }

private:
    PredictorState state_;
};

inline std::vector<Sample> decode_channel(std::span<const FrameWord> frames, std::size_t expected_count,
                                          PredictorOrder order = kDefaultOrder) {
    std::vector<Sample> out;
    out.reserve(expected_count);
    ChannelDecoder dec(order);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (out.size() >= expected_count) {
            throw Error(ErrorKind::corrupt, std::to_string(frames.size() - i) + " surplus frames after " +
                                                std::to_string(expected_count) + " samples");
        }
        dec.push(frames[i], [&](Sample x) { out.push_back(x); });
    }
    if (out.size() > expected_count) {
        throw Error(ErrorKind::corrupt, "last frame overruns the declared sample count");
    }
    if (out.size() < expected_count) {
        throw Error(ErrorKind::truncated, "frames carry " + std::to_string(out.size()) + " of " +
                                              std::to_string(expected_count) + " samples");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loss-tolerant decoding

using MaybeFrame = std::optional<FrameWord>; // nullopt marks an erased frame

enum class SampleStatus : std::uint8_t {
    exact,
    unknown,
    estimated, // degraded recovery with fewer originals than predictor taps
};

struct RecoveredSample {
    Sample value = 0;
    SampleStatus status = SampleStatus::unknown;

    friend bool operator==(const RecoveredSample&, const RecoveredSample&) = default;
};

struct SampleSpan {
    std::size_t begin = 0;
    std::size_t length = 0;

    std::size_t end() const noexcept { return begin + length; }
    friend bool operator==(const SampleSpan&, const SampleSpan&) = default;
};

struct ResilientOptions {
    PredictorOrder order = kDefaultOrder;
    std::uint32_t resync_interval_samples = 0; // needed to place runs between two erasures
    int resync_e_frames = 0;                   // 0 selects the predictor order
    bool approximate_recovery = false;         // seed missing history with the last original

    int forced_e_frames() const noexcept {
        return resync_e_frames == 0 ? order_length(order) : resync_e_frames;
    }
};

struct ResilientResult {
    std::vector<RecoveredSample> samples;
    std::vector<SampleSpan> desync_spans; // maximal runs of non-exact samples
    std::size_t unplaced_runs = 0;        // runs between erasures that could not be positioned

    std::size_t non_exact_count() const noexcept {
        std::size_t n = 0;
        for (const auto& s : desync_spans) n += s.length;
        return n;
    }
};

namespace detail {

// Frames received between erasures, decoded relative to their first sample.
struct ReceivedRun {
    std::size_t lost_before = 0; // erased frames immediately preceding the run
    std::vector<std::uint32_t> frame_starts;
    std::vector<FrameType> frame_types;
    std::vector<RecoveredSample> samples;
};

class RunDecoder {
public:
    RunDecoder(const ResilientOptions& opt, bool synced) : opt_(opt), state_(opt.order), synced_(synced) {}

    void decode(FrameWord word, ReceivedRun& run) {
        const DecodedFrame f = unpack_frame(word);
        run.frame_starts.push_back(static_cast<std::uint32_t>(run.samples.size()));
        run.frame_types.push_back(f.type);
        if (f.type == FrameType::E) {
            const auto x = static_cast<Sample>(f.values[0]);
            run.samples.push_back({x, SampleStatus::exact});
            on_original(x);
            return;
        }
        known_.clear();
        for (std::int32_t e : f.fields()) {
            if (synced_) {
                const Sample x = reconstruct(e, state_);
                state_.advance(x);
                run.samples.push_back({x, SampleStatus::exact});
            } else if (estimating_) {
                const auto x = static_cast<Sample>(
                    std::clamp<std::int64_t>(static_cast<std::int64_t>(state_.predict()) + e, kSampleMin, kSampleMax));
                state_.advance(x);
                run.samples.push_back({x, SampleStatus::estimated});
            } else {
                run.samples.push_back({0, SampleStatus::unknown});
            }
        }
    }

private:
    void on_original(Sample x) {
        state_.advance(x);
        if (synced_) return;
        known_.push_back(x);
        const auto taps = static_cast<std::size_t>(order_length(opt_.order));
        if (known_.size() >= taps) {
            synced_ = true;
            estimating_ = false;
            known_.clear();
        } else if (opt_.approximate_recovery && !estimating_) {
            std::vector<std::int32_t> seed(taps, x);
            for (std::size_t k = 0; k < known_.size(); ++k) {
                seed[k] = known_[known_.size() - 1 - k];
            }
            for (std::size_t k = known_.size(); k < taps; ++k) {
                seed[k] = seed[known_.size() - 1];
            }
            state_.assign(seed);
            estimating_ = true;
        }
    }

    ResilientOptions opt_;
    PredictorState state_;
    bool synced_;
    bool estimating_ = false;
    std::vector<std::int32_t> known_;
};

// True when placing `run` at absolute sample `offset` puts every forced
// resynchronization frame the encoder owed on Type E frames. The frame
// starting at s is decided on push s+6; a trigger on push n forces the first
// frame decided at or after n and the frames right after it.
inline bool resync_schedule_matches(const ReceivedRun& run, std::size_t offset, std::uint32_t r, int forced) {
    const auto& starts = run.frame_starts;
    const std::size_t nf = starts.size();
    if (nf < 2) return true;
    const std::uint64_t first_decision = offset + starts.front() + kQueueDepth;
    const std::uint64_t last_decision = offset + starts.back() + kQueueDepth;
    std::size_t j = 1;
    for (std::uint64_t n = (first_decision / r + 1) * r; n <= last_decision; n += r) {
        while (j < nf && offset + starts[j] + kQueueDepth < n) ++j;
        if (j >= nf) break;
        for (int k = 0; k < forced && j + static_cast<std::size_t>(k) < nf; ++k) {
            if (run.frame_types[j + static_cast<std::size_t>(k)] != FrameType::E) return false;
        }
    }
    return true;
}

} // namespace detail

inline ResilientResult decode_resilient(std::span<const MaybeFrame> frames, std::size_t expected_count,
                                        const ResilientOptions& opt = {}) {
    using detail::ReceivedRun;

    std::vector<ReceivedRun> runs(1);
    {
        detail::RunDecoder dec(opt, true);
        std::size_t lost = 0;
        for (const auto& f : frames) {
            if (!f) {
                ++lost;
                continue;
            }
            if (lost > 0) {
                runs.push_back({});
                runs.back().lost_before = lost;
                dec = detail::RunDecoder(opt, false);
                lost = 0;
            }
            dec.decode(*f, runs.back());
        }
        if (lost > 0) {
            runs.push_back({});
            runs.back().lost_before = lost;
        }
    }

    ResilientResult result;
    result.samples.assign(expected_count, RecoveredSample{});
    auto place = [&](const ReceivedRun& run, std::size_t offset) {
        std::copy(run.samples.begin(), run.samples.end(), result.samples.begin() + static_cast<std::ptrdiff_t>(offset));
    };

    const ReceivedRun& head = runs.front();
    if (runs.size() == 1) {
        if (head.samples.size() > expected_count) {
            throw Error(ErrorKind::corrupt, "frames carry more than the declared sample count");
        }
        if (head.samples.size() < expected_count) {
            throw Error(ErrorKind::truncated, "frames carry " + std::to_string(head.samples.size()) + " of " +
                                                  std::to_string(expected_count) + " samples");
        }
        place(head, 0);
        return result;
    }

    if (head.samples.size() > expected_count) {
        throw Error(ErrorKind::corrupt, "frames carry more than the declared sample count");
    }
    place(head, 0);

    // Feasible interval for where the next run may start.
    std::size_t lo = head.samples.size();
    std::size_t hi = head.samples.size();
    const bool schedulable = opt.resync_interval_samples > 2 * kQueueDepth;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        const ReceivedRun& run = runs[i];
        const std::size_t min_start = lo + run.lost_before;
        const std::size_t max_start = hi + kMaxFrameFields * run.lost_before;
        if (i + 1 == runs.size()) {
            if (run.samples.size() > expected_count || expected_count - run.samples.size() < min_start) {
                throw Error(ErrorKind::corrupt, "received frames exceed the declared sample count");
            }
            const std::size_t offset = expected_count - run.samples.size();
            if (offset > max_start) {
                throw Error(ErrorKind::truncated, "erasures cannot account for the missing samples");
            }
            place(run, offset);
            break;
        }
        std::optional<std::size_t> found;
        bool ambiguous = !schedulable;
        for (std::size_t o = min_start; !ambiguous && o <= max_start; ++o) {
            if (o + run.samples.size() > expected_count) break;
            if (detail::resync_schedule_matches(run, o, opt.resync_interval_samples, opt.forced_e_frames())) {
                if (found) ambiguous = true;
                found = o;
            }
        }
        if (found && !ambiguous) {
            place(run, *found);
            lo = hi = *found + run.samples.size();
        } else {
            ++result.unplaced_runs;
            lo = min_start + run.samples.size();
            hi = max_start + run.samples.size();
        }
    }

    for (std::size_t i = 0; i < result.samples.size();) {
        if (result.samples[i].status == SampleStatus::exact) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < result.samples.size() && result.samples[j].status != SampleStatus::exact) ++j;
        result.desync_spans.push_back({i, j - i});
        i = j;
    }
    return result;
}

} // namespace ecgz
