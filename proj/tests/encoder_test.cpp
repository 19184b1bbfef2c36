#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <vector>

#include "ecgz/encoder.hpp"

using namespace ecgz;

namespace {

std::vector<PendingSample> queue_of(std::initializer_list<WidthClass> widths) {
    std::vector<PendingSample> q;
    for (auto w : widths) q.push_back({0, 0, w});
    return q;
}

constexpr WidthClass W2 = WidthClass::two;
constexpr WidthClass W3 = WidthClass::three;
constexpr WidthClass W7 = WidthClass::seven;
constexpr WidthClass ESC = WidthClass::escape;

// A second encoder written from the rules alone: deque queue, explicit
// trigger counter, header/field table copied by hand.
struct RefFrame {
    char type;
    std::vector<int> fields;
};

std::vector<RefFrame> reference_encode(const std::vector<Sample>& x, int order, std::uint32_t r, int forced) {
    struct Q {
        int orig;
        int err;
    };
    const int caps[4][2] = {{6, 2}, {4, 3}, {3, 5}, {2, 7}}; // D C A B
    const char names[4] = {'D', 'C', 'A', 'B'};
    std::deque<Q> q;
    std::vector<int> past;
    std::vector<RefFrame> out;
    int pending = 0;
    std::uint64_t pushed = 0;
    auto fits = [](int e, int w) { return e >= -(1 << (w - 1)) && e < (1 << (w - 1)); };
    auto emit = [&] {
        if (pending > 0) {
            --pending;
            out.push_back({'E', {q.front().orig}});
            q.pop_front();
            return;
        }
        for (int k = 0; k < 4; ++k) {
            const auto [n, w] = std::pair{caps[k][0], caps[k][1]};
            if (static_cast<int>(q.size()) < n) continue;
            bool ok = true;
            for (int i = 0; i < n; ++i) ok = ok && fits(q[i].err, w);
            if (!ok) continue;
            RefFrame f{names[k], {}};
            for (int i = 0; i < n; ++i) {
                f.fields.push_back(q.front().err);
                q.pop_front();
            }
            out.push_back(f);
            return;
        }
        out.push_back({'E', {q.front().orig}});
        q.pop_front();
    };
    for (Sample s : x) {
        auto h = [&](int k) { return k <= static_cast<int>(past.size()) ? past[past.size() - k] : 0; };
        int pred = 0;
        switch (order) {
        case 1: pred = h(1); break;
        case 2: pred = 2 * h(1) - h(2); break;
        case 3: pred = 3 * h(1) - 3 * h(2) + h(3); break;
        case 4: pred = 4 * h(1) - 6 * h(2) + 4 * h(3) - h(4); break;
        }
        q.push_back({s, s - pred});
        past.push_back(s);
        ++pushed;
        if (r != 0 && pushed % r == 0) pending = forced;
        if (q.size() == 6) emit();
    }
    while (!q.empty()) emit();
    return out;
}

std::vector<Sample> random_ecg_like(std::mt19937& rng, std::size_t n) {
    // Mixture of smooth stretches and jumps so every frame type shows up.
    std::vector<Sample> x(n);
    int v = 0;
    int slope = 0;
    std::uniform_int_distribution<int> kind(0, 99);
    for (auto& s : x) {
        const int k = kind(rng);
        if (k < 60) slope += std::uniform_int_distribution<int>(-1, 1)(rng);
        else if (k < 90) slope += std::uniform_int_distribution<int>(-8, 8)(rng);
        else if (k < 97) slope += std::uniform_int_distribution<int>(-50, 50)(rng);
        else slope = std::uniform_int_distribution<int>(-800, 800)(rng);
        slope = std::clamp(slope, -300, 300);
        v = std::clamp(v + slope, kSampleMin, kSampleMax);
        if (v == kSampleMin || v == kSampleMax) slope = 0;
        s = static_cast<Sample>(v);
    }
    return x;
}

} // namespace

TEST(FrameEnable, MixedWidthQueue) {
    const auto q = queue_of({W3, W3, W3, W3, W7, W7});
    EXPECT_EQ(frame_enable(q), FrameSet::of({FrameType::C, FrameType::A, FrameType::B, FrameType::E}));
    EXPECT_EQ(select_frame(q, 0), FrameType::C);
}

TEST(FrameEnable, EscapeAtHeadOnlyAllowsE) {
    const auto q = queue_of({ESC, W2, W2, W2, W2, W2});
    EXPECT_EQ(frame_enable(q), FrameSet::of({FrameType::E}));
    EXPECT_EQ(select_frame(q, 0), FrameType::E);
}

TEST(FrameEnable, AllTwoBitEnablesEverything) {
    const auto q = queue_of({W2, W2, W2, W2, W2, W2});
    EXPECT_EQ(frame_enable(q).size(), 5u);
    EXPECT_EQ(select_frame(q, 0), FrameType::D);
}

TEST(FrameEnable, EmptyQueueIsUsageError) {
    const std::vector<PendingSample> q;
    EXPECT_THROW(frame_enable(q), Error);
}

TEST(FrameEnable, PendingResyncForcesE) {
    const auto q = queue_of({W2, W2, W2, W2, W2, W2});
    EXPECT_EQ(select_frame(q, 1), FrameType::E);
}

TEST(Encoder, ConstantSignalUsesTypeD) {
    // Zero history: residuals 0,0,0,... for a zero signal.
    const std::vector<Sample> x(60, 0);
    EncoderConfig cfg;
    cfg.resync_interval_samples = 0;
    const auto frames = encode_channel(x, cfg);
    ASSERT_EQ(frames.size(), 10u);
    for (const auto& f : frames) {
        EXPECT_EQ(f.type, FrameType::D);
        EXPECT_EQ(f.word, 0x0000);
    }
}

TEST(Encoder, FlushFramesPartialQueue) {
    EncoderConfig cfg;
    cfg.resync_interval_samples = 0;
    {
        const std::vector<Sample> x(4, 0);
        const auto frames = encode_channel(x, cfg);
        ASSERT_EQ(frames.size(), 1u);
        EXPECT_EQ(frames[0].type, FrameType::C);
    }
    {
        const std::vector<Sample> x(1, 0);
        const auto frames = encode_channel(x, cfg);
        ASSERT_EQ(frames.size(), 1u);
        EXPECT_EQ(frames[0].type, FrameType::E);
    }
    {
        const std::vector<Sample> x;
        EXPECT_TRUE(encode_channel(x, cfg).empty());
    }
}

TEST(Encoder, ResyncEmitsConsecutiveOriginals) {
    EncoderConfig cfg;
    cfg.resync_interval_samples = 12;
    const std::vector<Sample> x(12, 0);
    ChannelEncoder enc(cfg);
    std::vector<EmittedFrame> out;
    for (Sample s : x) enc.push(s, out);
    // Pushes 6 and 12 decide frames; the one on push 12 is forced.
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].type, FrameType::D);
    EXPECT_EQ(out[1].type, FrameType::E);
    EXPECT_TRUE(out[1].forced);
    EXPECT_EQ(enc.resync_pending(), 1);
    enc.push(0, out);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[2].type, FrameType::E);
    EXPECT_TRUE(out[2].forced);
    EXPECT_EQ(out[2].first_sample, out[1].first_sample + 1);
    EXPECT_EQ(enc.resync_pending(), 0);
}

TEST(Encoder, ForcedFramesFollowPredictorOrder) {
    for (int l = 1; l <= 4; ++l) {
        EncoderConfig cfg;
        cfg.order = order_from_int(l);
        cfg.resync_interval_samples = 30;
        const std::vector<Sample> x(300, 0);
        const auto frames = encode_channel(x, cfg);
        std::size_t run = 0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (frames[i].forced) {
                ++run;
                EXPECT_EQ(frames[i].type, FrameType::E);
            } else if (run > 0) {
                EXPECT_EQ(run, static_cast<std::size_t>(l));
                run = 0;
            }
        }
    }
}

TEST(Encoder, MatchesReferenceEncoder) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto x = random_ecg_like(rng, std::uniform_int_distribution<std::size_t>(0, 3000)(rng));
        const int order = 1 + trial % 4;
        const std::uint32_t r = trial % 3 == 0 ? 0u : std::uniform_int_distribution<std::uint32_t>(1, 400)(rng);
        EncoderConfig cfg;
        cfg.order = order_from_int(order);
        cfg.resync_interval_samples = r;
        const auto got = encode_channel(x, cfg);
        const auto want = reference_encode(x, order, r, order);
        ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_EQ(frame_letter(got[i].type), want[i].type) << "trial " << trial << " frame " << i;
            const auto decoded = unpack_frame(got[i].word);
            ASSERT_EQ(std::vector<int>(decoded.fields().begin(), decoded.fields().end()), want[i].fields);
        }
    }
}

TEST(Encoder, NonForcedFramesAreHighestPriorityThatFits) {
    std::mt19937 rng(5);
    const auto x = random_ecg_like(rng, 20000);
    EncoderConfig cfg;
    cfg.resync_interval_samples = 500;
    const auto frames = encode_channel(x, cfg);
    // Rebuild the residual of every sample and check each decision.
    std::vector<Residual> e;
    PredictorState s(cfg.order);
    for (Sample v : x) {
        e.push_back(prediction_error(v, s));
        s.advance(v);
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.forced) continue;
        const std::size_t avail = std::min<std::size_t>(6, x.size() - f.first_sample);
        for (FrameType t : kFramePriority) {
            const unsigned n = field_count(t);
            bool fits = n <= avail;
            for (unsigned k = 0; fits && k < n; ++k) {
                const int w = static_cast<int>(field_width(t));
                const Residual v = e[f.first_sample + k];
                fits = t == FrameType::E || (v >= -(1 << (w - 1)) && v < (1 << (w - 1)));
            }
            if (fits) {
                ASSERT_EQ(t, f.type) << "frame " << i;
                break;
            }
        }
    }
}

TEST(Encoder, ConservesSamplesAndIsDeterministic) {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_ecg_like(rng, std::uniform_int_distribution<std::size_t>(0, 5000)(rng));
        EncoderConfig cfg;
        cfg.resync_interval_samples = 256;
        const auto a = encode_channel(x, cfg);
        const auto b = encode_channel(x, cfg);
        std::size_t carried = 0;
        std::uint32_t next = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ASSERT_EQ(a[i].word, b[i].word);
            ASSERT_EQ(a[i].first_sample, next);
            next += field_count(a[i].type);
            carried += field_count(a[i].type);
        }
        ASSERT_EQ(carried, x.size());
    }
}

TEST(Encoder, RejectsOutOfRangeSample) {
    ChannelEncoder enc;
    std::vector<EmittedFrame> out;
    EXPECT_THROW(enc.push(2048, out), Error);
    EXPECT_THROW(enc.push(-2049, out), Error);
}

TEST(Encoder, ConfigValidation) {
    EncoderConfig cfg;
    cfg.channel_count = 5;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.channel_count = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.channel_count = 4;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.forced_e_frames(), 2);
}

TEST(Multichannel, ChannelsAreIndependentOfInterleaving) {
    std::mt19937 rng(31);
    std::vector<std::vector<Sample>> chans;
    for (int c = 0; c < 4; ++c) chans.push_back(random_ecg_like(rng, 1000 + 37 * c));
    EncoderConfig cfg;
    cfg.resync_interval_samples = 200;
    const auto rec = encode_channels(chans, cfg);
    ASSERT_EQ(rec.channels.size(), 4u);
    std::uint64_t logged = 0;
    for (int c = 0; c < 4; ++c) {
        EncoderConfig single = cfg;
        single.channel_count = 1;
        const auto alone = encode_channel(chans[c], single);
        EXPECT_EQ(rec.words(c), frame_words(alone));
        EXPECT_EQ(rec.sample_counts[c], chans[c].size());
    }
    for (const auto& e : rec.emission_log) logged += e.channel < 4;
    EXPECT_EQ(logged, rec.frame_count());
}

TEST(Multichannel, IdenticalChannelsGiveIdenticalFrames) {
    std::mt19937 rng(8);
    const auto x = random_ecg_like(rng, 777);
    const std::vector<std::vector<Sample>> chans = {x, x, x};
    const auto rec = encode_channels(chans, EncoderConfig{});
    EXPECT_EQ(rec.words(0), rec.words(1));
    EXPECT_EQ(rec.words(1), rec.words(2));
}

TEST(Multichannel, UnknownChannelIdRejected) {
    EncoderConfig cfg;
    cfg.channel_count = 2;
    const std::vector<ChannelSample> stream = {{0, 1}, {2, 1}};
    try {
        encode_multichannel(stream, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::usage);
    }
}
