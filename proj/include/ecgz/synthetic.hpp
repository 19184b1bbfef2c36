#pragma once

// Deterministic synthetic ECG: a P-QRS-T template built from Gaussian bumps,
// beat-to-beat RR jitter, slow baseline wander and white noise, quantized to
// 12-bit ADC units. Used where recorded data is unavailable (loss simulation,
// smoke benchmarks); it makes no claim to match any database statistically.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ecgz/predictor.hpp"

namespace ecgz {

struct SyntheticEcgOptions {
    double sample_rate_hz = 360.0;
    double duration_s = 60.0;
    double heart_rate_bpm = 72.0;
    double rr_jitter = 0.05;        // relative standard deviation of the RR interval
    double units_per_mv = 200.0;    // ADC gain
    double noise_units = 1.5;       // white-noise standard deviation
    double wander_units = 30.0;     // baseline wander amplitude
    double amplitude_scale = 1.0;
};

inline std::vector<Sample> synthetic_ecg(const SyntheticEcgOptions& opt, std::uint64_t seed) {
    struct Wave {
        double offset_s; // relative to the R peak
        double width_s;
        double mv;
    };
    static constexpr std::array<Wave, 5> kTemplate = {{
        {-0.20, 0.025, 0.15},  // P
        {-0.035, 0.010, -0.12}, // Q
        {0.0, 0.011, 1.10},     // R
        {0.035, 0.012, -0.25},  // S
        {0.27, 0.045, 0.30},    // T
    }};

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    const auto n = static_cast<std::size_t>(opt.duration_s * opt.sample_rate_hz);
    const double mean_rr = 60.0 / opt.heart_rate_bpm;

    std::vector<double> beats;
    for (double t = 0.3; t < opt.duration_s + 1.0;) {
        beats.push_back(t);
        t += mean_rr * std::max(0.5, 1.0 + opt.rr_jitter * unit_normal(rng));
    }
    const double scale = opt.units_per_mv * opt.amplitude_scale;
    const double wander_hz = 0.15 + 0.1 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double wander_phase = std::uniform_real_distribution<double>(0, 2 * std::numbers::pi)(rng);

    std::vector<Sample> out(n);
    std::size_t beat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / opt.sample_rate_hz;
        while (beat + 1 < beats.size() && beats[beat + 1] - 0.5 < t) ++beat;
        double v = 0;
        for (std::size_t b = (beat > 0 ? beat - 1 : 0); b < std::min(beats.size(), beat + 2); ++b) {
            for (const auto& w : kTemplate) {
                const double d = (t - beats[b] - w.offset_s) / w.width_s;
                v += w.mv * std::exp(-0.5 * d * d);
            }
        }
        v = v * scale + opt.wander_units * std::sin(2 * std::numbers::pi * wander_hz * t + wander_phase) +
            opt.noise_units * unit_normal(rng);
        out[i] = static_cast<Sample>(std::clamp<long>(std::lround(v), kSampleMin, kSampleMax));
    }
    return out;
}

} // namespace ecgz
