#pragma once

// Fixed-coefficient slope predictors of order 1..4 over 12-bit samples.
//
//   order 1: x̂ = x1
//   order 2: x̂ = 2x1 - x2
//   order 3: x̂ = 3x1 - 3x2 + x3
//   order 4: x̂ = 4x1 - 6x2 + 4x3 - x4
//
// where xk = x(n-k). History starts at zero on both sides of the link, so the
// first samples of every channel carry large residuals.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>

#include "ecgz/error.hpp"

namespace ecgz {

using Sample = std::int16_t;
using Residual = std::int32_t;

inline constexpr unsigned kSampleBits = 12;
inline constexpr int kSampleMin = -(1 << (kSampleBits - 1));
inline constexpr int kSampleMax = (1 << (kSampleBits - 1)) - 1;
/// Width that holds any order-1 or order-2 residual of a 12-bit sample.
inline constexpr unsigned kResidualBits = kSampleBits + 2;

constexpr bool in_sample_range(std::int64_t v) noexcept {
    return v >= kSampleMin && v <= kSampleMax;
}

inline Sample checked_sample(std::int64_t v) {
    if (!in_sample_range(v)) {
        throw Error(ErrorKind::range, "sample " + std::to_string(v) + " outside 12-bit range");
    }
    return static_cast<Sample>(v);
}

enum class PredictorOrder : std::uint8_t { first = 1, second = 2, third = 3, fourth = 4 };

inline constexpr PredictorOrder kDefaultOrder = PredictorOrder::second;

constexpr int order_length(PredictorOrder order) noexcept { return static_cast<int>(order); }

inline PredictorOrder order_from_int(int l) {
    if (l < 1 || l > 4) {
        throw Error(ErrorKind::usage, "predictor order must be 1..4, got " + std::to_string(l));
    }
    return static_cast<PredictorOrder>(l);
}

/// Binomial difference coefficients a_1..a_L, padded with zeros.
constexpr std::array<int, 4> coefficients(PredictorOrder order) noexcept {
    switch (order) {
    case PredictorOrder::first: return {1, 0, 0, 0};
    case PredictorOrder::second: return {2, -1, 0, 0};
    case PredictorOrder::third: return {3, -3, 1, 0};
    case PredictorOrder::fourth: return {4, -6, 4, -1};
    }
    return {};
}

/// The last L original samples, most recent first.
class PredictorState {
public:
    constexpr explicit PredictorState(PredictorOrder order = kDefaultOrder) noexcept : order_(order) {}

    constexpr PredictorOrder order() const noexcept { return order_; }
    constexpr int length() const noexcept { return order_length(order_); }
    constexpr std::int32_t operator[](int k) const noexcept { return history_[k]; }

    constexpr std::span<const std::int32_t> history() const noexcept {
        return std::span<const std::int32_t>(history_.data(), static_cast<std::size_t>(length()));
    }

    constexpr void advance(std::int32_t x) noexcept {
        for (int k = length() - 1; k > 0; --k) {
            history_[k] = history_[k - 1];
        }
        history_[0] = x;
    }

    /// Replaces the whole history; `recent_first[0]` is x(n-1).
    constexpr void assign(std::span<const std::int32_t> recent_first) noexcept {
        history_ = {};
        for (int k = 0; k < length() && k < static_cast<int>(recent_first.size()); ++k) {
            history_[k] = recent_first[k];
        }
    }

    constexpr std::int32_t predict() const noexcept {
        const auto a = coefficients(order_);
        std::int32_t sum = 0;
        for (int k = 0; k < length(); ++k) {
            sum += a[k] * history_[k];
        }
        return sum;
    }

    friend constexpr bool operator==(const PredictorState&, const PredictorState&) = default;

private:
    PredictorOrder order_;
    std::array<std::int32_t, 4> history_{};
};

constexpr std::int32_t predict(const PredictorState& state) noexcept { return state.predict(); }

constexpr Residual prediction_error(Sample x, const PredictorState& state) noexcept {
    return static_cast<Residual>(x) - state.predict();
}

constexpr PredictorState advance(PredictorState state, Sample x) noexcept {
    state.advance(x);
    return state;
}

inline Sample reconstruct(Residual e, const PredictorState& state) {
    const std::int64_t x = static_cast<std::int64_t>(state.predict()) + e;
    if (!in_sample_range(x)) {
        throw Error(ErrorKind::corrupt, "reconstructed sample " + std::to_string(x) + " outside 12-bit range");
    }
    return static_cast<Sample>(x);
}

/// Exact integer accumulators behind MAPE and RMSPE.
struct ErrorSums {
    std::uint64_t count = 0;
    std::uint64_t sum_abs = 0;
    std::uint64_t sum_sq = 0;

    ErrorSums& operator+=(const ErrorSums& o) noexcept {
        count += o.count;
        sum_abs += o.sum_abs;
        sum_sq += o.sum_sq;
        return *this;
    }

    double mape() const {
        if (count == 0) throw Error(ErrorKind::usage, "MAPE of an empty sequence");
        return static_cast<double>(sum_abs) / static_cast<double>(count);
    }
    double rmspe() const {
        if (count == 0) throw Error(ErrorKind::usage, "RMSPE of an empty sequence");
        return std::sqrt(static_cast<double>(sum_sq) / static_cast<double>(count));
    }
};

/// Residual sums over the whole sequence from a zeroed history, warm-up included.
inline ErrorSums prediction_error_sums(std::span<const Sample> samples, PredictorOrder order) {
    ErrorSums sums;
    PredictorState state(order);
    for (Sample x : samples) {
        const std::int64_t e = prediction_error(x, state);
        sums.sum_abs += static_cast<std::uint64_t>(std::llabs(e));
        sums.sum_sq += static_cast<std::uint64_t>(e * e);
        state.advance(x);
    }
    sums.count = samples.size();
    return sums;
}

inline double mape(std::span<const Sample> samples, PredictorOrder order) {
    return prediction_error_sums(samples, order).mape();
}

inline double rmspe(std::span<const Sample> samples, PredictorOrder order) {
    return prediction_error_sums(samples, order).rmspe();
}

} // namespace ecgz
