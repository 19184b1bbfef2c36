#pragma once

// Size estimators for the variable-length comparators: per-record ideal
// Huffman (codebook cost ignored) and selective Huffman, which codes only the
// m most frequent residuals and escapes the rest at full width. Both return
// bit counts; neither produces a bitstream.

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "ecgz/error.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

using SymbolHistogram = std::map<Residual, std::uint64_t>;

struct PrefixCode {
    std::map<Residual, unsigned> lengths;

    /// Σ count(s) · len(s).
    std::uint64_t weighted_length(const SymbolHistogram& hist) const {
        std::uint64_t bits = 0;
        for (const auto& [sym, count] : hist) bits += count * lengths.at(sym);
        return bits;
    }

    /// Σ 2^-len, scaled by 2^max_len to stay exact.
    bool satisfies_kraft() const {
        unsigned longest = 0;
        for (const auto& [s, len] : lengths) longest = std::max(longest, len);
        if (longest >= 63) return false;
        std::uint64_t sum = 0;
        for (const auto& [s, len] : lengths) sum += std::uint64_t{1} << (longest - len);
        return sum <= (std::uint64_t{1} << longest);
    }
};

inline SymbolHistogram histogram(std::span<const Residual> symbols) {
    SymbolHistogram hist;
    for (Residual s : symbols) ++hist[s];
    return hist;
}

/// Huffman code lengths. Merges take the two lightest nodes, ties broken by
/// the smallest symbol in each subtree, so the result is platform-stable.
inline PrefixCode build_huffman(const SymbolHistogram& hist) {
    if (hist.empty()) throw Error(ErrorKind::usage, "Huffman code over an empty histogram");
    PrefixCode code;
    if (hist.size() == 1) {
        code.lengths[hist.begin()->first] = 1;
        return code;
    }

    struct Node {
        std::uint64_t weight;
        Residual key;
        std::size_t index;
    };
    auto heavier = [](const Node& a, const Node& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.key > b.key;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(heavier)> heap(heavier);
    std::vector<std::size_t> parent;
    std::vector<Residual> leaves;
    for (const auto& [sym, count] : hist) {
        heap.push({count, sym, parent.size()});
        parent.push_back(0);
        leaves.push_back(sym);
    }
    while (heap.size() > 1) {
        const Node a = heap.top();
        heap.pop();
        const Node b = heap.top();
        heap.pop();
        const std::size_t merged = parent.size();
        parent.push_back(merged); // root points at itself until merged
        parent[a.index] = merged;
        parent[b.index] = merged;
        heap.push({a.weight + b.weight, std::min(a.key, b.key), merged});
    }
    for (std::size_t leaf = 0; leaf < leaves.size(); ++leaf) {
        unsigned depth = 0;
        for (std::size_t n = leaf; parent[n] != n; n = parent[n]) ++depth;
        code.lengths[leaves[leaf]] = depth;
    }
    return code;
}

/// Canonical code words for a set of lengths, shortest first then by symbol.
inline std::map<Residual, std::uint64_t> canonical_codes(const PrefixCode& code) {
    std::vector<std::pair<unsigned, Residual>> order;
    for (const auto& [sym, len] : code.lengths) order.emplace_back(len, sym);
    std::sort(order.begin(), order.end());
    std::map<Residual, std::uint64_t> words;
    std::uint64_t next = 0;
    unsigned prev_len = order.empty() ? 0 : order.front().first;
    for (const auto& [len, sym] : order) {
        next <<= (len - prev_len);
        prev_len = len;
        words[sym] = next++;
    }
    return words;
}

inline std::uint64_t ideal_huffman_bits(const SymbolHistogram& hist) {
    if (hist.empty()) return 0;
    return build_huffman(hist).weighted_length(hist);
}

inline std::uint64_t ideal_huffman_bits(std::span<const Residual> residuals) {
    return ideal_huffman_bits(histogram(residuals));
}

/// Top-m symbols cost a flag bit plus their Huffman code (built over those m
/// counts only); every other symbol costs a flag bit plus `escape_bits` raw bits.
inline std::uint64_t selective_huffman_bits(const SymbolHistogram& hist, std::size_t m,
                                            unsigned escape_bits = kResidualBits) {
    if (m == 0) throw Error(ErrorKind::usage, "selective Huffman needs m >= 1");
    if (hist.empty()) return 0;
    std::vector<std::pair<std::uint64_t, Residual>> ranked;
    for (const auto& [sym, count] : hist) ranked.emplace_back(count, sym);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::size_t coded = std::min(m, ranked.size());
    SymbolHistogram top;
    for (std::size_t i = 0; i < coded; ++i) top[ranked[i].second] = ranked[i].first;
    std::uint64_t bits = build_huffman(top).weighted_length(top);
    for (std::size_t i = 0; i < coded; ++i) bits += ranked[i].first;
    for (std::size_t i = coded; i < ranked.size(); ++i) bits += ranked[i].first * (1 + escape_bits);
    return bits;
}

inline std::uint64_t selective_huffman_bits(std::span<const Residual> residuals, std::size_t m,
                                            unsigned escape_bits = kResidualBits) {
    return selective_huffman_bits(histogram(residuals), m, escape_bits);
}

/// Residuals of one channel from a zeroed predictor history.
inline std::vector<Residual> residuals(std::span<const Sample> samples, PredictorOrder order = kDefaultOrder) {
    std::vector<Residual> out;
    out.reserve(samples.size());
    PredictorState state(order);
    for (Sample x : samples) {
        out.push_back(prediction_error(x, state));
        state.advance(x);
    }
    return out;
}

} // namespace ecgz
