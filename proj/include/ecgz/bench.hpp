#pragma once

// Evaluation harness: bit compression ratio over record sets, the predictor
// order comparison, and packet-loss simulation over the wire format.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ecgz/baselines.hpp"
#include "ecgz/container.hpp"
#include "ecgz/decoder.hpp"
#include "ecgz/encoder.hpp"
#include "ecgz/error.hpp"
#include "ecgz/ingest.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

/// Uncompressed bits over compressed bits.
inline double bcr(std::uint64_t n_samples, unsigned orig_bits, std::uint64_t compressed_bits) {
    if (compressed_bits == 0) throw Error(ErrorKind::usage, "BCR with zero compressed bits");
    return static_cast<double>(n_samples) * orig_bits / static_cast<double>(compressed_bits);
}

enum class ChannelSelection { all, first };

inline std::vector<std::size_t> selected_channels(const EcgRecord& rec, ChannelSelection sel) {
    std::vector<std::size_t> out;
    const std::size_t n = sel == ChannelSelection::first ? std::min<std::size_t>(1, rec.channels.size())
                                                         : std::min<std::size_t>(rec.channels.size(), kMaxChannels);
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Database evaluation

struct BenchConfig {
    EncoderConfig encoder;
    unsigned orig_bits = 12;
    std::vector<std::size_t> m_values = {8, 16, 32, 64};
    ChannelSelection channels = ChannelSelection::all;
    unsigned threads = 0; // 0 = hardware concurrency
};

struct ChannelResult {
    std::size_t channel = 0;
    std::uint64_t samples = 0;
    std::uint64_t frames = 0;
    std::uint64_t compressed_bits = 0;
    double bcr = 0;
};

struct RecordResult {
    std::string name;
    std::vector<ChannelResult> channels;
    std::uint64_t samples = 0;
    std::uint64_t frames = 0;
    std::uint64_t compressed_bits = 0;
    std::uint64_t archive_payload_bits = 0;
    double bcr = 0;
    std::uint64_t ideal_bits = 0;
    double ideal_bcr = 0;
    std::vector<std::uint64_t> selective_bits; // one per m value
    std::vector<double> selective_bcr;
    bool lossless = false;
};

struct Aggregate {
    double mean = 0;
    double max = 0;
    double min = 0;
    double pooled = 0; // total uncompressed bits over total compressed bits
};

struct BcrReport {
    BenchConfig config;
    std::vector<RecordResult> records;
    std::vector<std::string> missing;
    Aggregate proposed;
    Aggregate ideal;
    std::vector<Aggregate> selective; // one per m value
    std::size_t best_m_index = 0;

    bool empty() const noexcept { return records.empty(); }
    const Aggregate& best_selective() const { return selective.at(best_m_index); }
    std::size_t best_m() const { return config.m_values.at(best_m_index); }
};

inline RecordResult evaluate_record(const EcgRecord& rec, const BenchConfig& cfg) {
    RecordResult r;
    r.name = rec.name;
    const auto chans = selected_channels(rec, cfg.channels);
    std::vector<std::vector<Sample>> input;
    for (auto ch : chans) input.push_back(rec.channels[ch]);
    if (input.empty()) throw Error(ErrorKind::usage, "record " + rec.name + " has no channels");

    const EncodedRecord enc = encode_channels(input, cfg.encoder);
    EncoderConfig ecfg = cfg.encoder;
    ecfg.channel_count = static_cast<int>(input.size());
    const auto rate = static_cast<std::uint16_t>(std::clamp(std::lround(rec.sample_rate_hz), 0L, 65535L));
    const EcgzRecord archive = make_ecgz_record(enc, rate, ecfg);
    const auto bytes = write_ecgz(archive);
    r.archive_payload_bits = (bytes.size() - kEcgzFixedHeaderBytes - kEcgzChannelHeaderBytes * input.size()) * 8;

    std::vector<Residual> pooled;
    for (std::size_t i = 0; i < input.size(); ++i) {
        ChannelResult c;
        c.channel = chans[i];
        c.samples = input[i].size();
        c.frames = enc.channels[i].size();
        c.compressed_bits = c.frames * kFrameBits;
        c.bcr = c.compressed_bits ? bcr(c.samples, cfg.orig_bits, c.compressed_bits) : 0.0;
        r.channels.push_back(c);
        r.samples += c.samples;
        r.frames += c.frames;
        const auto res = residuals(input[i], cfg.encoder.order);
        pooled.insert(pooled.end(), res.begin(), res.end());
    }
    r.compressed_bits = r.frames * kFrameBits;
    if (r.compressed_bits != r.archive_payload_bits) {
        throw Error(ErrorKind::corrupt, "record " + rec.name + ": archive payload differs from 16 bits per frame");
    }
    r.lossless = decode_record(read_ecgz(bytes)) == input;

    const auto hist = histogram(pooled);
    r.ideal_bits = ideal_huffman_bits(hist);
    for (std::size_t m : cfg.m_values) {
        r.selective_bits.push_back(selective_huffman_bits(hist, m, kResidualBits));
    }
    if (r.samples > 0) {
        r.bcr = bcr(r.samples, cfg.orig_bits, r.compressed_bits);
        r.ideal_bcr = bcr(r.samples, cfg.orig_bits, r.ideal_bits);
        for (auto bits : r.selective_bits) r.selective_bcr.push_back(bcr(r.samples, cfg.orig_bits, bits));
    } else {
        r.selective_bcr.assign(r.selective_bits.size(), 0.0);
    }
    return r;
}

namespace detail {

template <typename Get>
Aggregate aggregate(const std::vector<RecordResult>& recs, unsigned orig_bits, Get get) {
    Aggregate a;
    if (recs.empty()) return a;
    a.min = std::numeric_limits<double>::infinity();
    std::uint64_t samples = 0;
    std::uint64_t bits = 0;
    for (const auto& r : recs) {
        const auto [ratio, b] = get(r);
        a.mean += ratio;
        a.max = std::max(a.max, ratio);
        a.min = std::min(a.min, ratio);
        samples += r.samples;
        bits += b;
    }
    a.mean /= static_cast<double>(recs.size());
    a.pooled = bits ? bcr(samples, orig_bits, bits) : 0.0;
    return a;
}

} // namespace detail

inline BcrReport summarize(std::vector<RecordResult> results, const BenchConfig& cfg) {
    BcrReport rep;
    rep.config = cfg;
    rep.records = std::move(results);
    const auto& recs = rep.records;
    rep.proposed = detail::aggregate(recs, cfg.orig_bits, [](const RecordResult& r) {
        return std::pair{r.bcr, r.compressed_bits};
    });
    rep.ideal = detail::aggregate(recs, cfg.orig_bits, [](const RecordResult& r) {
        return std::pair{r.ideal_bcr, r.ideal_bits};
    });
    for (std::size_t k = 0; k < cfg.m_values.size(); ++k) {
        rep.selective.push_back(detail::aggregate(recs, cfg.orig_bits, [k](const RecordResult& r) {
            return std::pair{r.selective_bcr[k], r.selective_bits[k]};
        }));
        if (rep.selective[k].mean > rep.selective[rep.best_m_index].mean) rep.best_m_index = k;
    }
    return rep;
}

inline BcrReport run_database_eval(std::span<const EcgRecord> records, const BenchConfig& cfg) {
    std::vector<RecordResult> results(records.size());
    detail::parallel_for(records.size(), cfg.threads,
                         [&](std::size_t i) { results[i] = evaluate_record(records[i], cfg); });
    return summarize(std::move(results), cfg);
}

/// Loads every WFDB record under `dir`; unreadable records go to `missing`.
inline BcrReport run_database_eval(const std::filesystem::path& dir, const BenchConfig& cfg) {
    const auto paths = list_wfdb_records(dir);
    std::vector<std::optional<RecordResult>> results(paths.size());
    std::vector<std::string> failures(paths.size());
    detail::parallel_for(paths.size(), cfg.threads, [&](std::size_t i) {
        try {
            results[i] = evaluate_record(load_wfdb_record(paths[i]), cfg);
        } catch (const Error& e) {
            failures[i] = paths[i].filename().string() + ": " + e.what();
        }
    });
    std::vector<RecordResult> ok;
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (results[i]) ok.push_back(std::move(*results[i]));
        else missing.push_back(failures[i]);
    }
    BcrReport rep = summarize(std::move(ok), cfg);
    rep.missing = std::move(missing);
    return rep;
}

inline void write_bcr_csv(const BcrReport& rep, std::ostream& out) {
    out << "record,channel,samples,frames,compressed_bits,bcr,ideal_huffman_bcr";
    for (auto m : rep.config.m_values) out << ",selective_m" << m << "_bcr";
    out << ",lossless\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& r : rep.records) {
        for (const auto& c : r.channels) {
            out << r.name << ',' << c.channel << ',' << c.samples << ',' << c.frames << ',' << c.compressed_bits
                << ',' << c.bcr << ",,";
            for (std::size_t k = 1; k < rep.config.m_values.size(); ++k) out << ',';
            out << ",\n";
        }
        out << r.name << ",all," << r.samples << ',' << r.frames << ',' << r.compressed_bits << ',' << r.bcr << ','
            << r.ideal_bcr;
        for (double b : r.selective_bcr) out << ',' << b;
        out << ',' << (r.lossless ? "yes" : "no") << '\n';
    }
}

inline void write_bcr_table(const BcrReport& rep, std::ostream& out) {
    out << std::fixed << std::setprecision(3);
    out << std::left << std::setw(10) << "record" << std::right << std::setw(10) << "samples" << std::setw(10)
        << "proposed" << std::setw(10) << "ideal" << std::setw(12) << ("sel(m=" + std::to_string(rep.best_m()) + ")")
        << '\n';
    for (const auto& r : rep.records) {
        out << std::left << std::setw(10) << r.name << std::right << std::setw(10) << r.samples << std::setw(10)
            << r.bcr << std::setw(10) << r.ideal_bcr << std::setw(12) << r.selective_bcr[rep.best_m_index] << '\n';
    }
    auto row = [&](const char* label, auto get) {
        out << std::left << std::setw(20) << label << std::right << std::setw(10) << get(rep.proposed)
            << std::setw(10) << get(rep.ideal) << std::setw(12) << get(rep.best_selective()) << '\n';
    };
    row("Avg. BCR", [](const Aggregate& a) { return a.mean; });
    row("Max. BCR", [](const Aggregate& a) { return a.max; });
    row("Min. BCR", [](const Aggregate& a) { return a.min; });
    row("Pooled BCR", [](const Aggregate& a) { return a.pooled; });
    out << "selective Huffman average by m:";
    for (std::size_t k = 0; k < rep.config.m_values.size(); ++k) {
        out << "  m=" << rep.config.m_values[k] << ": " << rep.selective[k].mean;
    }
    out << '\n';
    for (const auto& m : rep.missing) out << "skipped " << m << '\n';
}

// ---------------------------------------------------------------------------
// Predictor order comparison

struct PredictorRow {
    std::string name;
    std::array<double, 4> mape{};
    std::array<double, 4> rmspe{};
    int best_mape_order = 0;
    int best_rmspe_order = 0;
};

struct PredictorTable {
    std::vector<PredictorRow> rows;
    PredictorRow average; // mean of per-record values
};

namespace detail {

inline int argmin_order(const std::array<double, 4>& v) {
    return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin()) + 1;
}

} // namespace detail

inline PredictorRow predictor_row(const EcgRecord& rec, ChannelSelection sel) {
    PredictorRow row;
    row.name = rec.name;
    for (int l = 1; l <= 4; ++l) {
        ErrorSums sums;
        for (auto ch : selected_channels(rec, sel)) {
            sums += prediction_error_sums(rec.channels[ch], order_from_int(l));
        }
        row.mape[l - 1] = sums.mape();
        row.rmspe[l - 1] = sums.rmspe();
    }
    row.best_mape_order = detail::argmin_order(row.mape);
    row.best_rmspe_order = detail::argmin_order(row.rmspe);
    return row;
}

inline PredictorTable predictor_comparison(std::span<const EcgRecord> records, ChannelSelection sel,
                                           unsigned threads = 0) {
    PredictorTable table;
    table.rows.resize(records.size());
    detail::parallel_for(records.size(), threads, [&](std::size_t i) { table.rows[i] = predictor_row(records[i], sel); });
    table.average.name = "average";
    if (records.empty()) return table;
    for (const auto& r : table.rows) {
        for (int k = 0; k < 4; ++k) {
            table.average.mape[k] += r.mape[k] / static_cast<double>(records.size());
            table.average.rmspe[k] += r.rmspe[k] / static_cast<double>(records.size());
        }
    }
    table.average.best_mape_order = detail::argmin_order(table.average.mape);
    table.average.best_rmspe_order = detail::argmin_order(table.average.rmspe);
    return table;
}

inline void write_predictor_table(const PredictorTable& t, std::ostream& out, bool csv = false) {
    if (csv) {
        out << "record,mape1,mape2,mape3,mape4,rmspe1,rmspe2,rmspe3,rmspe4,best_mape,best_rmspe\n";
    } else {
        out << std::left << std::setw(10) << "record" << std::right;
        for (int l = 1; l <= 4; ++l) out << std::setw(9) << ("MAPE" + std::to_string(l));
        for (int l = 1; l <= 4; ++l) out << std::setw(9) << ("RMSPE" + std::to_string(l));
        out << std::setw(6) << "best" << '\n';
    }
    out << std::fixed << std::setprecision(3);
    auto emit = [&](const PredictorRow& r) {
        if (csv) {
            out << r.name;
            for (double v : r.mape) out << ',' << v;
            for (double v : r.rmspe) out << ',' << v;
            out << ',' << r.best_mape_order << ',' << r.best_rmspe_order << '\n';
        } else {
            out << std::left << std::setw(10) << r.name << std::right;
            for (double v : r.mape) out << std::setw(9) << v;
            for (double v : r.rmspe) out << std::setw(9) << v;
            out << std::setw(4) << r.best_mape_order << '/' << r.best_rmspe_order << '\n';
        }
    };
    for (const auto& r : t.rows) emit(r);
    if (!t.rows.empty()) emit(t.average);
}

// ---------------------------------------------------------------------------
// Loss simulation

struct LossPattern {
    enum class Kind { none, single, burst, bernoulli, periodic };
    Kind kind = Kind::none;
    double probability = 0;       // bernoulli: per-unit drop probability
    std::size_t burst_length = 1; // burst: consecutive wire units
    double period_s = 600;        // periodic: one drop per window of this length
};

struct ChannelLoss {
    std::vector<SampleSpan> spans;
    std::vector<std::size_t> span_bounds; // allowed length per span
    std::size_t samples = 0;
    std::size_t non_exact = 0;
    std::size_t mismatches = 0; // exact-marked samples that differ from ground truth
    std::size_t unplaced_runs = 0;
};

struct LossReport {
    std::uint64_t seed = 0;
    std::uint32_t resync_interval = 0;
    std::vector<std::size_t> dropped_units; // indices into the wire stream
    std::vector<ChannelLoss> channels;

    std::size_t total_samples() const noexcept {
        std::size_t n = 0;
        for (const auto& c : channels) n += c.samples;
        return n;
    }
    double corrupted_fraction() const noexcept {
        std::size_t bad = 0;
        for (const auto& c : channels) bad += c.non_exact;
        const auto n = total_samples();
        return n ? static_cast<double>(bad) / static_cast<double>(n) : 0.0;
    }
    std::size_t max_span() const noexcept {
        std::size_t m = 0;
        for (const auto& c : channels)
            for (const auto& s : c.spans) m = std::max(m, s.length);
        return m;
    }
    bool exact_outside_spans() const noexcept {
        for (const auto& c : channels)
            if (c.mismatches) return false;
        return true;
    }
    bool bounds_hold() const noexcept {
        if (resync_interval == 0) return true;
        for (const auto& c : channels)
            for (std::size_t i = 0; i < c.spans.size(); ++i)
                if (c.spans[i].length > c.span_bounds[i]) return false;
        return true;
    }
    bool passed() const noexcept { return exact_outside_spans() && bounds_hold(); }
};

inline std::vector<std::size_t> choose_drops(const EncodedRecord& enc, const LossPattern& pattern,
                                             double sample_rate_hz, std::mt19937_64& rng) {
    const std::size_t n = enc.emission_log.size();
    std::vector<std::size_t> drops;
    if (n == 0) return drops;
    switch (pattern.kind) {
    case LossPattern::Kind::none: break;
    case LossPattern::Kind::single:
        drops.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
        break;
    case LossPattern::Kind::burst: {
        const std::size_t len = std::min(pattern.burst_length, n);
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - len)(rng);
        for (std::size_t i = 0; i < len; ++i) drops.push_back(start + i);
        break;
    }
    case LossPattern::Kind::bernoulli: {
        std::bernoulli_distribution drop(pattern.probability);
        for (std::size_t i = 0; i < n; ++i)
            if (drop(rng)) drops.push_back(i);
        break;
    }
    case LossPattern::Kind::periodic: {
        const auto window = static_cast<std::uint64_t>(std::max(1.0, std::round(pattern.period_s * sample_rate_hz)));
        std::vector<std::vector<std::size_t>> by_window;
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = enc.emission_log[i].frame.first_sample / window;
            if (by_window.size() <= w) by_window.resize(w + 1);
            by_window[w].push_back(i);
        }
        for (const auto& units : by_window) {
            // Only whole windows count; a partial trailing window gets no drop.
            if (units.empty()) continue;
            drops.push_back(units[std::uniform_int_distribution<std::size_t>(0, units.size() - 1)(rng)]);
        }
        if (!by_window.empty()) {
            std::uint64_t longest = 0;
            for (auto c : enc.sample_counts) longest = std::max<std::uint64_t>(longest, c);
            if (longest % window != 0) drops.pop_back();
        }
        std::sort(drops.begin(), drops.end());
        break;
    }
    }
    return drops;
}

/// Encodes `channels`, drops wire units per `pattern`, decodes the survivors
/// and checks them against the input.
inline LossReport loss_simulation(std::span<const std::vector<Sample>> channels, double sample_rate_hz,
                                  EncoderConfig cfg, const LossPattern& pattern, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const EncodedRecord enc = encode_channels(channels, cfg);
    cfg.channel_count = static_cast<int>(channels.size());

    LossReport rep;
    rep.seed = seed;
    rep.resync_interval = cfg.resync_interval_samples;
    rep.dropped_units = choose_drops(enc, pattern, sample_rate_hz, rng);

    const auto units = wire_encode(enc.emission_log);
    std::vector<bool> dropped(units.size(), false);
    for (auto i : rep.dropped_units) dropped[i] = true;
    std::vector<WireUnit> received;
    received.reserve(units.size());
    for (std::size_t i = 0; i < units.size(); ++i)
        if (!dropped[i]) received.push_back(units[i]);

    std::vector<std::uint64_t> expected_frames;
    for (const auto& c : enc.channels) expected_frames.push_back(c.size());
    const WireDecodeResult wire = wire_decode(received, channels.size(), expected_frames);

    ResilientOptions opt;
    opt.order = cfg.order;
    opt.resync_interval_samples = cfg.resync_interval_samples;
    opt.resync_e_frames = cfg.resync_e_frames;

    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
        const auto res = decode_resilient(wire.channels[ch], enc.sample_counts[ch], opt);
        ChannelLoss cl;
        cl.samples = channels[ch].size();
        cl.spans = res.desync_spans;
        cl.non_exact = res.non_exact_count();
        cl.unplaced_runs = res.unplaced_runs;
        for (std::size_t i = 0; i < res.samples.size(); ++i) {
            if (res.samples[i].status == SampleStatus::exact && res.samples[i].value != channels[ch][i]) ++cl.mismatches;
        }
        for (const auto& span : cl.spans) {
            std::size_t lost = 0;
            for (auto u : rep.dropped_units) {
                const auto& e = enc.emission_log[u];
                if (e.channel == ch && e.frame.first_sample >= span.begin && e.frame.first_sample < span.end()) {
                    lost += field_count(e.frame.type);
                }
            }
            cl.span_bounds.push_back(cfg.resync_interval_samples + kQueueDepth + lost);
        }
        rep.channels.push_back(std::move(cl));
    }
    return rep;
}

inline void write_loss_report(const LossReport& rep, std::ostream& out) {
    out << "seed," << rep.seed << '\n';
    out << "resync_interval_samples," << rep.resync_interval << '\n';
    out << "dropped_units," << rep.dropped_units.size() << '\n';
    out << "total_samples," << rep.total_samples() << '\n';
    out << std::setprecision(6) << "corrupted_fraction," << rep.corrupted_fraction() << '\n';
    out << "max_span," << rep.max_span() << '\n';
    out << "exact_outside_spans," << (rep.exact_outside_spans() ? "yes" : "no") << '\n';
    out << "bounds_hold," << (rep.bounds_hold() ? "yes" : "no") << '\n';
    out << "channel,span_begin,span_length,bound\n";
    for (std::size_t ch = 0; ch < rep.channels.size(); ++ch) {
        const auto& c = rep.channels[ch];
        for (std::size_t i = 0; i < c.spans.size(); ++i) {
            out << ch << ',' << c.spans[i].begin << ',' << c.spans[i].length << ',' << c.span_bounds[i] << '\n';
        }
    }
}

} // namespace ecgz
