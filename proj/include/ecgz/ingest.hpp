#pragma once

// Input readers: WFDB records (.hea header + format-212 signal file) and
// plain CSV, both normalized to signed 12-bit samples.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ecgz/bitcodec.hpp"
#include "ecgz/error.hpp"
#include "ecgz/predictor.hpp"

namespace ecgz {

struct WfdbSignal {
    std::string file_name;
    int format = 212;
    double gain = 200.0;    // ADC units per physical unit
    int adc_resolution = 12;
    int adc_zero = 0;
    int baseline = 0;       // defaults to adc_zero
    std::optional<int> initial_value;
    std::optional<int> checksum;
    std::string description;
};

struct WfdbRecord {
    std::string name;
    int signal_count = 0;
    double sampling_frequency = 250.0;
    std::uint64_t samples_per_signal = 0;
    std::vector<WfdbSignal> signals;
};

/// Per-signal sample sequences in raw ADC units.
using RawSignal = std::vector<std::vector<std::int16_t>>;

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T v{};
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) return std::nullopt;
    return v;
}

// Leading integer of tokens such as "212+0", "360/1", "200(0)/mV".
inline std::optional<long> leading_int(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::size_t n = (!s.empty() && s.front() == '-') ? 1 : 0;
    while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
    return parse_number<long>(s.substr(0, n));
}

inline std::optional<double> leading_double(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && (std::isdigit(static_cast<unsigned char>(s[n])) || s[n] == '.' || s[n] == '-' ||
                            s[n] == 'e' || s[n] == 'E' || s[n] == '+')) {
        ++n;
    }
    return parse_number<double>(s.substr(0, n));
}

[[noreturn]] inline void header_error(std::size_t line_no, const std::string& what) {
    throw Error(ErrorKind::parse, "header line " + std::to_string(line_no) + ": " + what);
}

} // namespace detail

inline WfdbRecord parse_wfdb_header(std::string_view text) {
    WfdbRecord rec;
    bool have_record_line = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        std::string_view line = detail::trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto tok = detail::split_ws(line);
        if (!have_record_line) {
            if (tok.size() < 2) detail::header_error(line_no, "record line needs a name and signal count");
            rec.name = std::string(tok[0]);
            if (rec.name.find('/') != std::string::npos) {
                throw Error(ErrorKind::unsupported, "multi-segment record " + rec.name);
            }
            const auto nsig = detail::parse_number<int>(tok[1]);
            if (!nsig || *nsig < 1) detail::header_error(line_no, "bad signal count '" + std::string(tok[1]) + "'");
            rec.signal_count = *nsig;
            if (tok.size() > 2) {
                const auto fs = detail::leading_double(tok[2]);
                if (!fs || *fs <= 0) detail::header_error(line_no, "bad sampling frequency");
                rec.sampling_frequency = *fs;
            }
            if (tok.size() > 3) {
                const auto n = detail::parse_number<std::uint64_t>(tok[3]);
                if (!n) detail::header_error(line_no, "bad sample count");
                rec.samples_per_signal = *n;
            }
            have_record_line = true;
            continue;
        }
        if (static_cast<int>(rec.signals.size()) == rec.signal_count) continue; // trailing info lines
        if (tok.size() < 2) detail::header_error(line_no, "signal line needs a file name and format");
        WfdbSignal sig;
        sig.file_name = std::string(tok[0]);
        const auto fmt = detail::leading_int(tok[1]);
        if (!fmt) detail::header_error(line_no, "bad format '" + std::string(tok[1]) + "'");
        sig.format = static_cast<int>(*fmt);
        if (sig.format != 212) {
            throw Error(ErrorKind::unsupported,
                        "header line " + std::to_string(line_no) + ": WFDB format " + std::to_string(sig.format));
        }
        std::optional<int> baseline;
        if (tok.size() > 2) {
            const auto gain = detail::leading_double(tok[2]);
            if (!gain) detail::header_error(line_no, "bad gain '" + std::string(tok[2]) + "'");
            sig.gain = *gain == 0.0 ? 200.0 : *gain;
            if (const auto open = tok[2].find('('); open != std::string_view::npos) {
                const auto b = detail::leading_int(tok[2].substr(open + 1));
                if (!b) detail::header_error(line_no, "bad baseline");
                baseline = static_cast<int>(*b);
            }
        }
        auto int_field = [&](std::size_t i, const char* what) -> std::optional<int> {
            if (tok.size() <= i) return std::nullopt;
            const auto v = detail::parse_number<int>(tok[i]);
            if (!v) detail::header_error(line_no, std::string("bad ") + what + " '" + std::string(tok[i]) + "'");
            return v;
        };
        if (auto v = int_field(3, "ADC resolution")) sig.adc_resolution = *v == 0 ? 12 : *v;
        if (auto v = int_field(4, "ADC zero")) sig.adc_zero = *v;
        sig.initial_value = int_field(5, "initial value");
        sig.checksum = int_field(6, "checksum");
        if (tok.size() > 7) int_field(7, "block size");
        for (std::size_t i = 8; i < tok.size(); ++i) {
            if (!sig.description.empty()) sig.description += ' ';
            sig.description += tok[i];
        }
        sig.baseline = baseline.value_or(sig.adc_zero);
        rec.signals.push_back(std::move(sig));
    }
    if (!have_record_line) throw Error(ErrorKind::parse, "header has no record line");
    if (static_cast<int>(rec.signals.size()) != rec.signal_count) {
        throw Error(ErrorKind::parse, "header declares " + std::to_string(rec.signal_count) + " signals, lists " +
                                          std::to_string(rec.signals.size()));
    }
    return rec;
}

/// Format 212: pairs of 12-bit two's-complement samples in three bytes,
/// interleaved across `n_signals`.
inline RawSignal read_format212(std::span<const std::uint8_t> bytes, std::size_t n_samples, std::size_t n_signals) {
    if (n_signals == 0) throw Error(ErrorKind::usage, "format 212 needs at least one signal");
    const std::size_t total = n_samples * n_signals;
    const std::size_t needed = (total * 3 + 1) / 2;
    if (bytes.size() < needed) {
        throw Error(ErrorKind::truncated,
                    "format 212 data holds " + std::to_string(bytes.size()) + " bytes, need " + std::to_string(needed));
    }
    RawSignal out(n_signals);
    for (auto& s : out) s.reserve(n_samples);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t base = (i / 2) * 3;
        const std::uint32_t raw = (i % 2 == 0) ? bytes[base] | ((bytes[base + 1] & 0x0Fu) << 8)
                                               : bytes[base + 2] | ((bytes[base + 1] & 0xF0u) << 4);
        out[i % n_signals].push_back(static_cast<std::int16_t>(sign_extend(raw, 12)));
    }
    return out;
}

/// Centers raw ADC units on `baseline` and checks the 12-bit range.
inline std::vector<Sample> normalize_to_12bit(std::span<const std::int16_t> raw, int baseline) {
    std::vector<Sample> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const int v = raw[i] - baseline;
        if (!in_sample_range(v)) {
            throw Error(ErrorKind::range, "sample " + std::to_string(i) + " is " + std::to_string(v) +
                                              " after removing baseline " + std::to_string(baseline));
        }
        out.push_back(static_cast<Sample>(v));
    }
    return out;
}

inline std::vector<std::int16_t> denormalize(std::span<const Sample> samples, int baseline) {
    std::vector<std::int16_t> out;
    out.reserve(samples.size());
    for (Sample s : samples) out.push_back(static_cast<std::int16_t>(s + baseline));
    return out;
}

/// Integer CSV, one row per time step. `channel_count` 0 takes the width of the first row.
inline std::vector<std::vector<Sample>> read_csv(std::string_view text, std::size_t channel_count = 0) {
    std::vector<std::vector<Sample>> out(channel_count);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        const std::string_view line = detail::trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(detail::trim(line.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (out.empty()) out.resize(cells.size());
        if (cells.size() != out.size()) {
            throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + std::to_string(cells.size()) +
                                              " columns, expected " + std::to_string(out.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_number<long>(cells[c]);
            if (!v) {
                throw Error(ErrorKind::parse,
                            "line " + std::to_string(line_no) + ": '" + std::string(cells[c]) + "' is not an integer");
            }
            if (!in_sample_range(*v)) {
                throw Error(ErrorKind::range, "line " + std::to_string(line_no) + ": " + std::to_string(*v) +
                                                  " outside 12-bit range");
            }
            out[c].push_back(static_cast<Sample>(*v));
        }
    }
    return out;
}

inline std::string write_csv(std::span<const std::vector<Sample>> channels) {
    std::string out;
    std::size_t rows = 0;
    for (const auto& c : channels) rows = std::max(rows, c.size());
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t ch = 0; ch < channels.size(); ++ch) {
            if (ch) out += ',';
            if (i < channels[ch].size()) out += std::to_string(channels[ch][i]);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A record ready for the codec.
struct EcgRecord {
    std::string name;
    double sample_rate_hz = 0;
    std::vector<std::vector<Sample>> channels;
    std::vector<int> baselines; // raw = sample + baseline
};

/// Loads `<dir>/<name>.hea` and its format-212 signal files. `path` may name
/// the header or the record without extension.
inline EcgRecord load_wfdb_record(const std::filesystem::path& path) {
    std::filesystem::path hea = path;
    if (hea.extension() != ".hea") hea += ".hea";
    const WfdbRecord header = parse_wfdb_header(read_file_text(hea));
    const auto dir = hea.parent_path();

    EcgRecord rec;
    rec.name = header.name;
    rec.sample_rate_hz = header.sampling_frequency;
    rec.channels.resize(header.signals.size());

    // Signals sharing a file are interleaved inside it, in header order.
    std::map<std::string, std::vector<std::size_t>> by_file;
    for (std::size_t i = 0; i < header.signals.size(); ++i) by_file[header.signals[i].file_name].push_back(i);
    for (const auto& [file, members] : by_file) {
        const auto bytes = read_file_bytes(dir / file);
        const std::size_t n = header.samples_per_signal != 0
                                  ? header.samples_per_signal
                                  : (bytes.size() * 2 / 3) / members.size();
        const RawSignal raw = read_format212(bytes, n, members.size());
        for (std::size_t k = 0; k < members.size(); ++k) {
            rec.channels[members[k]] = normalize_to_12bit(raw[k], header.signals[members[k]].adc_zero);
        }
    }
    for (const auto& s : header.signals) rec.baselines.push_back(s.adc_zero);
    return rec;
}

inline EcgRecord load_csv_record(const std::filesystem::path& path, std::size_t channel_count, double rate_hz) {
    EcgRecord rec;
    rec.name = path.stem().string();
    rec.sample_rate_hz = rate_hz;
    rec.channels = read_csv(read_file_text(path), channel_count);
    if (rec.channels.empty() && channel_count == 0) rec.channels.resize(1);
    rec.baselines.assign(rec.channels.size(), 0);
    return rec;
}

/// Record names (header stems) in `dir`, sorted.
inline std::vector<std::filesystem::path> list_wfdb_records(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".hea") {
            out.push_back(entry.path().parent_path() / entry.path().stem());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace ecgz
