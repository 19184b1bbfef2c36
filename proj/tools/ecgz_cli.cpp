// ecgz: compress / decompress / verify ECG records, plus the benchmark,
// predictor comparison and loss simulation drivers.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecgz/ecgz.hpp"

using namespace ecgz;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDataHelp =
    "No WFDB records found. Download the MIT/BIH Arrhythmia Database (PhysioNet, ODC-By terms), e.g.\n"
    "  wget -r -N -c -np -nH --cut-dirs=3 -P data/mitdb https://physionet.org/files/mitdb/1.0.0/\n"
    "then pass the directory holding the .hea/.dat pairs.\n";

struct InputOpts {
    std::string format = "auto";
    std::size_t channels = 0;
    std::optional<double> rate;
};

struct CodecOpts {
    std::optional<double> resync_seconds;
    std::optional<std::uint32_t> resync_samples;
    int order = 2;
};

void add_input_opts(CLI::App* sub, InputOpts& in) {
    sub->add_option("--format", in.format, "input format")->check(CLI::IsMember({"auto", "csv", "wfdb"}));
    sub->add_option("--channels", in.channels, "channels to use (CSV: column count; WFDB: first N)")
        ->check(CLI::Range(0, kMaxChannels));
    sub->add_option("--rate", in.rate, "sample rate in Hz (CSV default 360; WFDB takes the header value)");
}

void add_codec_opts(CLI::App* sub, CodecOpts& c) {
    auto* secs = sub->add_option("--resync-seconds", c.resync_seconds, "resync interval in seconds (default 4)");
    auto* samples = sub->add_option("--resync-samples", c.resync_samples, "resync interval in samples, 0 disables");
    secs->excludes(samples);
    sub->add_option("--order", c.order, "predictor order")->check(CLI::Range(1, 4));
}

EncoderConfig encoder_config(const CodecOpts& c, double rate) {
    EncoderConfig cfg;
    cfg.order = order_from_int(c.order);
    if (c.resync_samples) {
        cfg.resync_interval_samples = *c.resync_samples;
    } else {
        cfg.resync_interval_samples = static_cast<std::uint32_t>(std::lround(c.resync_seconds.value_or(4.0) * rate));
    }
    return cfg;
}

EcgRecord load_input(const fs::path& path, const InputOpts& in) {
    std::string format = in.format;
    if (format == "auto") format = (path.extension() == ".csv") ? "csv" : "wfdb";
    EcgRecord rec = format == "csv" ? load_csv_record(path, in.channels, in.rate.value_or(360.0))
                                    : load_wfdb_record(path);
    if (in.rate) rec.sample_rate_hz = *in.rate;
    std::size_t keep = rec.channels.size();
    if (format == "wfdb" && in.channels != 0) keep = std::min(keep, in.channels);
    keep = std::min<std::size_t>(keep, kMaxChannels);
    rec.channels.resize(keep);
    rec.baselines.resize(keep);
    if (rec.channels.empty()) throw Error(ErrorKind::usage, path.string() + " has no channels");
    return rec;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    return out;
}

std::vector<EcgRecord> load_dir(const fs::path& dir, std::size_t channels) {
    std::vector<EcgRecord> recs;
    for (const auto& p : list_wfdb_records(dir)) {
        try {
            InputOpts in;
            in.format = "wfdb";
            in.channels = channels;
            recs.push_back(load_input(p, in));
        } catch (const Error& e) {
            std::cerr << "skipping " << p.filename().string() << ": " << e.what() << '\n';
        }
    }
    return recs;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lossless fixed-frame ECG codec"};
    app.require_subcommand(1);

    // compress
    InputOpts c_in;
    CodecOpts c_codec;
    std::string c_input, c_output;
    auto* compress = app.add_subcommand("compress", "encode a WFDB record or CSV file into an .ecgz archive");
    compress->add_option("input", c_input, "record (.hea or stem) or .csv")->required();
    compress->add_option("-o,--output", c_output, "output archive")->required();
    add_input_opts(compress, c_in);
    add_codec_opts(compress, c_codec);

    // decompress
    std::string d_input, d_output;
    auto* decompress = app.add_subcommand("decompress", "decode an .ecgz archive to CSV");
    decompress->add_option("input", d_input, "archive")->required();
    decompress->add_option("-o,--output", d_output, "CSV output (stdout if omitted)");

    // verify
    InputOpts v_in;
    std::string v_archive, v_original;
    auto* verify = app.add_subcommand("verify", "decode an archive and compare it with the original input");
    verify->add_option("archive", v_archive)->required();
    verify->add_option("original", v_original)->required();
    add_input_opts(verify, v_in);

    // bench
    std::string b_dir, b_csv, b_channels = "all";
    unsigned b_orig_bits = 12, b_threads = 0;
    std::vector<std::size_t> b_m = {8, 16, 32, 64};
    CodecOpts b_codec;
    auto* bench = app.add_subcommand("bench", "bit compression ratio over a directory of WFDB records");
    bench->add_option("dir", b_dir, "record directory")->required();
    bench->add_option("--orig-bits", b_orig_bits, "bits per uncompressed sample")->check(CLI::Range(1, 32));
    bench->add_option("--m", b_m, "selective Huffman table sizes")->delimiter(',');
    bench->add_option("--channels", b_channels, "all or first")->check(CLI::IsMember({"all", "first"}));
    bench->add_option("--csv", b_csv, "per-record CSV report");
    bench->add_option("--threads", b_threads, "worker threads (0 = all cores)");
    add_codec_opts(bench, b_codec);

    // predict-eval
    std::string p_dir, p_channels = "first";
    bool p_csv = false;
    auto* predict = app.add_subcommand("predict-eval", "MAPE / RMSPE of predictor orders 1-4 per record");
    predict->add_option("dir", p_dir, "record directory")->required();
    predict->add_option("--channels", p_channels, "all or first")->check(CLI::IsMember({"all", "first"}));
    predict->add_flag("--csv", p_csv, "CSV output");

    // simulate-loss
    InputOpts s_in;
    CodecOpts s_codec;
    std::string s_input, s_report, s_pattern = "bernoulli";
    double s_prob = 0.001, s_period = 600;
    std::size_t s_burst = 1;
    std::uint64_t s_seed = 1;
    auto* simulate = app.add_subcommand("simulate-loss", "drop wire units and measure the damage");
    simulate->add_option("input", s_input, "record (.hea or stem) or .csv")->required();
    simulate->add_option("--pattern", s_pattern, "loss pattern")
        ->check(CLI::IsMember({"none", "single", "burst", "bernoulli", "periodic"}));
    simulate->add_option("--loss-prob", s_prob, "per-unit drop probability (bernoulli)")->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--burst", s_burst, "burst length in wire units");
    simulate->add_option("--period-seconds", s_period, "one drop per window (periodic)");
    simulate->add_option("--seed", s_seed, "RNG seed");
    simulate->add_option("--report", s_report, "write the CSV report here instead of stdout");
    add_input_opts(simulate, s_in);
    add_codec_opts(simulate, s_codec);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compress) {
            const EcgRecord rec = load_input(c_input, c_in);
            EncoderConfig cfg = encoder_config(c_codec, rec.sample_rate_hz);
            const auto enc = encode_channels(rec.channels, cfg);
            cfg.channel_count = static_cast<int>(rec.channels.size());
            const auto rate = static_cast<std::uint16_t>(std::lround(rec.sample_rate_hz));
            const auto bytes = write_ecgz(make_ecgz_record(enc, rate, cfg));
            write_bytes(c_output, bytes);
            std::cout << rec.channels.size() << " channel(s), " << enc.sample_count() << " samples, "
                      << enc.frame_count() << " frames, BCR " << bcr(enc.sample_count(), 12, 16 * enc.frame_count())
                      << '\n';
        } else if (*decompress) {
            const auto rec = read_ecgz(read_file_bytes(d_input));
            const auto csv = write_csv(decode_record(rec));
            if (d_output.empty()) {
                std::cout << csv;
            } else {
                open_out(d_output) << csv;
            }
        } else if (*verify) {
            const auto decoded = decode_record(read_ecgz(read_file_bytes(v_archive)));
            const EcgRecord original = load_input(v_original, v_in);
            if (decoded.size() != original.channels.size()) {
                std::cout << "MISMATCH: archive has " << decoded.size() << " channels, original "
                          << original.channels.size() << '\n';
                return 1;
            }
            for (std::size_t ch = 0; ch < decoded.size(); ++ch) {
                const auto& a = decoded[ch];
                const auto& b = original.channels[ch];
                const std::size_t n = std::min(a.size(), b.size());
                for (std::size_t i = 0; i < n; ++i) {
                    if (a[i] != b[i]) {
                        std::cout << "MISMATCH: channel " << ch << " sample " << i << ": " << a[i] << " != " << b[i]
                                  << '\n';
                        return 1;
                    }
                }
                if (a.size() != b.size()) {
                    std::cout << "MISMATCH: channel " << ch << " length " << a.size() << " != " << b.size() << '\n';
                    return 1;
                }
            }
            std::cout << "OK\n";
        } else if (*bench) {
            const auto recs = load_dir(b_dir, 0);
            if (recs.empty()) {
                std::cerr << kDataHelp;
                return 2;
            }
            BenchConfig cfg;
            cfg.encoder = encoder_config(b_codec, recs.front().sample_rate_hz);
            cfg.orig_bits = b_orig_bits;
            cfg.m_values = b_m;
            cfg.channels = b_channels == "first" ? ChannelSelection::first : ChannelSelection::all;
            cfg.threads = b_threads;
            const auto rep = run_database_eval(recs, cfg);
            write_bcr_table(rep, std::cout);
            if (!b_csv.empty()) {
                auto out = open_out(b_csv);
                write_bcr_csv(rep, out);
            }
        } else if (*predict) {
            const auto recs = load_dir(p_dir, 0);
            if (recs.empty()) {
                std::cerr << kDataHelp;
                return 2;
            }
            const auto sel = p_channels == "first" ? ChannelSelection::first : ChannelSelection::all;
            write_predictor_table(predictor_comparison(recs, sel), std::cout, p_csv);
        } else if (*simulate) {
            const EcgRecord rec = load_input(s_input, s_in);
            const EncoderConfig cfg = encoder_config(s_codec, rec.sample_rate_hz);
            LossPattern pattern;
            if (s_pattern == "none") pattern.kind = LossPattern::Kind::none;
            if (s_pattern == "single") pattern.kind = LossPattern::Kind::single;
            if (s_pattern == "burst") pattern.kind = LossPattern::Kind::burst;
            if (s_pattern == "bernoulli") pattern.kind = LossPattern::Kind::bernoulli;
            if (s_pattern == "periodic") pattern.kind = LossPattern::Kind::periodic;
            pattern.probability = s_prob;
            pattern.burst_length = s_burst;
            pattern.period_s = s_period;
            const auto rep = loss_simulation(rec.channels, rec.sample_rate_hz, cfg, pattern, s_seed);
            if (s_report.empty()) {
                write_loss_report(rep, std::cout);
            } else {
                auto out = open_out(s_report);
                write_loss_report(rep, out);
                std::cout << "corrupted fraction " << rep.corrupted_fraction() << ", max span " << rep.max_span()
                          << (rep.passed() ? "" : " (check failed)") << '\n';
            }
            return rep.exact_outside_spans() ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return 1;
    }
    return 0;
}
