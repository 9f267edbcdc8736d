#include "senc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "senc/errors.hpp"
#include "senc/tape.hpp"

namespace senc {

std::vector<TokenSeq> synthetic_batch(const Encoder& encoder, std::size_t n, std::size_t b) {
    if (encoder.kind() == EncoderKind::transformer && n > encoder.config().transformer.max_len)
        throw InputError("bench length " + std::to_string(n) + " exceeds transformer max_len " +
                         std::to_string(encoder.config().transformer.max_len));
    const auto& words = encoder.vocab().unigrams();
    if (words.size() <= 2) throw InputError("vocabulary has no ordinary tokens to build bench sentences");
    const std::size_t m = words.size() - 2;
    std::vector<TokenSeq> out;
    out.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<std::string> toks;
        toks.reserve(n);
        for (std::size_t j = 0; j < n; ++j) toks.push_back(words[2 + (i * 7 + j) % m]);
        out.push_back(encoder.vocab().encode(std::move(toks)));
    }
    return out;
}

MemoryRecord measure_memory(const Encoder& encoder, std::size_t n, std::size_t b) {
    auto seqs = synthetic_batch(encoder, n, b);
    Tape tape(false);
    encoder.forward(tape, seqs);
    return {tape.activation_floats(), encoder.params().total_floats(), tape.multiply_adds()};
}

BenchRecord time_encode(const Encoder& encoder, std::size_t n, std::size_t b, std::size_t trials,
                        double min_trial_ms) {
    if (trials < 5) throw ConfigError("bench needs at least 5 trials");
    if (b == 0) throw ConfigError("bench batch size must be positive");
    using clock = std::chrono::steady_clock;
    auto seqs = synthetic_batch(encoder, n, b);
    auto elapsed_ms = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    // warm-up for at least one trial's worth of time (first-touch page
    // faults, frequency ramp); also sizes the inner loop
    auto t0 = clock::now();
    volatile float sink = 0.0f;
    std::size_t warm = 0;
    do {
        sink = encoder.encode_batch(seqs).data()[0];
        ++warm;
    } while (elapsed_ms(t0) < min_trial_ms);
    const double once = std::max(elapsed_ms(t0) / static_cast<double>(warm), 1e-6);
    const std::size_t reps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(min_trial_ms / once)));

    std::vector<double> per_sentence;
    for (std::size_t t = 0; t < trials; ++t) {
        t0 = clock::now();
        for (std::size_t r = 0; r < reps; ++r) sink = encoder.encode_batch(seqs).data()[0];
        per_sentence.push_back(elapsed_ms(t0) / static_cast<double>(reps * b));
    }
    (void)sink;
    std::ranges::sort(per_sentence);

    auto mem = measure_memory(encoder, n, b);
    BenchRecord r;
    r.kind = encoder.kind();
    r.n = n;
    r.b = b;
    r.ms_per_sentence = per_sentence[per_sentence.size() / 2];
    r.min_ms = per_sentence.front();
    r.max_ms = per_sentence.back();
    r.trials = trials;
    r.peak_act_floats = mem.peak_act_floats;
    r.param_floats = mem.param_floats;
    r.multiply_adds = mem.multiply_adds;
    return r;
}

ScalingFit fit_scaling(std::span<const double> n, std::span<const double> t) {
    if (n.size() != t.size()) throw InputError("fit_scaling: length and time counts differ");
    std::set<double> distinct(n.begin(), n.end());
    if (distinct.size() < 5) throw InputError("fit_scaling needs at least 5 distinct lengths");
    if (*distinct.begin() <= 0.0 || *distinct.rbegin() < 8.0 * *distinct.begin())
        throw InputError("fit_scaling needs lengths spanning at least 8x");
    for (double v : t)
        if (!(v > 0.0)) throw InputError("fit_scaling needs positive times");
    const std::size_t m = n.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += std::log(n[i]);
        my += std::log(t[i]);
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = std::log(n[i]) - mx, dy = std::log(t[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    ScalingFit f;
    f.alpha = sxy / sxx;
    // a perfectly flat series is explained by the fit
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.n_min = static_cast<std::size_t>(*distinct.begin());
    f.n_max = static_cast<std::size_t>(*distinct.rbegin());
    f.points = m;
    return f;
}

ScalingFit fit_scaling(std::span<const BenchRecord> records) {
    if (records.empty()) throw InputError("fit_scaling needs records");
    std::vector<double> n, t;
    for (const auto& r : records) {
        if (r.kind != records[0].kind || r.b != records[0].b)
            throw InputError("fit_scaling records must share encoder and batch size");
        n.push_back(static_cast<double>(r.n));
        t.push_back(r.ms_per_sentence);
    }
    return fit_scaling(n, t);
}

ModelConfig bench_model_config(EncoderKind kind) {
    ModelConfig c;
    c.kind = kind;
    c.embed_dim = 16;
    c.transformer.num_layers = 1;
    c.transformer.num_heads = 4;
    c.transformer.ffn_dim = 32;
    c.transformer.max_len = 512;
    c.dan.hidden_dims = {16, 16};
    return c;
}

Vocabulary bench_vocab(std::size_t size) {
    std::vector<std::string> u = {"<unk>", "<pad>"};
    for (std::size_t i = 0; i < size; ++i) u.push_back("w" + std::to_string(i));
    return Vocabulary(std::move(u), {"<unk>", "<pad>"}, 1);
}

std::vector<BenchRecord> run_bench(const Encoder& encoder, const BenchOptions& opts) {
    std::vector<BenchRecord> out;
    for (auto b : opts.batches)
        for (auto n : opts.lengths) out.push_back(time_encode(encoder, n, b, opts.trials));
    return out;
}

std::vector<BenchFit> fit_all(std::span<const BenchRecord> records) {
    std::map<std::pair<int, std::size_t>, std::vector<BenchRecord>> groups;
    for (const auto& r : records) groups[{static_cast<int>(r.kind), r.b}].push_back(r);
    std::vector<BenchFit> out;
    for (const auto& [key, recs] : groups) {
        try {
            out.push_back({recs[0].kind, key.second, fit_scaling(recs)});
        } catch (const InputError&) {
            // too few lengths for this group; no fit line
        }
    }
    return out;
}

std::string bench_csv(std::span<const BenchRecord> records, std::span<const BenchFit> fits) {
    std::ostringstream out;
    out << "encoder,n,b,ms_per_sentence,peak_act_floats,param_floats\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.6g", r.ms_per_sentence);
        out << encoder_kind_name(r.kind) << ',' << r.n << ',' << r.b << ',' << buf << ',' << r.peak_act_floats << ','
            << r.param_floats << '\n';
    }
    for (const auto& f : fits) {
        std::snprintf(buf, sizeof buf, "alpha=%.4f r2=%.4f", f.fit.alpha, f.fit.r2);
        out << "# fit encoder=" << encoder_kind_name(f.kind) << " b=" << f.b << ' ' << buf << " n=" << f.fit.n_min
            << ".." << f.fit.n_max << " points=" << f.fit.points << '\n';
    }
    return out.str();
}

void write_bench_csv(const std::filesystem::path& path, std::span<const BenchRecord> records,
                     std::span<const BenchFit> fits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << bench_csv(records, fits);
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<BenchRecord> parse_bench_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "encoder,n,b,ms_per_sentence,peak_act_floats,param_floats")
        throw FormatError("bench csv: missing or wrong header");
    std::vector<BenchRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 6) throw FormatError("bench csv line " + std::to_string(lineno) + ": expected 6 columns");
        try {
            BenchRecord r;
            r.kind = parse_encoder_kind(f[0]);
            r.n = std::stoull(f[1]);
            r.b = std::stoull(f[2]);
            r.ms_per_sentence = std::stod(f[3]);
            r.peak_act_floats = std::stoull(f[4]);
            r.param_floats = std::stoull(f[5]);
            out.push_back(r);
        } catch (const std::exception& e) {
            throw FormatError("bench csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace senc
