#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "senc/encoders.hpp"

namespace senc {

struct BenchRecord {
    EncoderKind kind = EncoderKind::dan;
    std::size_t n = 0;
    std::size_t b = 0;
    double ms_per_sentence = 0.0;  // median over trials
    double min_ms = 0.0;
    double max_ms = 0.0;
    std::size_t trials = 0;
    std::size_t peak_act_floats = 0;
    std::size_t param_floats = 0;
    std::uint64_t multiply_adds = 0;
};

struct MemoryRecord {
    std::size_t peak_act_floats = 0;
    std::size_t param_floats = 0;
    std::uint64_t multiply_adds = 0;
};

// b sentences of exactly n in-vocabulary tokens (cycling through the vocab,
// skipping the reserved ids). Throws InputError when n exceeds the
// transformer's max_len or the vocab has no ordinary tokens.
std::vector<TokenSeq> synthetic_batch(const Encoder& encoder, std::size_t n, std::size_t b);

// Instrumented counts of one no-grad forward pass. The inference tape holds
// every intermediate until it is destroyed, so the live total at the end of
// the pass is the peak.
MemoryRecord measure_memory(const Encoder& encoder, std::size_t n, std::size_t b);

// Median wall time of encode_batch over `trials` (>= 5) timed trials, per
// sentence. Warm-up runs untimed for min_trial_ms and picks how many
// batches each trial runs so a trial lasts at least that long too.
BenchRecord time_encode(const Encoder& encoder, std::size_t n, std::size_t b, std::size_t trials = 9,
                        double min_trial_ms = 10.0);

struct ScalingFit {
    double alpha = 0.0;  // slope of ln t on ln n
    double r2 = 0.0;
    std::size_t n_min = 0;
    std::size_t n_max = 0;
    std::size_t points = 0;
};

// Least squares on (ln n, ln t). Needs >= 5 distinct lengths spanning >= 8x;
// otherwise InputError.
ScalingFit fit_scaling(std::span<const double> n, std::span<const double> t);
// Records must share encoder kind and batch size.
ScalingFit fit_scaling(std::span<const BenchRecord> records);

struct BenchFit {
    EncoderKind kind = EncoderKind::dan;
    std::size_t b = 0;
    ScalingFit fit;
};

// Desk-scale sweep model: width 16, one transformer layer with 4 heads, so
// the n^2 attention terms dominate well inside n <= 512.
ModelConfig bench_model_config(EncoderKind kind);
// <unk>, <pad>, then w0..w{size-1}; no bigrams.
Vocabulary bench_vocab(std::size_t size = 200);

struct BenchOptions {
    std::vector<std::size_t> lengths = {16, 32, 64, 128, 256, 512};
    std::vector<std::size_t> batches = {1, 8, 32};
    std::size_t trials = 9;
};

// Full sweep, lengths inner. Runs strictly sequentially.
std::vector<BenchRecord> run_bench(const Encoder& encoder, const BenchOptions& opts);
// One fit per (kind, b) group that has enough lengths.
std::vector<BenchFit> fit_all(std::span<const BenchRecord> records);

// encoder,n,b,ms_per_sentence,peak_act_floats,param_floats then one
// "# fit ..." comment line per fit.
void write_bench_csv(const std::filesystem::path& path, std::span<const BenchRecord> records,
                     std::span<const BenchFit> fits);
std::string bench_csv(std::span<const BenchRecord> records, std::span<const BenchFit> fits);
// Data rows only; comment lines are skipped. Throws FormatError.
std::vector<BenchRecord> parse_bench_csv(std::string_view text);

}  // namespace senc
