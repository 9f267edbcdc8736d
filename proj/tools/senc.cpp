// senc: command-line front end for the sentence encoder toolkit.
//
// Exit codes: 0 success, 1 domain failure (training divergence, degenerate
// statistics, bad input data), 2 usage, config, IO or format problems.
// stdout carries results only; diagnostics go to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <typeinfo>
#include <vector>

#include "senc/bench.hpp"
#include "senc/config.hpp"
#include "senc/data_io.hpp"
#include "senc/encoders.hpp"
#include "senc/errors.hpp"
#include "senc/parallel.hpp"
#include "senc/similarity.hpp"
#include "senc/trainer.hpp"
#include "senc/transfer.hpp"
#include "senc/version.hpp"
#include "senc/weat.hpp"

namespace fs = std::filesystem;
using namespace senc;

namespace {

struct Global {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::size_t threads = 1;
    int verbose = 0;
};

// Exit code 1 for anything that carries this; thrown by commands that
// finished but have failures to report (e.g. some WEAT specs failed).
struct PartialFailure {};

void note(const Global& g, const std::string& msg) {
    if (g.verbose > 0) std::cerr << "senc: " << msg << '\n';
}

// Writes to the named file, or stdout for "" / "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) throw IoError("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    void close(const std::string& path) {
        stream().flush();
        if (!stream()) throw IoError("write failed: " + (path.empty() ? std::string("<stdout>") : path));
    }

private:
    std::ofstream file_;
};

std::vector<std::string> input_lines(const std::string& path) {
    if (!path.empty() && path != "-") return read_lines(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(std::cin, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item == "full") {
            out.push_back(kFullSize);
            continue;
        }
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError("bad size '" + item + "' (positive integer or 'full')");
        }
    }
    if (out.empty()) throw ConfigError("empty size list");
    return out;
}

std::string format_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

// ---- train

struct TrainArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string encoder, out, log, tasks;
    std::optional<long> cycles, dim;
    std::optional<double> lr;
};

int cmd_train(const Global& g, const TrainArgs& a) {
    KeyValues kv;
    fs::path base;
    if (!a.config.empty()) {
        kv = KeyValues::load(a.config);
        base = fs::path(a.config).parent_path();
    }
    // flags win over the config file
    for (const auto& s : a.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!a.encoder.empty()) kv.set("encoder", a.encoder);
    if (!a.tasks.empty()) kv.set("tasks", a.tasks);
    if (a.cycles) kv.set("cycles", std::to_string(*a.cycles));
    if (a.dim) kv.set("embed_dim", std::to_string(*a.dim));
    if (a.lr) kv.set("lr", format_float(static_cast<float>(*a.lr)));
    if (g.seed_given) kv.set("seed", std::to_string(g.seed));
    TrainConfig cfg = TrainConfig::from_key_values(kv, base);
    if (!a.out.empty()) cfg.out = a.out;
    if (!a.log.empty()) cfg.log = a.log;
    if (cfg.out.empty()) throw ConfigError("train needs an output checkpoint (--out or out = ... in the config)");
    note(g, "training " + std::string(encoder_kind_name(cfg.model.kind)) + " for " + std::to_string(cfg.cycles) +
                " cycles");
    auto enc = train_multitask(cfg);
    note(g, "wrote " + cfg.out.string());
    return 0;
}

// ---- embed

int cmd_embed(const Global& g, const std::string& ckpt, const std::string& input, const std::string& out_path) {
    auto enc = load_checkpoint(ckpt);
    const auto lines = input_lines(input);
    std::vector<TokenSeq> seqs;
    seqs.reserve(lines.size());
    for (const auto& line : lines) seqs.push_back(enc->prepare(line));  // blank lines become <empty>
    // batch results are bit-equal to single encodings, so chunking and
    // threads do not change the output
    constexpr std::size_t chunk = 64;
    const std::size_t chunks = (seqs.size() + chunk - 1) / chunk;
    std::vector<Tensor> parts(chunks);
    parallel_for(chunks, g.threads, [&](std::size_t c) {
        const std::size_t lo = c * chunk, hi = std::min(seqs.size(), lo + chunk);
        parts[c] = enc->encode_batch(std::span<const TokenSeq>(seqs.data() + lo, hi - lo));
    });
    Output out(out_path);
    auto& os = out.stream();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto row = parts[i / chunk].row_span(i % chunk);
        os << lines[i];
        for (float v : row) os << '\t' << format_float(v);
        os << '\n';
    }
    out.close(out_path);
    note(g, "embedded " + std::to_string(lines.size()) + " lines");
    return 0;
}

// ---- sim

int cmd_sim(const std::string& ckpt, const std::string& a, const std::string& b) {
    auto enc = load_checkpoint(ckpt);
    auto ta = enc->prepare(a), tb = enc->prepare(b);
    if (ta.length() == 0 || tb.length() == 0) throw InputError("sim needs two non-empty sentences");
    const double s = angular_sim(enc->encode(ta), enc->encode(tb));
    std::printf("%.6f\n", s);
    return 0;
}

// ---- sts-eval

int cmd_sts(const Global& g, const std::string& ckpt, const std::string& data, const std::string& scores_path) {
    auto enc = load_checkpoint(ckpt);
    auto ds = read_task_tsv(data, TaskSchema::pair_score);
    auto res = sts_eval(ds, *enc);
    std::printf("n\tr\n%zu\t%.6f\n", res.n, res.r);
    if (!scores_path.empty()) {
        Output out(scores_path);
        auto& os = out.stream();
        char buf[64];
        os << "pair\tsim\tgold\n";
        for (std::size_t i = 0; i < res.n; ++i) {
            std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\n", i, res.scores[i], ds.examples[i].score);
            os << buf;
        }
        out.close(scores_path);
    }
    note(g, "pearson r over " + std::to_string(res.n) + " pairs");
    return 0;
}

// ---- transfer-eval

struct TransferArgs {
    std::string task, schema = "single", dev, test, use_d, use_t, word_vectors, out, name;
    std::vector<std::string> specs;
    std::string sizes = "full";
    std::size_t repeats = 10;
};

int cmd_transfer(const Global& g, const TransferArgs& a) {
    const TaskSchema schema = parse_schema(a.schema);
    std::vector<TransferModelSpec> specs;
    for (const auto& s : a.specs) specs.push_back(TransferModelSpec::parse(s));
    const auto sizes = parse_sizes(a.sizes);
    if (a.dev.empty() != a.test.empty()) throw ConfigError("--dev and --test go together");

    std::unique_ptr<Encoder> use_d, use_t;
    std::optional<WordVecTable> wv;
    if (!a.use_d.empty()) use_d = load_checkpoint(a.use_d);
    if (!a.use_t.empty()) use_t = load_checkpoint(a.use_t);
    if (!a.word_vectors.empty()) wv = load_word_vectors(a.word_vectors);
    TransferResources res{use_d.get(), use_t.get(), wv ? &*wv : nullptr};

    auto data = read_task_tsv(a.task, schema);
    TransferSplits splits = a.dev.empty() ? split_dataset(data, g.seed)
                                          : TransferSplits{data, read_task_tsv(a.dev, schema), read_task_tsv(a.test, schema)};
    CurveOptions opts;
    opts.sizes = sizes;
    opts.repeats = a.repeats;
    opts.seed = g.seed;
    opts.threads = g.threads;
    opts.task_name = a.name.empty() ? fs::path(a.task).stem().string() : a.name;

    std::vector<EvalReport> reports;
    for (const auto& spec : specs) {
        note(g, "running " + spec.to_string());
        auto r = run_learning_curve(splits, spec, res, opts);
        reports.insert(reports.end(), r.begin(), r.end());
    }
    Output out(a.out);
    write_report_tsv(out.stream(), reports);
    out.close(a.out);
    return 0;
}

// ---- weat

struct WeatArgs {
    std::string suite, checkpoint, word_vectors, out;
    std::vector<std::string> specs;
    std::uint64_t max_exact = 100000;
    std::uint64_t samples = 100000;
    bool sample_std = false;
};

int cmd_weat(const Global& g, const WeatArgs& a) {
    if (a.suite.empty() == a.specs.empty()) throw ConfigError("weat needs exactly one of --suite or --spec");
    if (a.checkpoint.empty() == a.word_vectors.empty())
        throw ConfigError("weat needs exactly one of --checkpoint or --word-vectors");
    std::vector<fs::path> files;
    if (!a.suite.empty()) {
        files = list_weat_specs(a.suite);
        if (files.empty()) throw IoError("no .weat files in " + a.suite);
    } else {
        files.assign(a.specs.begin(), a.specs.end());
    }
    std::unique_ptr<Encoder> enc;
    std::optional<WordVecTable> wv;
    std::unique_ptr<WeatSource> source;
    if (!a.checkpoint.empty()) {
        enc = load_checkpoint(a.checkpoint);
        source = std::make_unique<EncoderSource>(*enc);
    } else {
        wv = load_word_vectors(a.word_vectors);
        source = std::make_unique<WordVectorSource>(*wv);
    }
    WeatOptions opts;
    opts.max_exact = a.max_exact;
    opts.samples = a.samples;
    opts.seed = g.seed;
    opts.population_std = !a.sample_std;
    auto rows = run_weat_suite(files, *source, opts, g.threads);
    Output out(a.out);
    write_weat_tsv(out.stream(), rows);
    out.close(a.out);
    bool failed = false;
    for (const auto& r : rows) {
        if (!r.result) {
            // load errors already name the file
            const bool named = r.error.find(r.file) != std::string::npos;
            std::cerr << "senc: error: " << (named ? "" : r.file + ": ") << r.error << '\n';
            failed = true;
        } else if (!r.result->warning.empty()) {
            std::cerr << "senc: warning: " << r.result->warning << '\n';
        }
    }
    if (failed) throw PartialFailure{};
    return 0;
}

// ---- bench

struct BenchArgs {
    std::string encoder = "both", checkpoint, out, lengths = "16,32,64,128,256,512", batches = "1,8,32";
    std::size_t trials = 9;
};

int cmd_bench(const Global& g, const BenchArgs& a) {
    BenchOptions opts;
    opts.lengths = parse_sizes(a.lengths);
    opts.batches = parse_sizes(a.batches);
    for (auto v : opts.lengths)
        if (v == kFullSize) throw ConfigError("--lengths takes positive integers");
    for (auto v : opts.batches)
        if (v == kFullSize) throw ConfigError("--batches takes positive integers");
    opts.trials = a.trials;
    if (opts.trials < 5) throw ConfigError("--trials must be at least 5");

    std::vector<std::unique_ptr<Encoder>> encoders;
    if (!a.checkpoint.empty()) {
        encoders.push_back(load_checkpoint(a.checkpoint));
        if (a.encoder != "both" && parse_encoder_kind(a.encoder) != encoders.back()->kind())
            throw ConfigError("checkpoint holds a " + std::string(encoder_kind_name(encoders.back()->kind())) +
                              " encoder, not " + a.encoder);
    } else {
        std::vector<EncoderKind> kinds;
        if (a.encoder == "both") kinds = {EncoderKind::dan, EncoderKind::transformer};
        else kinds = {parse_encoder_kind(a.encoder)};
        for (auto k : kinds) {
            auto cfg = bench_model_config(k);
            cfg.init_seed = g.seed;
            encoders.push_back(make_encoder(cfg, bench_vocab()));
        }
    }
    std::vector<BenchRecord> records;
    for (const auto& enc : encoders) {
        note(g, "timing " + std::string(encoder_kind_name(enc->kind())));
        auto r = run_bench(*enc, opts);
        records.insert(records.end(), r.begin(), r.end());
    }
    auto fits = fit_all(records);
    Output out(a.out);
    out.stream() << bench_csv(records, fits);
    out.close(a.out);
    return 0;
}

const char* error_kind(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    if (dynamic_cast<const CheckpointError*>(&e)) return "checkpoint";
    if (dynamic_cast<const TrainingError*>(&e)) return "training";
    if (dynamic_cast<const EvaluationError*>(&e)) return "evaluation";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
    if (dynamic_cast<const InputError*>(&e)) return "input";
    return "error";
}

int exit_code(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IoError*>(&e) ||
        dynamic_cast<const FormatError*>(&e) || dynamic_cast<const CheckpointError*>(&e))
        return 2;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"senc: sentence encoders, similarity, transfer and bias evaluation"};
    app.name("senc");
    app.require_subcommand(0, 1);
    app.allow_extras(false);

    Global g;
    bool version = false;
    app.add_flag("--version", version, "Print toolkit and checkpoint format versions");
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed (default 1)");
    app.add_option("--threads", g.threads, "Worker threads where results are thread-independent (default 1)")
        ->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train an encoder on the multitask objective");
    train->add_option("--config", ta.config, "key = value config file")->check(CLI::ExistingFile);
    train->add_option("--set", ta.sets, "Override one config key (key=value); repeatable");
    train->add_option("--encoder", ta.encoder, "dan or transformer");
    train->add_option("--tasks", ta.tasks, "Comma list of neighbor, response, nli");
    train->add_option("--dim", ta.dim, "Embedding width");
    train->add_option("--cycles", ta.cycles, "Round-robin cycles");
    train->add_option("--lr", ta.lr, "Adam learning rate");
    train->add_option("--out", ta.out, "Output checkpoint");
    train->add_option("--log", ta.log, "Progress log (step, task, loss)");

    std::string ckpt, input, out_path;
    auto* embed = app.add_subcommand("embed", "Embed one sentence per input line");
    embed->add_option("--checkpoint", ckpt, "Encoder checkpoint")->required()->check(CLI::ExistingFile);
    embed->add_option("--input", input, "Text file, one sentence per line (default stdin)");
    embed->add_option("--out", out_path, "Output file (default stdout)");

    std::string sa, sb;
    auto* sim = app.add_subcommand("sim", "Angular similarity of two sentences");
    sim->add_option("--checkpoint", ckpt, "Encoder checkpoint")->required()->check(CLI::ExistingFile);
    sim->add_option("a", sa, "First sentence")->required();
    sim->add_option("b", sb, "Second sentence")->required();

    std::string sts_data, sts_scores;
    auto* sts = app.add_subcommand("sts-eval", "Pearson r of angular similarity against gold pair scores");
    sts->add_option("--checkpoint", ckpt, "Encoder checkpoint")->required()->check(CLI::ExistingFile);
    sts->add_option("--data", sts_data, "TSV: sentence_a, sentence_b, score")->required()->check(CLI::ExistingFile);
    sts->add_option("--scores", sts_scores, "Also write per-pair scores here");

    TransferArgs tr;
    auto* transfer = app.add_subcommand("transfer-eval", "Learning curves of classifiers on frozen features");
    transfer->add_option("--task", tr.task, "Labeled TSV")->required()->check(CLI::ExistingFile);
    transfer->add_option("--schema", tr.schema, "single, pair-class or pair-score (default single)");
    transfer->add_option("--spec", tr.specs, "Model spec such as use_t+dnn or dnn:lrn; repeatable")->required();
    transfer->add_option("--sizes", tr.sizes, "Comma list of train sizes or 'full' (default full)");
    transfer->add_option("--repeats", tr.repeats, "Seeded runs per size (default 10)")->check(CLI::PositiveNumber);
    transfer->add_option("--dev", tr.dev, "Dev TSV (with --test; otherwise an 80/10/10 split)")
        ->check(CLI::ExistingFile);
    transfer->add_option("--test", tr.test, "Test TSV")->check(CLI::ExistingFile);
    transfer->add_option("--use-d", tr.use_d, "DAN checkpoint for use_d specs")->check(CLI::ExistingFile);
    transfer->add_option("--use-t", tr.use_t, "Transformer checkpoint for use_t specs")->check(CLI::ExistingFile);
    transfer->add_option("--word-vectors", tr.word_vectors, "word2vec text file for :w2v specs")
        ->check(CLI::ExistingFile);
    transfer->add_option("--name", tr.name, "Task name in the report (default file stem)");
    transfer->add_option("--out", tr.out, "Report TSV (default stdout)");

    WeatArgs wa;
    auto* weat = app.add_subcommand("weat", "Word embedding association tests");
    weat->add_option("--suite", wa.suite, "Directory of .weat specs")->check(CLI::ExistingDirectory);
    weat->add_option("--spec", wa.specs, "Single .weat spec; repeatable")->check(CLI::ExistingFile);
    weat->add_option("--checkpoint", wa.checkpoint, "Embed words with this encoder")->check(CLI::ExistingFile);
    weat->add_option("--word-vectors", wa.word_vectors, "word2vec text file")->check(CLI::ExistingFile);
    weat->add_option("--max-exact", wa.max_exact, "Enumerate partitions up to this many (default 100000)");
    weat->add_option("--samples", wa.samples, "Monte-Carlo partitions otherwise (default 100000)");
    weat->add_flag("--sample-std", wa.sample_std, "Use the n-1 standard deviation in d");
    weat->add_option("--out", wa.out, "Result TSV (default stdout)");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Time and memory scaling with sentence length");
    bench->add_option("--encoder", ba.encoder, "dan, transformer or both (default both)");
    bench->add_option("--checkpoint", ba.checkpoint, "Benchmark this encoder instead of the built-in sweep models")
        ->check(CLI::ExistingFile);
    bench->add_option("--lengths", ba.lengths, "Comma list (default 16,32,64,128,256,512)");
    bench->add_option("--batches", ba.batches, "Comma list (default 1,8,32)");
    bench->add_option("--trials", ba.trials, "Timed trials per point, at least 5 (default 9)");
    bench->add_option("--out", ba.out, "CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    g.seed_given = seed_opt->count() > 0;

    if (version) {
        std::cout << "senc " << kToolkitVersion << "\ncheckpoint format " << kCheckpointVersion << '\n';
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }

    try {
        if (*train) return cmd_train(g, ta);
        if (*embed) return cmd_embed(g, ckpt, input, out_path);
        if (*sim) return cmd_sim(ckpt, sa, sb);
        if (*sts) return cmd_sts(g, ckpt, sts_data, sts_scores);
        if (*transfer) return cmd_transfer(g, tr);
        if (*weat) return cmd_weat(g, wa);
        if (*bench) return cmd_bench(g, ba);
    } catch (const PartialFailure&) {
        return 1;
    } catch (const Error& e) {
        std::cerr << "senc: error: " << error_kind(e) << ": " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "senc: error: internal: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
