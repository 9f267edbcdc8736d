#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "senc/data_io.hpp"
#include "senc/encoders.hpp"

using namespace senc;
namespace fs = std::filesystem;

namespace {

const fs::path kData(SENC_DATA_DIR);

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("senc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    Result run(const std::string& args, const std::string& stdin_text = "") const {
        const auto in = path("stdin.txt"), err = path("stderr.txt");
        std::ofstream(in, std::ios::binary) << stdin_text;
        const std::string cmd = quote(SENC_CLI) + " " + args + " <" + quote(in.string()) + " 2>" + quote(err.string());
        Result r;
        FILE* p = popen(cmd.c_str(), "r");
        char buf[4096];
        for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
        const int status = pclose(p);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.err = slurp(err);
        return r;
    }

    // Small DAN checkpoint; returns its path.
    fs::path train_dan(const std::string& name, std::uint64_t seed = 3) const {
        const auto out = path(name);
        auto r = run("--seed " + std::to_string(seed) + " train --encoder dan --dim 16 --cycles 10 --lr 0.005" +
                     " --set neighbor_data=" + (kData / "toy/neighbor.txt").string() +
                     " --set response_data=" + (kData / "toy/response.tsv").string() +
                     " --set nli_data=" + (kData / "toy/nli.tsv").string() + " --out " + out.string() +
                     " --log " + path(name + ".log").string());
        EXPECT_EQ(r.code, 0) << r.err;
        return out;
    }

    fs::path dir_;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
    return out;
}

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageExit2) {
    auto r = run("");
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_NE(r.err.find("transfer-eval"), std::string::npos);
}

TEST_F(Cli, VersionAndUnknownFlag) {
    auto v = run("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out, "senc 0.1.0\ncheckpoint format " + std::to_string(kCheckpointVersion) + "\n");
    EXPECT_EQ(run("--no-such-flag").code, 2);
    EXPECT_EQ(run("sim --bogus x y").code, 2);
}

TEST_F(Cli, TrainIsReproducible) {
    auto a = train_dan("a.ckpt"), b = train_dan("b.ckpt");
    ASSERT_TRUE(fs::exists(a));
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(path("a.ckpt.log")), slurp(path("b.ckpt.log")));
    EXPECT_EQ(slurp(path("a.ckpt.log")).rfind("step\ttask\tloss\n", 0), 0u);
    auto c = train_dan("c.ckpt", 4);
    EXPECT_NE(slurp(a), slurp(c));
}

TEST_F(Cli, TrainConfigFileAndFlagPrecedence) {
    const auto cfg = path("train.cfg");
    std::ofstream(cfg) << "encoder = transformer\nembed_dim = 8\nnum_heads = 2\ncycles = 2\n"
                       << "neighbor_data = " << (kData / "toy/neighbor.txt").string() << "\n"
                       << "response_data = " << (kData / "toy/response.tsv").string() << "\n"
                       << "nli_data = " << (kData / "toy/nli.tsv").string() << "\n";
    auto r = run("train --config " + cfg.string() + " --encoder dan --out " + path("m.ckpt").string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto info = read_checkpoint_info(path("m.ckpt"));
    EXPECT_EQ(info.config.kind, EncoderKind::dan);  // flag beats the file
    EXPECT_EQ(info.config.embed_dim, 8u);
    auto bad = run("train --config " + cfg.string() + " --set no_such_key=1 --out " + path("x.ckpt").string());
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("senc: error: config:"), std::string::npos);
    EXPECT_EQ(run("train --config " + cfg.string()).code, 2);  // no output path
}

TEST_F(Cli, EmbedRowsAndRoundTrip) {
    auto ckpt = train_dan("m.ckpt");
    auto r = run("embed --checkpoint " + ckpt.string(), "the cat sat\nthe cat sat\nhappy\n");
    ASSERT_EQ(r.code, 0) << r.err;
    auto lines = split(r.out, '\n');
    ASSERT_EQ(lines.size(), 3u);
    for (const auto& l : lines) EXPECT_EQ(split(l, '\t').size(), 17u);
    EXPECT_EQ(lines[0], lines[1]);
    EXPECT_EQ(split(lines[0], '\t')[0], "the cat sat");

    // single-word lines are a word-vector file
    auto enc = load_checkpoint(ckpt);
    const std::vector<std::string> words = {"happy", "journey", "coach", "dreadful"};
    std::string input;
    for (const auto& w : words) input += w + "\n";
    auto out = path("words.vec");
    ASSERT_EQ(run("--threads 3 embed --checkpoint " + ckpt.string() + " --out " + out.string(), input).code, 0);
    auto table = load_word_vectors(out);
    ASSERT_EQ(table.size(), words.size());
    EXPECT_EQ(table.dim, 16u);
    for (const auto& w : words) {
        auto expect = enc->encode_text(w);
        const float* got = table.find(w);
        ASSERT_NE(got, nullptr) << w;
        for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(got[j], expect[j]) << w << " " << j;  // %.9g is exact
    }
}

TEST_F(Cli, EmbedEdgeCases) {
    auto ckpt = train_dan("m.ckpt");
    auto empty = run("embed --checkpoint " + ckpt.string(), "");
    EXPECT_EQ(empty.code, 0);
    EXPECT_TRUE(empty.out.empty());
    auto missing = run("embed --checkpoint " + path("nope.ckpt").string(), "x\n");
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("nope.ckpt"), std::string::npos);
    std::ofstream(path("junk.ckpt")) << "not a checkpoint";
    auto junk = run("embed --checkpoint " + path("junk.ckpt").string(), "x\n");
    EXPECT_EQ(junk.code, 2);
    EXPECT_NE(junk.err.find("senc: error: checkpoint:"), std::string::npos);
    EXPECT_EQ(split(junk.err, '\n').size(), 1u);  // one-line error
    auto blank = run("embed --checkpoint " + ckpt.string(), "ok\n\n");
    EXPECT_EQ(blank.code, 0) << blank.err;  // tokenizes to <empty>
    auto rows = split(blank.out, '\n');
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(split(rows[1], '\t').size(), 17u);
    EXPECT_EQ(rows[1][0], '\t');
}

TEST_F(Cli, SimIdentityAndFormat) {
    auto ckpt = train_dan("m.ckpt");
    auto r = run("sim --checkpoint " + ckpt.string() + " 'a b' 'a b'");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "1.000000\n");
    auto s = run("sim --checkpoint " + ckpt.string() + " 'the coach was dull' 'the game was glorious'");
    EXPECT_EQ(s.code, 0);
    ASSERT_EQ(s.out.size(), 9u);  // d.dddddd\n
    EXPECT_EQ(s.out[1], '.');
}

TEST_F(Cli, StsEvalReport) {
    auto ckpt = train_dan("m.ckpt");
    auto r = run("sts-eval --checkpoint " + ckpt.string() + " --data " + (kData / "toy/sts.tsv").string() +
                 " --scores " + path("scores.tsv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto lines = split(r.out, '\n');
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "n\tr");
    EXPECT_EQ(split(lines[1], '\t')[0], "20");
    EXPECT_EQ(split(slurp(path("scores.tsv")), '\n').size(), 21u);
    std::ofstream(path("one.tsv")) << "a b\ta c\t2.5\n";
    auto one = run("sts-eval --checkpoint " + ckpt.string() + " --data " + path("one.tsv").string());
    EXPECT_EQ(one.code, 1);
    EXPECT_NE(one.err.find("senc: error: evaluation:"), std::string::npos);
}

TEST_F(Cli, TransferEvalDeterministicAcrossThreads) {
    auto ckpt = train_dan("m.ckpt");
    const std::string args = "transfer-eval --task " + (kData / "toy/sentiment.tsv").string() +
                             " --spec use_d+dnn --spec dnn:w2v --sizes 40,full --repeats 2 --use-d " + ckpt.string() +
                             " --word-vectors " + (kData / "word_vectors_50.txt").string();
    auto a = run("--seed 9 " + args), b = run("--seed 9 --threads 3 " + args), c = run("--seed 10 " + args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    EXPECT_EQ(a.out.rfind("task\tspec\tsize\trun\taccuracy\n", 0), 0u);
    EXPECT_NE(a.out.find("# summary\n"), std::string::npos);
    EXPECT_NE(a.out.find("sentiment\tdnn:w2v\t400\t1\t"), std::string::npos);
    auto missing = run("transfer-eval --task " + (kData / "toy/sentiment.tsv").string() + " --spec use_t+dnn");
    EXPECT_EQ(missing.code, 2);
    auto badspec = run("transfer-eval --task " + (kData / "toy/sentiment.tsv").string() + " --spec cnn");
    EXPECT_EQ(badspec.code, 2);
}

TEST_F(Cli, WeatSuiteWithMalformedSpec) {
    fs::create_directories(path("suite"));
    for (const auto& e : fs::directory_iterator(kData / "weat"))
        if (e.path().filename().string().rfind("09_", 0) == 0) fs::copy(e.path(), path("suite") / e.path().filename());
    // words with vectors in the shipped 50-word table
    std::ofstream(path("suite/00_toy.weat")) << "name = toy\nX = glorious, splendid\nY = dreadful, painful\n"
                                             << "A = charming, superb\nB = bland, dull\n";
    std::ofstream(path("suite/50_broken.weat")) << "name = broken\nX = a\n";
    const std::string args = "weat --suite " + path("suite").string() + " --word-vectors " +
                             (kData / "word_vectors_50.txt").string();
    auto a = run(args), b = run(args);
    EXPECT_EQ(a.code, 1);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.err.find("50_broken.weat"), std::string::npos);
    auto lines = split(a.out, '\n');
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "name\td\tp\texact\tn\terror");
    EXPECT_EQ(lines[1].rfind("toy\t", 0), 0u);
    EXPECT_EQ(split(lines[1], '\t')[3], "true");
    EXPECT_NE(lines[3].find("empty or missing"), std::string::npos);
    auto single = run("weat --spec " + path("suite/00_toy.weat").string() + " --word-vectors " +
                      (kData / "word_vectors_50.txt").string());
    EXPECT_EQ(single.code, 0) << single.err;
    EXPECT_EQ(run("weat --word-vectors " + (kData / "word_vectors_50.txt").string()).code, 2);
}

TEST_F(Cli, BenchCsv) {
    auto r = run("bench --encoder dan --lengths 8,16,32,64,128 --batches 1 --trials 5 --out " + path("b.csv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    auto lines = split(slurp(path("b.csv")), '\n');
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0], "encoder,n,b,ms_per_sentence,peak_act_floats,param_floats");
    EXPECT_EQ(lines[6].rfind("# fit encoder=dan b=1 alpha=", 0), 0u);
    // memory columns are deterministic
    EXPECT_EQ(split(lines[1], ',')[4], split(lines[5], ',')[4]);
    EXPECT_EQ(run("bench --trials 4").code, 2);
    EXPECT_EQ(run("bench --lengths 16,x").code, 2);
}
