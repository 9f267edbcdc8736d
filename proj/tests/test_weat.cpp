#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "senc/errors.hpp"
#include "senc/weat.hpp"

using namespace senc;
namespace fs = std::filesystem;

namespace {

// Vectors keyed by word, given explicitly.
class MapSource : public WeatSource {
public:
    std::map<std::string, std::vector<float>> m;
    std::optional<std::vector<float>> lookup(const std::string& w) const override {
        auto it = m.find(w);
        if (it == m.end()) return std::nullopt;
        return it->second;
    }
};

// Deterministic pseudo-random vector per word.
class HashSource : public WeatSource {
public:
    explicit HashSource(std::size_t dim, std::uint64_t salt = 0) : dim_(dim), salt_(salt) {}
    std::optional<std::vector<float>> lookup(const std::string& w) const override {
        std::mt19937_64 rng(std::hash<std::string>{}(w) ^ salt_);
        std::normal_distribution<float> n(0.0f, 1.0f);
        std::vector<float> v(dim_);
        for (auto& x : v) x = n(rng);
        return v;
    }

private:
    std::size_t dim_;
    std::uint64_t salt_;
};

// Independent oracle: every subset of size |X| as a bitmask, T' as a
// direct difference of sums.
std::uint64_t brute_force_hits(const std::vector<double>& s, std::size_t nx, std::uint64_t* total = nullptr) {
    const std::size_t n = s.size();
    double tx = 0, ty = 0;
    for (std::size_t i = 0; i < n; ++i) (i < nx ? tx : ty) += s[i];
    const double t = tx - ty;
    std::uint64_t hits = 0, count = 0;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != nx) continue;
        double a = 0, b = 0;
        for (std::size_t i = 0; i < n; ++i) (mask >> i & 1 ? a : b) += s[i];
        ++count;
        hits += weat_at_least(a - b, t);
    }
    if (total) *total = count;
    return hits;
}

WeatSpec random_spec(std::mt19937_64& rng, std::size_t nx, std::size_t ny, std::size_t na, std::size_t nb) {
    WeatSpec s;
    s.name = "random";
    int id = static_cast<int>(rng() % 100000) * 100;
    auto words = [&](std::size_t n, const char* p) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(p + std::to_string(id++));
        return out;
    };
    s.X = words(nx, "x");
    s.Y = words(ny, "y");
    s.A = words(na, "a");
    s.B = words(nb, "b");
    return s;
}

}  // namespace

TEST(Association, IdenticalGroupsGiveZero) {
    MapSource src;
    NamedVector w{"w", {0.3f, -1.0f, 2.0f}};
    std::vector<NamedVector> A{{"a1", {1, 0, 0}}, {"a2", {0.5f, 2, -1}}};
    EXPECT_EQ(association(w, A, A), 0.0);
}

TEST(Association, AlignedAndOrthogonal) {
    NamedVector w{"w", {1, 0}};
    std::vector<NamedVector> A{{"a1", {1, 0}}, {"a2", {2, 0}}}, B{{"b1", {0, 1}}, {"b2", {0, 3}}};
    EXPECT_NEAR(association(w, A, B), 1.0, 1e-12);
}

TEST(Association, HandComputedTwoByTwo) {
    NamedVector w{"w", {1, 1}};
    std::vector<NamedVector> A{{"a1", {1, 0}}, {"a2", {1, 2}}}, B{{"b1", {0, 1}}, {"b2", {-1, 1}}};
    // (1/sqrt2 + 3/sqrt10)/2 - (1/sqrt2 + 0)/2
    EXPECT_NEAR(association(w, A, B), 3.0 / (2.0 * std::sqrt(10.0)), 1e-9);
}

TEST(Association, ZeroNormNamesWord) {
    NamedVector w{"ghost", {0, 0}};
    std::vector<NamedVector> A{{"a", {1, 0}}}, B{{"b", {0, 1}}};
    try {
        association(w, A, B);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
    }
}

TEST(EffectSize, SymmetricTargetsGiveZero) {
    MapSource src;
    auto at = [](double deg) {
        const double r = deg * M_PI / 180;
        return std::vector<float>{static_cast<float>(std::cos(r)), static_cast<float>(std::sin(r))};
    };
    src.m = {{"x1", at(10)}, {"x2", at(80)}, {"y1", at(20)}, {"y2", at(70)}, {"a", {1, 0}}, {"b", {0, 1}}};
    WeatSpec spec{"sym", "", {"x1", "x2"}, {"y1", "y2"}, {"a"}, {"b"}};
    EXPECT_NEAR(effect_size(spec, src), 0.0, 1e-6);
}

TEST(EffectSize, HandComputedFourWords) {
    MapSource src;
    src.m = {{"x1", {1, 0}}, {"x2", {2, 1}}, {"y1", {0, 1}}, {"y2", {1, 2}}, {"a", {1, 0}}, {"b", {0, 1}}};
    WeatSpec spec{"hand", "", {"x1", "x2"}, {"y1", "y2"}, {"a"}, {"b"}};
    // s = 1, 1/sqrt5, -1, -1/sqrt5; pooled mean 0, population variance 0.6
    const double mx = (1 + 1 / std::sqrt(5.0)) / 2;
    EXPECT_NEAR(effect_size(spec, src), 2 * mx / std::sqrt(0.6), 1e-6);
    // sample std toggle: variance 0.8
    EXPECT_NEAR(effect_size(spec, src, false), 2 * mx / std::sqrt(0.8), 1e-6);
}

TEST(EffectSize, DegenerateAndMissing) {
    MapSource src;
    src.m = {{"x", {1, 0}}, {"y", {1, 0}}, {"a", {1, 0}}, {"b", {0, 1}}};
    WeatSpec same{"deg", "", {"x"}, {"y"}, {"a"}, {"b"}};
    EXPECT_THROW(effect_size(same, src), EvaluationError);
    WeatSpec missing{"miss", "", {"x", "zzz"}, {"y"}, {"a", "qqq"}, {"b"}};
    try {
        effect_size(missing, src);
        FAIL();
    } catch (const InputError& e) {
        const std::string m = e.what();
        EXPECT_NE(m.find("zzz"), std::string::npos);
        EXPECT_NE(m.find("qqq"), std::string::npos);
    }
}

TEST(PValue, FourWordsMatchBruteForce) {
    WeatScores s{{0.9, 0.2, 0.4, -0.3}, 2};
    auto p = p_value(s);
    std::uint64_t total = 0;
    EXPECT_TRUE(p.exact);
    EXPECT_EQ(p.n, 6u);
    EXPECT_EQ(p.hits, brute_force_hits(s.s, 2, &total));
    EXPECT_EQ(total, 6u);
    // T = 1.1 - 0.1 = 1.0; partitions reaching it: {0.9, 0.4} (T = 1.6) and the observed one
    EXPECT_EQ(p.hits, 2u);
    EXPECT_DOUBLE_EQ(p.p, 2.0 / 6.0);
}

TEST(PValue, MaximalSeparation) {
    WeatScores s{{5, 6, 7, 8, 1, 2, 3, 4}, 4};
    auto p = p_value(s);
    EXPECT_EQ(p.n, 70u);
    EXPECT_DOUBLE_EQ(p.p, 1.0 / 70.0);
}

TEST(PValue, SymmetricFixtureMonteCarloNearHalf) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    WeatScores s;
    for (int half = 0; half < 2; ++half)
        for (int i = 0; i < 10; ++i) {
            const double v = n(rng);
            s.s.push_back(v);
            s.s.push_back(-v);
        }
    s.nx = 20;
    WeatOptions o;
    o.max_exact = 1000;
    o.samples = 20000;
    o.seed = 3;
    auto p = p_value(s, o);
    EXPECT_FALSE(p.exact);
    EXPECT_EQ(p.n, 20000u);
    EXPECT_NEAR(p.p, 0.5, 0.02);
    auto again = p_value(s, o);
    EXPECT_EQ(again.hits, p.hits);
}

TEST(PValue, TooFewWords) {
    WeatScores s{{1.0}, 1};
    EXPECT_THROW(p_value(s), InputError);
}

TEST(Binomial, Values) {
    EXPECT_EQ(binomial(4, 2), 6u);
    EXPECT_EQ(binomial(16, 8), 12870u);
    EXPECT_EQ(binomial(50, 25), 126410606437752ULL);
    EXPECT_EQ(binomial(200, 100), UINT64_MAX);
    EXPECT_EQ(binomial(3, 5), 0u);
}

TEST(Weat, RandomFixturesMatchBruteForce) {
    std::mt19937_64 rng(21);
    HashSource src(6);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t nx = 1 + rng() % 7, ny = 1 + rng() % 7;
        if (binomial(nx + ny, nx) > 10000) continue;
        auto spec = random_spec(rng, nx, ny, 1 + rng() % 5, 1 + rng() % 5);
        auto scores = weat_scores(spec, src);
        auto p = p_value(scores);
        std::uint64_t total = 0;
        ASSERT_TRUE(p.exact);
        EXPECT_EQ(p.hits, brute_force_hits(scores.s, nx, &total)) << trial;
        EXPECT_EQ(p.n, total);
    }
}

TEST(Weat, Antisymmetry) {
    std::mt19937_64 rng(22);
    HashSource src(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto spec = random_spec(rng, 5, 5, 4, 4);
        auto swapped_xy = spec, swapped_ab = spec;
        std::swap(swapped_xy.X, swapped_xy.Y);
        std::swap(swapped_ab.A, swapped_ab.B);
        const auto r = run_weat(spec, src), rxy = run_weat(swapped_xy, src), rab = run_weat(swapped_ab, src);
        EXPECT_EQ(rxy.d, -r.d);
        EXPECT_EQ(rab.d, -r.d);
        // one-tailed complement: only the observed partition ties with itself
        const auto c = binomial(10, 5);
        const auto h = p_value(spec, src).hits;
        EXPECT_EQ(p_value(swapped_xy, src).hits, c - h + 1);
        EXPECT_EQ(p_value(swapped_ab, src).hits, c - h + 1);
    }
}

TEST(Weat, ScaleInvariance) {
    std::mt19937_64 rng(23);
    HashSource base(5);
    // powers of two scale float vectors exactly; other factors round the
    // stored floats at ~1e-7 relative
    for (float alpha : {0.25f, 1024.0f, 0.01f, 3.7f, 250.0f}) {
        auto spec = random_spec(rng, 6, 6, 5, 5);
        MapSource scaled;
        for (const auto* list : {&spec.X, &spec.Y, &spec.A, &spec.B})
            for (const auto& w : *list) {
                auto v = *base.lookup(w);
                for (auto& x : v) x *= alpha;
                scaled.m[w] = v;
            }
        const auto r = run_weat(spec, base), s = run_weat(spec, scaled);
        const bool exact = std::exp2(std::round(std::log2(alpha))) == alpha;
        if (exact) EXPECT_EQ(s.d, r.d) << alpha;
        EXPECT_NEAR(s.d, r.d, 1e-6) << alpha;
        EXPECT_EQ(s.p, r.p) << alpha;
    }
}

TEST(Weat, ShippedSpecsParse) {
    auto files = list_weat_specs(fs::path(SENC_DATA_DIR) / "weat");
    ASSERT_EQ(files.size(), 10u);
    HashSource src(8);
    for (const auto& f : files) {
        auto spec = WeatSpec::load(f);
        EXPECT_FALSE(spec.ref.empty()) << f;
        EXPECT_FALSE(spec.name.empty()) << f;
        if (binomial(spec.X.size() + spec.Y.size(), spec.X.size()) > 10000) continue;
        auto scores = weat_scores(spec, src);
        EXPECT_EQ(p_value(scores).hits, brute_force_hits(scores.s, spec.X.size())) << f;
    }
    auto flowers = WeatSpec::load(fs::path(SENC_DATA_DIR) / "weat" / "09_flowers_insects_pleasant.weat");
    EXPECT_EQ(flowers.X.size(), 25u);
    EXPECT_EQ(flowers.Y.size(), 25u);
    EXPECT_EQ(flowers.X.front(), "aster");
}

TEST(Weat, SpecFormatErrors) {
    EXPECT_THROW(WeatSpec::parse("X = a\nY = b\nA = c\n"), FormatError);
    EXPECT_THROW(WeatSpec::parse("X = a, b\nY = b\nA = c\nB = d\n"), FormatError);
    EXPECT_THROW(WeatSpec::parse("X = a\nY = b\nA = c\nB = d\nC = e\n"), FormatError);
    EXPECT_THROW(WeatSpec::parse("no equals sign here\n"), FormatError);
    auto s = WeatSpec::parse("# comment\nname = t\nX = a, b\nY = c, d\nA = e\nB = f\n");
    EXPECT_EQ(s.X, (std::vector<std::string>{"a", "b"}));
}

TEST(Weat, UnequalTargetsWarn) {
    MapSource src;
    src.m = {{"x1", {1, 0}}, {"x2", {2, 1}}, {"y1", {0, 1}}, {"a", {1, 0}}, {"b", {0, 1}}};
    auto r = run_weat(WeatSpec{"u", "", {"x1", "x2"}, {"y1"}, {"a"}, {"b"}}, src);
    EXPECT_FALSE(r.warning.empty());
    EXPECT_EQ(r.n, 3u);
}

TEST(Suite, AggregatesErrors) {
    auto dir = fs::temp_directory_path() / "senc_weat_suite";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "a_ok.weat") << "name = ok\nX = x1, x2\nY = y1, y2\nA = a\nB = b\n";
    std::ofstream(dir / "b_missing.weat") << "name = missing\nX = x1, nope\nY = y1, y2\nA = a\nB = b\n";
    std::ofstream(dir / "c_bad.weat") << "this is not a spec\n";
    std::ofstream(dir / "ignored.txt") << "x";
    MapSource src;
    src.m = {{"x1", {1, 0}}, {"x2", {2, 1}}, {"y1", {0, 1}}, {"y2", {1, 2}}, {"a", {1, 0}}, {"b", {0, 1}}};
    auto files = list_weat_specs(dir);
    ASSERT_EQ(files.size(), 3u);
    auto rows = run_weat_suite(files, src, {}, 2);
    ASSERT_EQ(rows.size(), 3u);
    ASSERT_TRUE(rows[0].result.has_value());
    EXPECT_FALSE(rows[1].result.has_value());
    EXPECT_NE(rows[1].error.find("nope"), std::string::npos);
    EXPECT_FALSE(rows[2].result.has_value());
    EXPECT_NE(rows[2].error.find("c_bad.weat"), std::string::npos);
    std::ostringstream out;
    write_weat_tsv(out, rows);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "name\td\tp\texact\tn\terror");
    fs::remove_all(dir);
}

TEST(Suite, SymmetricSpecRow) {
    MapSource src;
    src.m = {{"x1", {1, 0}}, {"x2", {0, 1}}, {"y1", {1, 0.01f}}, {"y2", {0.01f, 1}}, {"a", {1, 0}}, {"b", {0, 1}}};
    auto r = run_weat(WeatSpec{"sym", "", {"x1", "x2"}, {"y1", "y2"}, {"a"}, {"b"}}, src);
    EXPECT_NEAR(r.d, 0.0, 1e-6);
}

TEST(Suite, EncoderSourceMatchesWordVectors) {
    // DAN whose unigram table holds the vectors and whose layers are identity
    const std::vector<std::string> words{"rose", "tulip", "wasp", "moth", "love", "peace", "filth", "grief"};
    std::mt19937_64 rng(31);
    std::normal_distribution<float> n(0.0f, 1.0f);
    std::string text;
    for (const auto& w : words) {
        text += w;
        for (int j = 0; j < 8; ++j) text += " " + std::to_string(n(rng));
        text += "\n";
    }
    auto table = parse_word_vectors(text);
    std::vector<std::vector<std::string>> corpus{words};
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.dan.hidden_dims = {8};
    cfg.dan.activation = Activation::identity;
    auto enc = make_encoder(cfg, build_vocab(corpus, 1));
    for (auto& p : enc->params()) {
        if (p->name == "unigram_emb") {
            for (const auto& w : words) {
                const float* v = table.find(w);
                auto id = static_cast<std::size_t>(enc->vocab().id(w));
                for (std::size_t j = 0; j < 8; ++j) p->value.at(id, j) = v[j];
            }
        } else if (p->value.rows() == p->value.cols() && p->value.rows() == 8) {
            p->value.fill(0.0f);
            for (std::size_t i = 0; i < 8; ++i) p->value.at(i, i) = 1.0f;
        } else if (p->name != "bigram_emb") {
            p->value.fill(0.0f);
        }
    }
    ASSERT_EQ(enc->encode_text("rose"), std::vector<float>(table.find("rose"), table.find("rose") + 8));
    WeatSpec spec{"flowers", "a", {"rose", "tulip"}, {"wasp", "moth"}, {"love", "peace"}, {"filth", "grief"}};
    WordVectorSource wsrc(table);
    EncoderSource esrc(*enc);
    EXPECT_NEAR(run_weat(spec, esrc).d, run_weat(spec, wsrc).d, 1e-6);
}

// Optional published-vector check: set SENC_GLOVE to a GloVe text file.
TEST(Weat, PublishedGloveFlowersInsects) {
    const char* path = std::getenv("SENC_GLOVE");
    if (!path) GTEST_SKIP() << "SENC_GLOVE not set";
    auto table = load_word_vectors(path);
    WordVectorSource src(table);
    auto spec = WeatSpec::load(fs::path(SENC_DATA_DIR) / "weat" / "09_flowers_insects_pleasant.weat");
    auto r = run_weat(spec, src);
    EXPECT_NEAR(r.d, 1.50, 0.05);
    EXPECT_LE(r.p, 1e-6);
}
