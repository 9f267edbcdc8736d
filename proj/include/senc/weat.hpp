#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "senc/data_io.hpp"
#include "senc/encoders.hpp"

namespace senc {

// One test: targets X, Y and attributes A, B. File format is key = value
// lines (name, ref, X, Y, A, B) with comma-separated word lists; '#' starts
// a comment.
struct WeatSpec {
    std::string name;
    std::string ref;
    std::vector<std::string> X, Y, A, B;

    // Throws FormatError on an empty list or a word in both X and Y.
    void validate(const std::string& source = "<memory>") const;
    static WeatSpec parse(std::string_view text, const std::string& source = "<memory>");
    static WeatSpec load(const std::filesystem::path& path);
};

// Word -> vector; nullopt for an unknown word.
class WeatSource {
public:
    virtual ~WeatSource() = default;
    virtual std::optional<std::vector<float>> lookup(const std::string& word) const = 0;
};

// Exact match first, then the lowercased word.
class WordVectorSource final : public WeatSource {
public:
    explicit WordVectorSource(const WordVecTable& table) : table_(table) {}
    std::optional<std::vector<float>> lookup(const std::string& word) const override;

private:
    const WordVecTable& table_;
};

// Embeds each word as a one-word sentence (lowercased). Words whose tokens
// are all out of vocabulary count as missing.
class EncoderSource final : public WeatSource {
public:
    explicit EncoderSource(const Encoder& encoder) : encoder_(encoder) {}
    std::optional<std::vector<float>> lookup(const std::string& word) const override;

private:
    const Encoder& encoder_;
};

struct NamedVector {
    std::string word;
    std::vector<float> v;
};

// s(w, A, B) = mean cos(w, a) - mean cos(w, b). Zero-norm vectors throw
// InputError naming the word.
double association(const NamedVector& w, std::span<const NamedVector> A, std::span<const NamedVector> B);

struct WeatOptions {
    std::uint64_t max_exact = 100000;  // enumerate when C(|X u Y|, |X|) <= this
    std::uint64_t samples = 100000;    // Monte-Carlo draws otherwise
    std::uint64_t seed = 1;
    bool population_std = true;
};

struct WeatResult {
    std::string name;
    double d = 0.0;
    double p = 0.0;
    std::uint64_t n = 0;  // partitions evaluated
    bool exact = false;
    std::string warning;  // e.g. unequal target sizes
};

// Association scores of X then Y, after resolving all words. Missing words
// throw InputError listing every one of them.
struct WeatScores {
    std::vector<double> s;  // |X| + |Y| entries, X first
    std::size_t nx = 0;
};
WeatScores weat_scores(const WeatSpec& spec, const WeatSource& source);

// Pooled-std normalized effect size; zero spread throws EvaluationError.
double effect_size(const WeatScores& scores, bool population_std = true);
double effect_size(const WeatSpec& spec, const WeatSource& source, bool population_std = true);

struct PValue {
    double p = 0.0;
    std::uint64_t n = 0;
    std::uint64_t hits = 0;  // partitions with T' >= T
    bool exact = false;
};

// One-tailed permutation p-value of T = sum_X s - sum_Y s over equal-size
// repartitions of X u Y.
PValue p_value(const WeatScores& scores, const WeatOptions& opts = {});
PValue p_value(const WeatSpec& spec, const WeatSource& source, const WeatOptions& opts = {});

// Tie tolerance shared by every comparison T' >= T.
bool weat_at_least(double t_prime, double t_observed);

// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

WeatResult run_weat(const WeatSpec& spec, const WeatSource& source, const WeatOptions& opts = {});

struct WeatSuiteRow {
    std::string file;
    std::optional<WeatResult> result;
    std::string error;  // set when result is empty
};

// Every *.weat file in the directory, sorted by name.
std::vector<std::filesystem::path> list_weat_specs(const std::filesystem::path& dir);

// Failures (unreadable spec, missing words, degenerate stats) become error
// rows; the remaining specs still run.
std::vector<WeatSuiteRow> run_weat_suite(std::span<const std::filesystem::path> files, const WeatSource& source,
                                         const WeatOptions& opts = {}, std::size_t threads = 1);

// name, d, p, exact, n; error rows carry the message in an error column.
void write_weat_tsv(std::ostream& out, std::span<const WeatSuiteRow> rows);

}  // namespace senc
