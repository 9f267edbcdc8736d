#include "senc/weat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "senc/config.hpp"
#include "senc/errors.hpp"
#include "senc/parallel.hpp"
#include "senc/similarity.hpp"

namespace senc {

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double norm(const std::vector<float>& v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

}  // namespace

void WeatSpec::validate(const std::string& source) const {
    const std::pair<const char*, const std::vector<std::string>*> lists[] = {{"X", &X}, {"Y", &Y}, {"A", &A}, {"B", &B}};
    for (auto [key, list] : lists)
        if (list->empty()) throw FormatError(source + ": word list " + key + " is empty or missing");
    std::set<std::string> xs(X.begin(), X.end());
    for (const auto& y : Y)
        if (xs.count(y)) throw FormatError(source + ": '" + y + "' appears in both X and Y");
}

WeatSpec WeatSpec::parse(std::string_view text, const std::string& source) {
    KeyValues kv;
    try {
        kv = KeyValues::parse(text, source);
        kv.require_known({"name", "ref", "X", "Y", "A", "B"});
    } catch (const ConfigError& e) {
        throw FormatError(e.what());
    }
    WeatSpec spec;
    spec.name = kv.get_string("name", std::filesystem::path(source).stem().string());
    spec.ref = kv.get_string("ref", "");
    spec.X = kv.get_list("X", {});
    spec.Y = kv.get_list("Y", {});
    spec.A = kv.get_list("A", {});
    spec.B = kv.get_list("B", {});
    spec.validate(source);
    return spec;
}

WeatSpec WeatSpec::load(const std::filesystem::path& path) { return parse(read_text_file(path), path.string()); }

std::optional<std::vector<float>> WordVectorSource::lookup(const std::string& word) const {
    const float* v = table_.find(word);
    if (!v) v = table_.find(lower(word));
    if (!v) return std::nullopt;
    return std::vector<float>(v, v + table_.dim);
}

std::optional<std::vector<float>> EncoderSource::lookup(const std::string& word) const {
    auto seq = encoder_.prepare(lower(word));
    // a word made only of unknown tokens has no vector of its own
    if (std::ranges::all_of(seq.ids, [](TokenId id) { return id == kUnkId; })) return std::nullopt;
    return encoder_.encode(seq);
}

double association(const NamedVector& w, std::span<const NamedVector> A, std::span<const NamedVector> B) {
    if (A.empty() || B.empty()) throw InputError("association needs non-empty attribute sets");
    auto check = [](const NamedVector& n) {
        if (norm(n.v) == 0.0) throw InputError("zero-norm vector for word '" + n.word + "'");
    };
    check(w);
    double sa = 0.0, sb = 0.0;
    for (const auto& a : A) {
        check(a);
        sa += cosine(w.v, a.v);
    }
    for (const auto& b : B) {
        check(b);
        sb += cosine(w.v, b.v);
    }
    return sa / static_cast<double>(A.size()) - sb / static_cast<double>(B.size());
}

WeatScores weat_scores(const WeatSpec& spec, const WeatSource& source) {
    std::vector<std::string> missing;
    auto resolve = [&](const std::vector<std::string>& words) {
        std::vector<NamedVector> out;
        for (const auto& w : words) {
            auto v = source.lookup(w);
            if (!v) {
                missing.push_back(w);
                continue;
            }
            out.push_back({w, std::move(*v)});
        }
        return out;
    };
    auto X = resolve(spec.X), Y = resolve(spec.Y), A = resolve(spec.A), B = resolve(spec.B);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw InputError(spec.name + ": " + std::to_string(missing.size()) + " word(s) without a vector: " + list);
    }
    WeatScores scores;
    scores.nx = X.size();
    for (const auto& x : X) scores.s.push_back(association(x, A, B));
    for (const auto& y : Y) scores.s.push_back(association(y, A, B));
    return scores;
}

double effect_size(const WeatScores& scores, bool population_std) {
    const std::size_t n = scores.s.size(), nx = scores.nx, ny = n - nx;
    if (nx == 0 || ny == 0) throw InputError("effect size needs non-empty X and Y");
    double mx = 0.0, my = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) (i < nx ? mx : my) += scores.s[i];
    mx /= static_cast<double>(nx);
    my /= static_cast<double>(ny);
    // pooled moments in a canonical order (by magnitude, negatives first) so
    // swapping X/Y or A/B negates d bit-exactly
    std::vector<double> pooled = scores.s;
    std::ranges::sort(pooled, [](double a, double b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
    });
    for (double v : pooled) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : pooled) ss += (v - mean) * (v - mean);
    const double denom = population_std ? static_cast<double>(n) : static_cast<double>(n - 1);
    if (denom <= 0.0) throw EvaluationError("effect size needs at least 2 target words");
    const double sd = std::sqrt(ss / denom);
    if (!(sd > 0.0)) throw EvaluationError("degenerate WEAT input: association scores have zero spread");
    return (mx - my) / sd;
}

double effect_size(const WeatSpec& spec, const WeatSource& source, bool population_std) {
    return effect_size(weat_scores(spec, source), population_std);
}

bool weat_at_least(double t_prime, double t_observed) {
    return t_prime >= t_observed - 1e-12 * (1.0 + std::abs(t_observed));
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // r * (n - k + i) / i stays integral at every step
        const std::uint64_t num = n - k + i;
        const std::uint64_t g = std::gcd(r, i);
        const std::uint64_t rr = r / g, ii = i / g;
        const std::uint64_t nn = num / ii;  // ii divides num once r's share is removed
        if (rr > std::numeric_limits<std::uint64_t>::max() / nn) return std::numeric_limits<std::uint64_t>::max();
        r = rr * nn;
    }
    return r;
}

PValue p_value(const WeatScores& scores, const WeatOptions& opts) {
    const std::size_t n = scores.s.size(), k = scores.nx;
    if (n < 2) throw InputError("p-value needs at least 2 target words");
    if (k == 0 || k == n) throw InputError("p-value needs non-empty X and Y");
    const double total = std::accumulate(scores.s.begin(), scores.s.end(), 0.0);
    // T' = sum_X' s - sum_Y' s = 2 sum_X' s - total
    double sx = 0.0;
    for (std::size_t i = 0; i < k; ++i) sx += scores.s[i];
    const double t_obs = 2.0 * sx - total;

    PValue out;
    const std::uint64_t combos = binomial(n, k);
    if (combos <= opts.max_exact) {
        out.exact = true;
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            double s = 0.0;
            for (auto i : idx) s += scores.s[i];
            ++out.n;
            out.hits += weat_at_least(2.0 * s - total, t_obs);
            // next k-combination in lexicographic order
            std::size_t pos = k;
            while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
            if (pos == 0) break;
            ++idx[pos - 1];
            for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    } else {
        if (opts.samples == 0) throw ConfigError("Monte-Carlo p-value needs samples > 0");
        std::mt19937_64 rng(opts.seed);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::uint64_t t = 0; t < opts.samples; ++t) {
            // partial Fisher-Yates: the first k slots form X'
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(perm[i], perm[pick(rng)]);
                s += scores.s[perm[i]];
            }
            ++out.n;
            out.hits += weat_at_least(2.0 * s - total, t_obs);
        }
    }
    out.p = static_cast<double>(out.hits) / static_cast<double>(out.n);
    return out;
}

PValue p_value(const WeatSpec& spec, const WeatSource& source, const WeatOptions& opts) {
    return p_value(weat_scores(spec, source), opts);
}

WeatResult run_weat(const WeatSpec& spec, const WeatSource& source, const WeatOptions& opts) {
    auto scores = weat_scores(spec, source);
    WeatResult r;
    r.name = spec.name;
    r.d = effect_size(scores, opts.population_std);
    auto p = p_value(scores, opts);
    r.p = p.p;
    r.n = p.n;
    r.exact = p.exact;
    if (spec.X.size() != spec.Y.size())
        r.warning = spec.name + ": unequal target sizes (" + std::to_string(spec.X.size()) + " vs " +
                    std::to_string(spec.Y.size()) + ")";
    return r;
}

std::vector<std::filesystem::path> list_weat_specs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".weat") out.push_back(e.path());
    std::ranges::sort(out);
    return out;
}

std::vector<WeatSuiteRow> run_weat_suite(std::span<const std::filesystem::path> files, const WeatSource& source,
                                         const WeatOptions& opts, std::size_t threads) {
    std::vector<WeatSuiteRow> rows(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        rows[i].file = files[i].string();
        try {
            rows[i].result = run_weat(WeatSpec::load(files[i]), source, opts);
        } catch (const Error& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

void write_weat_tsv(std::ostream& out, std::span<const WeatSuiteRow> rows) {
    out << "name\td\tp\texact\tn\terror\n";
    for (const auto& r : rows) {
        if (r.result) {
            const auto& w = *r.result;
            out << w.name << '\t' << std::fixed << std::setprecision(6) << w.d << '\t' << std::scientific
                << std::setprecision(6) << w.p << '\t' << (w.exact ? "true" : "false") << '\t' << w.n << "\t\n";
        } else {
            out << std::filesystem::path(r.file).stem().string() << "\t\t\t\t\t" << r.error << '\n';
        }
    }
    out << std::defaultfloat;
}

}  // namespace senc
