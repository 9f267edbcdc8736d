#include "senc/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "senc/errors.hpp"

namespace senc {
namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
    if (u.size() != v.size()) {
        throw DimensionError("cosine: vectors of length " + std::to_string(u.size()) + " and " +
                             std::to_string(v.size()));
    }
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i], b = v[i];
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if (uu == 0.0 || vv == 0.0) throw InputError("cosine: zero-norm vector");
    return dot / (std::sqrt(uu) * std::sqrt(vv));
}

double angular_from_cos(double c) {
    // rounding may push |c| just past 1; anything larger is a bug
    if (std::fabs(c) > 1.0 + 1e-6) throw std::logic_error("cosine outside [-1, 1]: " + std::to_string(c));
    c = std::clamp(c, -1.0, 1.0);
    return 1.0 - std::acos(c) / std::numbers::pi;
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

double angular_sim(std::span<const float> u, std::span<const float> v) {
    return angular_from_cos(cosine_impl(u, v));
}
double angular_sim(std::span<const double> u, std::span<const double> v) {
    return angular_from_cos(cosine_impl(u, v));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw DimensionError("pearson: " + std::to_string(xs.size()) + " scores vs " + std::to_string(ys.size()) +
                             " gold values");
    }
    const std::size_t n = xs.size();
    if (n < 2) throw EvaluationError("pearson: need at least 2 points, got " + std::to_string(n));
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw EvaluationError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

StsResult sts_eval(const LabeledDataset& data, const Encoder& encoder) {
    if (data.schema != TaskSchema::pair_score) throw ConfigError("sts-eval needs a pair-score dataset");
    if (data.size() < 2) throw EvaluationError("sts-eval: need at least 2 pairs, got " + std::to_string(data.size()));
    std::vector<TokenSeq> a, b;
    std::vector<double> gold;
    for (const auto& ex : data.examples) {
        a.push_back(encoder.prepare(ex.text_a));
        b.push_back(encoder.prepare(ex.text_b));
        gold.push_back(ex.score);
    }
    const Tensor ea = encoder.encode_batch(a);
    const Tensor eb = encoder.encode_batch(b);
    StsResult res;
    res.n = data.size();
    for (std::size_t i = 0; i < res.n; ++i) {
        try {
            res.scores.push_back(angular_sim(ea.row_span(i), eb.row_span(i)));
        } catch (const InputError& e) {
            throw InputError("pair " + std::to_string(i) + ": " + e.what());
        }
    }
    res.r = pearson(res.scores, gold);
    return res;
}

}  // namespace senc
