#pragma once

#include <span>
#include <vector>

#include "senc/data_io.hpp"
#include "senc/encoders.hpp"

namespace senc {

// Cosine similarity, accumulated in double. Zero-norm input throws
// InputError; length mismatch throws DimensionError.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

// 1 - arccos(cos(u, v)) / pi, with the cosine clamped to [-1, 1].
double angular_sim(std::span<const float> u, std::span<const float> v);
double angular_sim(std::span<const double> u, std::span<const double> v);

// Sample Pearson correlation. Fewer than two points or a constant series
// throws EvaluationError.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct StsResult {
    std::vector<double> scores;
    double r = 0.0;
    std::size_t n = 0;
};

// Angular similarity of every (text_a, text_b) pair against the gold scores.
StsResult sts_eval(const LabeledDataset& data, const Encoder& encoder);

}  // namespace senc
