#include <cmath>
#include <random>

#include "senc/errors.hpp"
#include "senc/ops.hpp"
#include "senc/trainer.hpp"

namespace senc {

Var in_batch_ranking_loss(Var u, Var v) {
    if (u.shape() != v.shape()) {
        throw DimensionError("ranking loss: " + shape_str(u.shape()) + " vs " + shape_str(v.shape()));
    }
    const std::size_t b = u.rows();
    if (b < 2) throw ConfigError("ranking loss needs a batch of at least 2 pairs (in-batch negatives), got " +
                                 std::to_string(b));
    std::vector<int> targets(b);
    for (std::size_t i = 0; i < b; ++i) targets[i] = static_cast<int>(i);
    return cross_entropy(matmul_transposed(u, v), targets);
}

double recall_at_1(const Tensor& u, const Tensor& v) {
    const std::size_t b = u.rows(), d = u.cols();
    if (b == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t best = 0;
        double best_score = -INFINITY;
        for (std::size_t j = 0; j < b; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += static_cast<double>(u.at(i, k)) * v.at(j, k);
            if (s > best_score) {
                best_score = s;
                best = j;
            }
        }
        hits += best == i;
    }
    return static_cast<double>(hits) / static_cast<double>(b);
}

TaskHeads::TaskHeads(std::size_t embed_dim, HeadConfig config) : dim_(embed_dim), config_(config) {
    std::mt19937_64 rng(config_.seed);
    auto uniform = [&](std::size_t r, std::size_t c) {
        std::uniform_real_distribution<float> dist(-1.0f / std::sqrt(static_cast<float>(r)),
                                                   1.0f / std::sqrt(static_cast<float>(r)));
        Tensor t = Tensor::matrix(r, c);
        for (auto& x : t.storage()) x = dist(rng);
        return t;
    };
    if (config_.response_projection) {
        Tensor eye = Tensor::matrix(dim_, dim_);
        for (std::size_t i = 0; i < dim_; ++i) eye.at(i, i) = 1.0f;
        params_.add("response/proj", std::move(eye));
    }
    const std::size_t h = config_.nli_hidden ? config_.nli_hidden : dim_;
    params_.add("nli/w1", uniform(4 * dim_, h));
    params_.add("nli/b1", Tensor::matrix(1, h));
    params_.add("nli/w2", uniform(h, 3));
    params_.add("nli/b2", Tensor::matrix(1, 3));
}

Var TaskHeads::neighbor_loss(Tape& tape, const Encoder& enc, const RankingBatch& batch) const {
    return in_batch_ranking_loss(enc.forward(tape, batch.left), enc.forward(tape, batch.right));
}

Var TaskHeads::response_project(Tape& tape, Var v) const {
    if (!config_.response_projection) return v;
    return matmul(v, tape.param(params_.get("response/proj")));
}

Var TaskHeads::response_loss(Tape& tape, const Encoder& enc, const RankingBatch& batch) const {
    return in_batch_ranking_loss(enc.forward(tape, batch.left),
                                 response_project(tape, enc.forward(tape, batch.right)));
}

Var TaskHeads::nli_features(Var u, Var v) {
    return concat_cols(std::vector<Var>{u, v, abs(sub(u, v)), mul(u, v)});
}

Var TaskHeads::nli_logits(Tape& tape, const Encoder& enc, const NliBatch& batch) const {
    Var f = nli_features(enc.forward(tape, batch.premise), enc.forward(tape, batch.hypothesis));
    Var h = tanh(add_bias(matmul(f, tape.param(params_.get("nli/w1"))), tape.param(params_.get("nli/b1"))));
    return add_bias(matmul(h, tape.param(params_.get("nli/w2"))), tape.param(params_.get("nli/b2")));
}

Var TaskHeads::nli_loss(Tape& tape, const Encoder& enc, const NliBatch& batch) const {
    for (int y : batch.labels)
        if (y < 0 || y > 2) throw InputError("nli label " + std::to_string(y) + " outside [0, 3)");
    return cross_entropy(nli_logits(tape, enc, batch), batch.labels);
}

}  // namespace senc
