#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "senc/errors.hpp"
#include "senc/ops.hpp"
#include "senc/optim.hpp"

using namespace senc;
using senc::testing::gradcheck;
using senc::testing::op_catalog;

namespace {

Tensor run_unary(Tensor in, Var (*op)(Var)) {
    Tape tape(false);
    return op(tape.constant(std::move(in))).value();
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), DimensionError);
    Tensor t({2, 3}, std::vector<float>(6, 1.0f));
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_EQ(shape_str(t.shape()), "[2x3]");
}

TEST(Tensor, RequireFiniteThrows) {
    Tensor t = Tensor::from_rows({{1.0f, NAN}});
    EXPECT_THROW(require_finite(t, "probe"), NumericError);
}

TEST(Ops, MatmulIdentity) {
    Tape tape(false);
    auto a = tape.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
    auto b = tape.constant(Tensor::from_rows({{3, 4}, {5, 6}}));
    EXPECT_EQ(matmul(a, b).value(), Tensor::from_rows({{3, 4}, {5, 6}}));
}

TEST(Ops, MatmulRowByColumn) {
    Tape tape(false);
    auto a = tape.constant(Tensor::from_rows({{1, 2}}));
    auto b = tape.constant(Tensor::from_rows({{3}, {4}}));
    EXPECT_EQ(matmul(a, b).value(), Tensor::from_rows({{11}}));
}

TEST(Ops, MatmulShapeErrorNamesBothShapes) {
    Tape tape(false);
    auto a = tape.constant(Tensor::matrix(2, 3));
    auto b = tape.constant(Tensor::matrix(4, 5));
    try {
        matmul(a, b);
        FAIL();
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos);
        EXPECT_NE(msg.find("[4x5]"), std::string::npos);
    }
}

TEST(Ops, ElementwiseShapeMismatch) {
    Tape tape(false);
    auto a = tape.constant(Tensor::matrix(2, 3));
    auto b = tape.constant(Tensor::matrix(3, 2));
    EXPECT_THROW(add(a, b), DimensionError);
    EXPECT_THROW(sub(a, b), DimensionError);
    EXPECT_THROW(mul(a, b), DimensionError);
}

TEST(Ops, MatmulGradientRandom4x5x3) {
    std::mt19937_64 rng(7);
    senc::testing::GradCase<double> c{"matmul",
                                      {senc::testing::random_tensor<double>(4, 5, rng),
                                       senc::testing::random_tensor<double>(5, 3, rng)},
                                      [](std::vector<BasicVar<double>>& in) { return matmul(in[0], in[1]); }};
    EXPECT_LT(gradcheck(c, 7).max_rel_err, 1e-3);
}

TEST(Ops, TanhAndRelu) {
    EXPECT_EQ(run_unary(Tensor::from_rows({{0}}), &senc::tanh<float>)[0], 0.0f);
    auto r = run_unary(Tensor::from_rows({{-2.5f, 3.0f}}), &senc::relu<float>);
    EXPECT_EQ(r[0], 0.0f);
    EXPECT_EQ(r[1], 3.0f);
}

TEST(Ops, TanhDerivativeAtPointThree) {
    BasicParameterStore<double> store;
    auto& x = store.add("x", TensorD::from_rows({{0.3}}));
    BasicTape<double> tape;
    tape.backward(sum_all(senc::tanh(tape.param(x))));
    const double h = 1e-4;
    const double fd = (std::tanh(0.3 + h) - std::tanh(0.3 - h)) / (2 * h);
    EXPECT_NEAR(x.grad[0], fd, 1e-5);
}

TEST(Ops, TanhDerivativeFloatPath) {
    ParameterStore store;
    auto& x = store.add("x", Tensor::from_rows({{0.3f}}));
    Tape tape;
    tape.backward(sum_all(senc::tanh(tape.param(x))));
    const double h = 1e-4;
    const double fd = (std::tanh(0.3 + h) - std::tanh(0.3 - h)) / (2 * h);
    EXPECT_NEAR(x.grad[0], fd, 1e-5);
}

TEST(Ops, SoftmaxSymmetricRow) {
    auto s = run_unary(Tensor::from_rows({{0, 0, 0}}), &softmax_rows<float>);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[i], 1.0 / 3.0, 1e-7);
}

TEST(Ops, SoftmaxNoOverflow) {
    auto s = run_unary(Tensor::from_rows({{1000, 0}}), &softmax_rows<float>);
    EXPECT_NEAR(s[0], 1.0, 1e-12);
    EXPECT_NEAR(s[1], 0.0, 1e-12);
}

TEST(Ops, SoftmaxRowsNormalized) {
    std::mt19937_64 rng(3);
    BasicTape<double> tape(false);
    auto s = softmax_rows(tape.constant(senc::testing::random_tensor<double>(3, 4, rng, -5, 5))).value();
    for (std::size_t r = 0; r < 3; ++r) {
        double sum = 0;
        for (double v : s.row_span(r)) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    Tape ftape(false);
    auto fs = softmax_rows(ftape.constant(senc::testing::random_tensor<float>(3, 4, rng, -5, 5))).value();
    for (std::size_t r = 0; r < 3; ++r) {
        double sum = 0;
        for (float v : fs.row_span(r)) sum += v;
        EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}

TEST(Ops, CrossEntropyUniform) {
    Tape tape(false);
    std::vector<int> y{2};
    auto loss = cross_entropy(tape.constant(Tensor::matrix(1, 4, 0.5f)), y);
    EXPECT_NEAR(loss.value()[0], std::log(4.0), 1e-6);
}

TEST(Ops, CrossEntropyPeaked) {
    Tape tape(false);
    std::vector<int> y{1, 0};
    auto loss = cross_entropy(tape.constant(Tensor::from_rows({{0, 60, 0}, {60, 0, 0}})), y);
    EXPECT_LT(loss.value()[0], 1e-20);
}

TEST(Ops, CrossEntropyLabelRange) {
    Tape tape(false);
    std::vector<int> y{3};
    EXPECT_THROW(cross_entropy(tape.constant(Tensor::matrix(1, 3)), y), InputError);
    std::vector<int> neg{-1};
    EXPECT_THROW(cross_entropy(tape.constant(Tensor::matrix(1, 3)), neg), InputError);
}

TEST(Ops, CrossEntropyGradient2x3) {
    std::mt19937_64 rng(11);
    std::vector<int> labels{2, 0};
    senc::testing::GradCase<double> c{
        "cross_entropy",
        {senc::testing::random_tensor<double>(2, 3, rng, -2, 2)},
        [labels](std::vector<BasicVar<double>>& in) { return cross_entropy(in[0], labels); }};
    EXPECT_LT(gradcheck(c, 11).max_rel_err, 1e-3);

    // (softmax - onehot) / m, computed by hand
    BasicParameterStore<double> store;
    auto& p = store.add("logits", c.inputs[0]);
    BasicTape<double> tape;
    tape.backward(cross_entropy(tape.param(p), labels));
    for (std::size_t r = 0; r < 2; ++r) {
        double z = 0;
        for (std::size_t j = 0; j < 3; ++j) z += std::exp(p.value.at(r, j));
        for (std::size_t j = 0; j < 3; ++j) {
            double expect = std::exp(p.value.at(r, j)) / z - (static_cast<int>(j) == labels[r] ? 1.0 : 0.0);
            EXPECT_NEAR(p.grad.at(r, j), expect / 2.0, 1e-12);
        }
    }
}

TEST(Ops, GatherFirstRow) {
    Tape tape(false);
    auto t = tape.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
    std::vector<TokenId> ids{0};
    EXPECT_EQ(gather_rows(t, ids).value(), Tensor::from_rows({{1, 2}}));
    std::vector<TokenId> bad{2};
    EXPECT_THROW(gather_rows(t, bad), InputError);
}

TEST(Ops, GatherDuplicateIdsAccumulate) {
    ParameterStore store;
    auto& table = store.add("table", Tensor::matrix(3, 2, 1.0f));
    Tape tape;
    std::vector<TokenId> ids{2, 2};
    auto g = gather_rows(tape.param(table), ids);
    auto w = tape.constant(Tensor::from_rows({{1, 2}, {10, 20}}));
    tape.backward(sum_all(mul(g, w)));
    EXPECT_EQ(table.grad, Tensor::from_rows({{0, 0}, {0, 0}, {11, 22}}));
}

TEST(Ops, FanOutAccumulates) {
    ParameterStore store;
    auto& x = store.add("x", Tensor::from_rows({{2.0f}}));
    Tape tape;
    auto v = tape.param(x);
    tape.backward(sum_all(add(mul(v, v), scale(v, 3.0f))));  // d/dx (x^2 + 3x) = 2x + 3
    EXPECT_FLOAT_EQ(x.grad[0], 7.0f);
}

TEST(Ops, LayerNormConstantRow) {
    Tape tape(false);
    auto out = layer_norm(tape.constant(Tensor::matrix(1, 4, 3.5f)), tape.constant(Tensor::matrix(1, 4, 1.0f)),
                          tape.constant(Tensor::matrix(1, 4, 0.0f)));
    for (float v : out.value().values()) EXPECT_EQ(v, 0.0f);
}

TEST(Ops, LayerNormMomentsRandom) {
    std::mt19937_64 rng(5);
    BasicTape<double> tape(false);
    auto x = senc::testing::random_tensor<double>(6, 16, rng, -10, 10);
    auto out = layer_norm(tape.constant(x), tape.constant(TensorD::matrix(1, 16, 1.0)),
                          tape.constant(TensorD::matrix(1, 16, 0.0)))
                   .value();
    for (std::size_t r = 0; r < 6; ++r) {
        double mean = 0, var = 0, in_mean = 0, in_var = 0;
        for (std::size_t j = 0; j < 16; ++j) {
            mean += out.at(r, j) / 16;
            in_mean += x.at(r, j) / 16;
        }
        for (std::size_t j = 0; j < 16; ++j) {
            var += (out.at(r, j) - mean) * (out.at(r, j) - mean) / 16;
            in_var += (x.at(r, j) - in_mean) * (x.at(r, j) - in_mean) / 16;
        }
        EXPECT_NEAR(mean, 0.0, 1e-6);
        EXPECT_NEAR(var, 1.0, 1e-6);
        EXPECT_NEAR(var, in_var / (in_var + 1e-5), 1e-12);
    }
}

TEST(Ops, LayerNormGradient2x4) {
    std::mt19937_64 rng(13);
    senc::testing::GradCase<double> c{
        "layer_norm",
        {senc::testing::random_tensor<double>(2, 4, rng, -2, 2),
         senc::testing::random_tensor<double>(1, 4, rng, 0.5, 1.5), senc::testing::random_tensor<double>(1, 4, rng)},
        [](std::vector<BasicVar<double>>& in) { return layer_norm(in[0], in[1], in[2]); }};
    EXPECT_LT(gradcheck(c, 13).max_rel_err, 1e-3);
}

TEST(Ops, FusedAttentionEqualsUnfusedChain) {
    std::mt19937_64 rng(21);
    const std::vector<std::size_t> lens = {3, 1, 5};
    const std::size_t heads = 2, d = 6, dk = 3;
    ParameterStore store;
    auto& qp = store.add("q", senc::testing::random_tensor<float>(9, d, rng, -2, 2));
    auto& kp = store.add("k", senc::testing::random_tensor<float>(9, d, rng, -2, 2));
    auto& vp = store.add("v", senc::testing::random_tensor<float>(9, d, rng));
    auto grads = [&](bool fused, Tensor& out) {
        store.zero_grad();
        Tape tape;
        Var q = tape.param(qp), k = tape.param(kp), v = tape.param(vp);
        Var y;
        if (fused) {
            y = multi_head_attention(q, k, v, std::span<const std::size_t>(lens), heads);
        } else {
            std::vector<Var> rows;
            for (std::size_t s = 0, r0 = 0; s < lens.size(); r0 += lens[s], ++s) {
                std::vector<Var> hs;
                for (std::size_t h = 0; h < heads; ++h) {
                    Var w = softmax_rows(matmul_transposed(slice(q, r0, lens[s], h * dk, dk), slice(k, r0, lens[s], h * dk, dk)));
                    hs.push_back(matmul(w, slice(v, r0, lens[s], h * dk, dk)));
                }
                rows.push_back(concat_cols(hs));
            }
            y = concat_rows(rows);
        }
        out = y.value();
        tape.backward(sum_all(mul(y, y)));
        return std::vector<Tensor>{qp.grad, kp.grad, vp.grad};
    };
    Tensor fo, uo;
    auto fg = grads(true, fo), ug = grads(false, uo);
    EXPECT_EQ(fo, uo);  // same summation order, so bit-equal
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < fg[i].size(); ++j) EXPECT_NEAR(fg[i][j], ug[i][j], 1e-5) << i << "," << j;
}

TEST(Ops, FusedAttentionCountsAndErrors) {
    Tape tape(false);
    auto x = tape.constant(Tensor::matrix(7, 4, 0.5f));
    const std::vector<std::size_t> lens = {3, 4};
    multi_head_attention(x, x, x, std::span<const std::size_t>(lens), 2);
    EXPECT_EQ(tape.multiply_adds(), 2u * (9 + 16) * 4);
    EXPECT_EQ(tape.activation_floats(), 7u * 4 + 2 * (9 + 16));  // output plus kept weights
    const std::vector<std::size_t> short_lens = {3, 3};
    EXPECT_THROW(multi_head_attention(x, x, x, std::span<const std::size_t>(short_lens), 2), DimensionError);
    EXPECT_THROW(multi_head_attention(x, x, x, std::span<const std::size_t>(lens), 3), DimensionError);
}

TEST(Ops, NonFiniteOutputIsError) {
    Tape tape(false);
    auto a = tape.constant(Tensor::from_rows({{3e38f}}));
    EXPECT_THROW(scale(a, 10.0f), NumericError);
}

class GradCheck : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GradCheck, EveryOpMatchesFiniteDifferences) {
    for (const auto& c : op_catalog<double>(GetParam())) {
        auto rep = gradcheck(c, GetParam());
        EXPECT_LT(rep.max_rel_err, 1e-3) << c.op << " seed " << GetParam();
        EXPECT_GT(rep.checked, 0u) << c.op;
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradCheck, ::testing::Range<std::uint64_t>(0, 100));

// The float path runs the same op code; rounding alone limits agreement.
TEST(GradCheckFloat, OpsAgreeLoosely) {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (const auto& c : op_catalog<float>(seed))
            EXPECT_LT(gradcheck(c, seed, 1e-3, 0.1).max_rel_err, 5e-2) << c.op << " seed " << seed;
}

TEST(Optim, SgdStep) {
    ParameterStore store;
    auto& p = store.add("w", Tensor::from_rows({{1.0f}}));
    p.grad[0] = 2.0f;
    Sgd(0.1f).step(store);
    EXPECT_FLOAT_EQ(p.value[0], 0.8f);
}

TEST(Optim, AdamFirstStepIsLr) {
    for (float g : {1e-3f, 0.5f, 40.0f, -7.0f}) {
        ParameterStore store;
        auto& p = store.add("w", Tensor::from_rows({{1.0f}}));
        p.grad[0] = g;
        Adam adam(AdamOptions{0.01f});
        adam.step(store);
        EXPECT_NEAR(std::fabs(p.value[0] - 1.0f), 0.01f, 1e-5) << g;
    }
}

TEST(Optim, NonTrainableUntouched) {
    ParameterStore store;
    auto& p = store.add("frozen", Tensor::from_rows({{1.0f}}), false);
    p.grad[0] = 5.0f;
    Sgd(0.1f).step(store);
    Adam().step(store);
    EXPECT_EQ(p.value[0], 1.0f);
}

TEST(Optim, NanGradientNamesParameter) {
    ParameterStore store;
    store.add("ok", Tensor::from_rows({{1.0f}}));
    auto& bad = store.add("layer0/w", Tensor::from_rows({{1.0f}}));
    bad.grad[0] = NAN;
    try {
        Adam().step(store);
        FAIL();
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("layer0/w"), std::string::npos);
    }
    EXPECT_THROW(Sgd(0.1f).step(store), TrainingError);
}

TEST(Optim, SgdConvergesOnQuadratic) {
    ParameterStore store;
    auto& x = store.add("x", Tensor::from_rows({{0.0f}}));
    Sgd sgd(0.1f);
    for (int i = 0; i < 50; ++i) {
        store.zero_grad();
        Tape tape;
        auto d = add_bias(tape.param(x), tape.constant(Tensor::from_rows({{-3.0f}})));
        tape.backward(sum_all(mul(d, d)));
        sgd.step(store);
    }
    EXPECT_LT(std::fabs(x.value[0] - 3.0f), 1e-3);
}

TEST(Ops, Deterministic) {
    auto run = [] {
        std::mt19937_64 rng(99);
        ParameterStore store;
        auto& w = store.add("w", senc::testing::random_tensor<float>(8, 8, rng));
        auto& e = store.add("e", senc::testing::random_tensor<float>(10, 8, rng));
        Tape tape;
        std::vector<TokenId> ids{1, 4, 4, 9};
        auto h = senc::tanh(matmul(gather_rows(tape.param(e), ids), tape.param(w)));
        auto s = softmax_rows(matmul_transposed(h, h));
        tape.backward(sum_all(mul(s, s)));
        return std::make_tuple(s.value(), w.grad, e.grad);
    };
    EXPECT_EQ(run(), run());
}

TEST(Tape, BackwardNeedsScalar) {
    Tape tape;
    auto a = tape.constant(Tensor::matrix(2, 2));
    EXPECT_THROW(tape.backward(a), DimensionError);
}

TEST(Tape, MultiplyAddCount) {
    Tape tape(false);
    matmul(tape.constant(Tensor::matrix(4, 5)), tape.constant(Tensor::matrix(5, 3)));
    EXPECT_EQ(tape.multiply_adds(), 60u);
    EXPECT_EQ(tape.activation_floats(), 12u);
}
