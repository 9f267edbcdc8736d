#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "senc/errors.hpp"
#include "senc/ops.hpp"
#include "senc/trainer.hpp"

using namespace senc;
namespace fs = std::filesystem;

namespace {

const fs::path kToy = fs::path(SENC_DATA_DIR) / "toy";

Tensor from_rows(std::vector<std::vector<float>> rows) {
    Tensor t({rows.size(), rows[0].size()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) t.at(i, j) = rows[i][j];
    return t;
}

double ranking(const Tensor& u, const Tensor& v) {
    Tape tape(false);
    return in_batch_ranking_loss(tape.constant(u), tape.constant(v)).value()[0];
}

TrainConfig toy_config(EncoderKind kind, std::vector<TaskKind> tasks, std::uint64_t seed = 1) {
    TrainConfig c;
    c.model.kind = kind;
    c.model.embed_dim = 32;
    c.model.dan.hidden_dims = {32};
    c.model.transformer.num_layers = 1;
    c.model.transformer.num_heads = 2;
    c.model.transformer.ffn_dim = 32;
    c.model.init_seed = seed;
    c.heads.seed = seed + 1;
    c.tasks = std::move(tasks);
    c.neighbor_data = kToy / "neighbor.txt";
    c.response_data = kToy / "response.tsv";
    c.nli_data = kToy / "nli.tsv";
    c.seed = seed;
    c.lr = 5e-3f;
    return c;
}

}  // namespace

TEST(RankingLoss, SeparableIsNearZero) {
    Tensor u({4, 4});
    for (std::size_t i = 0; i < 4; ++i) u.at(i, i) = 10.0f;
    EXPECT_LT(ranking(u, u), 1e-6);
}

TEST(RankingLoss, AllEqualScoresIsLogB) {
    Tensor u({5, 3}, 0.2f);
    EXPECT_NEAR(ranking(u, u), std::log(5.0), 1e-6);
}

TEST(RankingLoss, HandComputedTwoByTwo) {
    // S = [[1, 0], [0.5, 2]] -> mean of lse(row) - diag
    auto u = from_rows({{1, 0}, {0, 2}});
    auto v = from_rows({{1, 0}, {0.25f, 1}});
    const double l0 = std::log(std::exp(1.0) + std::exp(0.25)) - 1.0;
    const double l1 = std::log(std::exp(0.0) + std::exp(2.0)) - 2.0;
    EXPECT_NEAR(ranking(u, v), 0.5 * (l0 + l1), 1e-6);
}

TEST(RankingLoss, BatchOfOneRejected) {
    Tensor u({1, 3}, 1.0f);
    EXPECT_THROW(ranking(u, u), ConfigError);
}

TEST(RankingLoss, RecallAtOne) {
    auto u = from_rows({{1, 0}, {0, 1}, {1, 1}});
    auto v = from_rows({{1, 0}, {1, 0}, {1, 1}});
    // row 1 scores (0, 0, 1): diagonal loses
    EXPECT_NEAR(recall_at_1(u, v), 2.0 / 3.0, 1e-12);
}

class UntrainedChance : public ::testing::TestWithParam<EncoderKind> {};

TEST_P(UntrainedChance, LossNearLogB) {
    const double chance = std::log(8.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto cfg = toy_config(GetParam(), {TaskKind::neighbor, TaskKind::response}, seed);
        MultitaskTrainer tr(cfg, load_train_data(cfg));
        for (TaskKind t : cfg.tasks) {
            const double l = tr.probe_loss(t);
            EXPECT_NEAR(l, chance, 0.2 * chance) << task_name(t) << " seed " << seed;
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Kinds, UntrainedChance, ::testing::Values(EncoderKind::dan, EncoderKind::transformer));

TEST(Heads, IdentityProjectionMatchesNeighborLoss) {
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::neighbor});
    auto data = load_train_data(cfg);
    MultitaskTrainer tr(cfg, data);
    RankingBatch b;
    for (std::size_t i = 0; i < 6; ++i) {
        b.left.push_back(tr.encoder().prepare(data.neighbor[i].first));
        b.right.push_back(tr.encoder().prepare(data.neighbor[i].second));
    }
    Tape tape(false);
    const double n = tr.heads().neighbor_loss(tape, tr.encoder(), b).value()[0];
    const double r = tr.heads().response_loss(tape, tr.encoder(), b).value()[0];
    EXPECT_NEAR(n, r, 1e-6);
}

TEST(Heads, NliFeaturesForIdenticalInputs) {
    Tape tape(false);
    auto u = tape.constant(from_rows({{0.5f, -2.0f, 3.0f}}));
    auto f = TaskHeads::nli_features(u, u).value();
    ASSERT_EQ(f.cols(), 12u);
    const float ux[3] = {0.5f, -2.0f, 3.0f};
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_EQ(f.at(0, j), ux[j]);
        EXPECT_EQ(f.at(0, 3 + j), ux[j]);
        EXPECT_EQ(f.at(0, 6 + j), 0.0f);
        EXPECT_FLOAT_EQ(f.at(0, 9 + j), ux[j] * ux[j]);
    }
}

TEST(Heads, NliRejectsBadLabel) {
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::nli});
    MultitaskTrainer tr(cfg, load_train_data(cfg));
    NliBatch b;
    b.premise.push_back(tr.encoder().prepare("the game was good"));
    b.hypothesis.push_back(tr.encoder().prepare("the game was bad"));
    b.labels.push_back(3);
    Tape tape(false);
    EXPECT_THROW(tr.heads().nli_loss(tape, tr.encoder(), b), InputError);
}

TEST(Trainer, OverfitsSixtyFourPairs) {
    // 64 pairs of random three-word sentences over a 200-word vocabulary
    std::mt19937_64 rng(11);
    TrainData data;
    auto word = [&] { return "w" + std::to_string(rng() % 200); };
    for (int i = 0; i < 64; ++i) {
        std::string a = word() + " " + word() + " " + word();
        std::string b = word() + " " + word() + " " + word();
        data.neighbor.emplace_back(a, b);
    }
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::neighbor});
    cfg.min_count = 1;
    cfg.lr = 1e-2f;
    cfg.batch_size = 16;
    MultitaskTrainer tr(cfg, data);
    for (int s = 0; s < 200; ++s) tr.step(TaskKind::neighbor);

    std::vector<TokenSeq> left, right;
    for (const auto& [a, b] : data.neighbor) {
        left.push_back(tr.encoder().prepare(a));
        right.push_back(tr.encoder().prepare(b));
    }
    const double r = recall_at_1(tr.encoder().encode_batch(left), tr.encoder().encode_batch(right));
    EXPECT_GT(r, 0.9);
}

TEST(Trainer, NliFixtureReachesHighTrainingAccuracy) {
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::nli});
    auto data = load_train_data(cfg);
    data.nli.resize(60);
    cfg.batch_size = 16;
    cfg.lr = 1e-2f;
    MultitaskTrainer tr(cfg, data);
    for (int s = 0; s < 300; ++s) tr.step(TaskKind::nli);

    NliBatch b;
    for (const auto& ex : data.nli) {
        b.premise.push_back(tr.encoder().prepare(ex.premise));
        b.hypothesis.push_back(tr.encoder().prepare(ex.hypothesis));
        b.labels.push_back(ex.label);
    }
    Tape tape(false);
    auto logits = tr.heads().nli_logits(tape, tr.encoder(), b).value();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row_span(i);
        const auto best = std::max_element(r.begin(), r.end()) - r.begin();
        correct += best == b.labels[i];
    }
    EXPECT_GT(static_cast<double>(correct) / 60.0, 0.95);
}

TEST(Trainer, RoundRobinIsFair) {
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::neighbor, TaskKind::response, TaskKind::nli});
    MultitaskTrainer tr(cfg, load_train_data(cfg));
    for (int c = 0; c < 7; ++c) {
        auto l = tr.run_cycle();
        EXPECT_EQ(l.size(), 3u);
    }
    EXPECT_EQ(tr.cycles_done(), 7u);
    for (TaskKind t : cfg.tasks) EXPECT_EQ(tr.losses(t).size(), 7u);
}

TEST(Trainer, OnlySeenTokensReceiveUpdates) {
    TrainData data;
    data.neighbor = {{"red apple", "green pear"}, {"blue sky", "grey cloud"}, {"red sky", "blue pear"}};
    data.vocab_text = {"red apple green pear blue sky grey cloud", "zebra quokka"};
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::neighbor});
    cfg.min_count = 1;
    MultitaskTrainer tr(cfg, data);
    const auto& emb = tr.encoder().params().get("unigram_emb").value;
    const Tensor before = emb;
    for (int s = 0; s < 5; ++s) tr.step(TaskKind::neighbor);
    auto changed = [&](const std::string& w) {
        const auto id = static_cast<std::size_t>(tr.encoder().vocab().id(w));
        for (std::size_t j = 0; j < emb.cols(); ++j)
            if (emb.at(id, j) != before.at(id, j)) return true;
        return false;
    };
    EXPECT_FALSE(changed("zebra"));
    EXPECT_FALSE(changed("quokka"));
    EXPECT_TRUE(changed("red"));
    EXPECT_TRUE(changed("cloud"));
}

TEST(Trainer, NanNamesTaskAndStep) {
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::neighbor, TaskKind::response});
    MultitaskTrainer tr(cfg, load_train_data(cfg));
    tr.run_cycle();
    tr.run_cycle();
    tr.heads().params().get("response/proj").value.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
    tr.step(TaskKind::neighbor);
    try {
        tr.step(TaskKind::response);
        FAIL();
    } catch (const TrainingError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("task response"), std::string::npos) << msg;
        EXPECT_NE(msg.find("step 3"), std::string::npos) << msg;
    }
}

TEST(Trainer, BatchSizeOneRejected) {
    KeyValues kv;
    kv.set("tasks", "neighbor");
    kv.set("batch_size", "1");
    EXPECT_THROW(TrainConfig::from_key_values(kv), ConfigError);
}

TEST(Trainer, ReproducibleCheckpoints) {
    auto dir = fs::temp_directory_path() / "senc_train_repro";
    fs::create_directories(dir);
    auto run = [&](std::uint64_t seed, const std::string& name) {
        auto cfg = toy_config(EncoderKind::transformer, {TaskKind::neighbor, TaskKind::response, TaskKind::nli}, seed);
        cfg.cycles = 6;
        cfg.out = dir / name;
        cfg.log = dir / (name + ".log");
        train_multitask(cfg);
        std::ifstream in(cfg.out, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    const auto a = run(4, "a.ckpt");
    const auto b = run(4, "b.ckpt");
    const auto c = run(5, "c.ckpt");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    std::ifstream log(dir / "a.ckpt.log");
    std::string header;
    std::getline(log, header);
    EXPECT_EQ(header, "step\ttask\tloss");
    std::size_t lines = 0;
    for (std::string l; std::getline(log, l);) ++lines;
    EXPECT_EQ(lines, 18u);
    fs::remove_all(dir);
}

TEST(Trainer, TrainingReducesLoss) {
    auto cfg = toy_config(EncoderKind::dan, {TaskKind::neighbor, TaskKind::response, TaskKind::nli});
    MultitaskTrainer tr(cfg, load_train_data(cfg));
    std::vector<double> start;
    for (TaskKind t : cfg.tasks) start.push_back(tr.probe_loss(t));
    for (int c = 0; c < 300; ++c) tr.run_cycle();
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const auto& l = tr.losses(cfg.tasks[i]);
        double tail = 0;
        for (std::size_t k = l.size() - 10; k < l.size(); ++k) tail += l[k];
        const double chance = std::log(cfg.tasks[i] == TaskKind::nli ? 3.0 : 8.0);
        EXPECT_LT(tail / 10, 0.8 * chance) << task_name(cfg.tasks[i]);
        EXPECT_LT(tail / 10, start[i]) << task_name(cfg.tasks[i]);
    }
}
