#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "senc/config.hpp"
#include "senc/encoders.hpp"
#include "senc/optim.hpp"

namespace senc {

enum class TaskKind { neighbor, response, nli };

TaskKind parse_task_kind(std::string_view name);
std::string_view task_name(TaskKind kind);

struct RankingBatch {
    std::vector<TokenSeq> left;   // sentence / conversational input
    std::vector<TokenSeq> right;  // next sentence / response
};

struct NliBatch {
    std::vector<TokenSeq> premise;
    std::vector<TokenSeq> hypothesis;
    std::vector<int> labels;  // 0 entail, 1 contradict, 2 neutral
};

// In-batch softmax ranking: S = U . V^T, row i scored against target i.
// Needs B >= 2 (ConfigError otherwise).
Var in_batch_ranking_loss(Var u, Var v);

// Fraction of rows whose highest score is the diagonal entry.
double recall_at_1(const Tensor& u, const Tensor& v);

struct HeadConfig {
    bool response_projection = true;
    std::size_t nli_hidden = 0;  // 0 means embed_dim
    std::uint64_t seed = 1;
};

// Parameters of the three task heads; the encoder stays outside so every
// head reads embeddings only through Encoder::forward.
class TaskHeads {
public:
    TaskHeads(std::size_t embed_dim, HeadConfig config);

    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    const HeadConfig& config() const { return config_; }

    Var neighbor_loss(Tape& tape, const Encoder& enc, const RankingBatch& batch) const;
    Var response_loss(Tape& tape, const Encoder& enc, const RankingBatch& batch) const;
    Var response_project(Tape& tape, Var v) const;

    Var nli_logits(Tape& tape, const Encoder& enc, const NliBatch& batch) const;
    Var nli_loss(Tape& tape, const Encoder& enc, const NliBatch& batch) const;

    // concat(u, v, |u - v|, u * v)
    static Var nli_features(Var u, Var v);

private:
    std::size_t dim_;
    HeadConfig config_;
    ParameterStore params_;
};

struct TrainConfig {
    ModelConfig model;
    HeadConfig heads;
    std::vector<TaskKind> tasks;
    std::filesystem::path neighbor_data;  // running text, blank line between documents
    std::filesystem::path response_data;  // input \t response
    std::filesystem::path nli_data;       // premise \t hypothesis \t label
    std::size_t batch_size = 8;
    std::size_t cycles = 200;
    std::uint64_t seed = 1;
    float lr = 1e-3f;
    int min_count = 2;
    double weight_neighbor = 1.0;
    double weight_response = 1.0;
    double weight_nli = 1.0;
    std::size_t checkpoint_every = 0;  // 0 disables intermediate checkpoints
    std::filesystem::path checkpoint_dir;
    std::filesystem::path out;
    std::filesystem::path log;

    double weight(TaskKind kind) const;

    // Relative data paths resolve against `base_dir`.
    static TrainConfig from_key_values(const KeyValues& kv, const std::filesystem::path& base_dir = {});
    static std::vector<std::string> keys();
};

struct NliExample {
    std::string premise;
    std::string hypothesis;
    int label = 0;
};

struct TrainData {
    std::vector<std::pair<std::string, std::string>> neighbor;  // consecutive sentences
    std::vector<std::pair<std::string, std::string>> response;
    std::vector<NliExample> nli;
    // Sentences the vocabulary is built from; when empty, every side of
    // every pair is used.
    std::vector<std::string> vocab_text;

    std::vector<std::vector<std::string>> tokenized_corpus() const;
};

TrainData load_train_data(const TrainConfig& config);

// Consecutive-sentence pairs inside each document.
std::vector<std::pair<std::string, std::string>> neighbor_pairs(const std::vector<std::vector<std::string>>& docs);

// Round-robin multitask training state: one batch per enabled task per
// cycle, a single Adam over encoder and head parameters.
class MultitaskTrainer {
public:
    MultitaskTrainer(TrainConfig config, const TrainData& data, std::unique_ptr<Encoder> encoder = nullptr);

    // One optimizer step per enabled task. Returns the losses in task order.
    std::vector<double> run_cycle();
    // Runs config().cycles cycles, logging "step\ttask\tloss" lines.
    void run(std::ostream* log = nullptr);

    double step(TaskKind task);

    const TrainConfig& config() const { return config_; }
    Encoder& encoder() { return *encoder_; }
    const Encoder& encoder() const { return *encoder_; }
    TaskHeads& heads() { return *heads_; }
    std::unique_ptr<Encoder> release_encoder() { return std::move(encoder_); }

    std::size_t cycles_done() const { return cycles_; }
    const std::vector<double>& losses(TaskKind task) const;

    // Loss of the batch the next step would draw, without updating anything.
    double probe_loss(TaskKind task);

private:
    struct Stream {
        TaskKind kind;
        std::vector<std::size_t> order;
        std::size_t cursor = 0;
        std::uint64_t seed = 0;
        std::uint64_t epoch = 0;
        std::vector<double> losses;
    };
    Stream& stream(TaskKind task);
    std::vector<std::size_t> next_indices(Stream& s, std::size_t count);
    Var task_loss(Tape& tape, TaskKind task, std::vector<std::size_t> idx);

    TrainConfig config_;
    std::vector<std::pair<TokenSeq, TokenSeq>> neighbor_, response_;
    std::vector<std::pair<TokenSeq, TokenSeq>> nli_pairs_;
    std::vector<int> nli_labels_;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<TaskHeads> heads_;
    Adam adam_;
    std::vector<Stream> streams_;
    std::size_t cycles_ = 0;
};

// Loads the data, trains, writes intermediate and final checkpoints and the
// progress log as configured, and returns the trained encoder.
std::unique_ptr<Encoder> train_multitask(const TrainConfig& config);

}  // namespace senc
