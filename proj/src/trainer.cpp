#include "senc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "senc/data_io.hpp"
#include "senc/errors.hpp"
#include "senc/ops.hpp"

namespace senc {

TaskKind parse_task_kind(std::string_view name) {
    if (name == "neighbor") return TaskKind::neighbor;
    if (name == "response") return TaskKind::response;
    if (name == "nli") return TaskKind::nli;
    throw ConfigError("unknown task '" + std::string(name) + "' (expected neighbor, response or nli)");
}

std::string_view task_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::neighbor: return "neighbor";
        case TaskKind::response: return "response";
        case TaskKind::nli: return "nli";
    }
    return "?";
}

double TrainConfig::weight(TaskKind kind) const {
    switch (kind) {
        case TaskKind::neighbor: return weight_neighbor;
        case TaskKind::response: return weight_response;
        case TaskKind::nli: return weight_nli;
    }
    return 1.0;
}

std::vector<std::string> TrainConfig::keys() {
    std::vector<std::string> k = ModelConfig::keys();
    for (const char* key : {"tasks", "neighbor_data", "response_data", "nli_data", "batch_size", "cycles", "seed", "lr",
                            "min_count", "weight_neighbor", "weight_response", "weight_nli", "checkpoint_every",
                            "checkpoint_dir", "out", "log", "response_projection", "nli_hidden"})
        k.emplace_back(key);
    return k;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv, const std::filesystem::path& base_dir) {
    kv.require_known(keys());
    TrainConfig c;
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    KeyValues model = kv;
    if (!model.has("init_seed")) model.set("init_seed", std::to_string(c.seed));
    c.model = ModelConfig::from_key_values(model);
    c.heads.response_projection = kv.get_bool("response_projection", true);
    c.heads.nli_hidden = static_cast<std::size_t>(kv.get_int("nli_hidden", 0));
    c.heads.seed = c.seed + 1;
    for (const auto& t : kv.get_list("tasks", {"neighbor", "response", "nli"})) {
        TaskKind kind = parse_task_kind(t);
        if (std::find(c.tasks.begin(), c.tasks.end(), kind) != c.tasks.end())
            throw ConfigError("task '" + t + "' listed twice");
        c.tasks.push_back(kind);
    }
    auto path = [&](const char* key) -> std::filesystem::path {
        std::string v = kv.get_string(key, "");
        if (v.empty()) return {};
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    c.neighbor_data = path("neighbor_data");
    c.response_data = path("response_data");
    c.nli_data = path("nli_data");
    c.checkpoint_dir = path("checkpoint_dir");
    c.out = path("out");
    c.log = path("log");
    const long batch = kv.get_int("batch_size", 8);
    const long cycles = kv.get_int("cycles", 200);
    const long every = kv.get_int("checkpoint_every", 0);
    if (batch < 2) throw ConfigError("batch_size must be at least 2 (in-batch negatives)");
    if (cycles < 0 || every < 0) throw ConfigError("cycles and checkpoint_every must be non-negative");
    c.batch_size = static_cast<std::size_t>(batch);
    c.cycles = static_cast<std::size_t>(cycles);
    c.checkpoint_every = static_cast<std::size_t>(every);
    c.lr = static_cast<float>(kv.get_double("lr", 1e-3));
    c.min_count = static_cast<int>(kv.get_int("min_count", 2));
    c.weight_neighbor = kv.get_double("weight_neighbor", 1.0);
    c.weight_response = kv.get_double("weight_response", 1.0);
    c.weight_nli = kv.get_double("weight_nli", 1.0);
    if (c.lr <= 0.0f) throw ConfigError("lr must be positive");
    return c;
}

std::vector<std::pair<std::string, std::string>> neighbor_pairs(
    const std::vector<std::vector<std::string>>& docs) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& d : docs)
        for (std::size_t i = 0; i + 1 < d.size(); ++i) out.emplace_back(d[i], d[i + 1]);
    return out;
}

std::vector<std::vector<std::string>> TrainData::tokenized_corpus() const {
    std::vector<std::vector<std::string>> out;
    if (!vocab_text.empty()) {
        for (const auto& s : vocab_text) out.push_back(tokenize(s));
        return out;
    }
    for (const auto& [a, b] : neighbor) {
        out.push_back(tokenize(a));
        out.push_back(tokenize(b));
    }
    for (const auto& [a, b] : response) {
        out.push_back(tokenize(a));
        out.push_back(tokenize(b));
    }
    for (const auto& ex : nli) {
        out.push_back(tokenize(ex.premise));
        out.push_back(tokenize(ex.hypothesis));
    }
    return out;
}

TrainData load_train_data(const TrainConfig& config) {
    TrainData data;
    auto enabled = [&](TaskKind k) {
        return std::find(config.tasks.begin(), config.tasks.end(), k) != config.tasks.end();
    };
    auto require = [](const std::filesystem::path& p, const char* what) {
        if (p.empty()) throw ConfigError(std::string(what) + " task enabled but no data path given");
        if (!std::filesystem::exists(p)) throw IoError("cannot open " + p.string());
    };
    if (enabled(TaskKind::neighbor)) {
        require(config.neighbor_data, "neighbor");
        auto docs = read_documents(config.neighbor_data);
        for (const auto& d : docs) data.vocab_text.insert(data.vocab_text.end(), d.begin(), d.end());
        data.neighbor = neighbor_pairs(docs);
    }
    if (enabled(TaskKind::response)) {
        require(config.response_data, "response");
        data.response = read_pairs(config.response_data);
        for (const auto& [a, b] : data.response) {
            data.vocab_text.push_back(a);
            data.vocab_text.push_back(b);
        }
    }
    if (enabled(TaskKind::nli)) {
        require(config.nli_data, "nli");
        auto ds = read_task_tsv(config.nli_data, TaskSchema::pair_class);
        if (ds.num_classes > 3) {
            throw InputError(config.nli_data.string() + ": nli labels must be 0 entail, 1 contradict, 2 neutral");
        }
        for (const auto& ex : ds.examples) {
            data.nli.push_back({ex.text_a, ex.text_b, ex.label});
            data.vocab_text.push_back(ex.text_a);
            data.vocab_text.push_back(ex.text_b);
        }
    }
    return data;
}

MultitaskTrainer::MultitaskTrainer(TrainConfig config, const TrainData& data, std::unique_ptr<Encoder> encoder)
    : config_(std::move(config)), adam_(AdamOptions{config_.lr}) {
    if (config_.tasks.empty()) throw ConfigError("no training task enabled");
    if (!encoder) encoder = make_encoder(config_.model, build_vocab(data.tokenized_corpus(), config_.min_count));
    encoder_ = std::move(encoder);
    heads_ = std::make_unique<TaskHeads>(encoder_->embed_dim(), config_.heads);

    auto prep = [&](const std::string& s) { return encoder_->prepare(s); };
    for (const auto& [a, b] : data.neighbor) neighbor_.emplace_back(prep(a), prep(b));
    for (const auto& [a, b] : data.response) response_.emplace_back(prep(a), prep(b));
    for (const auto& ex : data.nli) {
        nli_pairs_.emplace_back(prep(ex.premise), prep(ex.hypothesis));
        nli_labels_.push_back(ex.label);
    }

    std::uint64_t salt = 0;
    for (TaskKind t : config_.tasks) {
        std::size_t n = t == TaskKind::neighbor ? neighbor_.size()
                        : t == TaskKind::response ? response_.size()
                                                  : nli_pairs_.size();
        const bool ranking = t != TaskKind::nli;
        if (n < (ranking ? 2u : 1u)) {
            throw ConfigError("task " + std::string(task_name(t)) + " has " + std::to_string(n) +
                              " training examples; " + (ranking ? "ranking needs at least 2" : "need at least 1"));
        }
        Stream s;
        s.kind = t;
        s.seed = config_.seed * 1000003u + 17u * ++salt;
        s.order.resize(n);
        std::iota(s.order.begin(), s.order.end(), std::size_t{0});
        std::mt19937_64 rng(s.seed);
        std::shuffle(s.order.begin(), s.order.end(), rng);
        streams_.push_back(std::move(s));
    }
}

MultitaskTrainer::Stream& MultitaskTrainer::stream(TaskKind task) {
    for (auto& s : streams_)
        if (s.kind == task) return s;
    throw ConfigError("task " + std::string(task_name(task)) + " is not enabled");
}

const std::vector<double>& MultitaskTrainer::losses(TaskKind task) const {
    for (const auto& s : streams_)
        if (s.kind == task) return s.losses;
    throw ConfigError("task " + std::string(task_name(task)) + " is not enabled");
}

std::vector<std::size_t> MultitaskTrainer::next_indices(Stream& s, std::size_t count) {
    count = std::min(count, s.order.size());
    std::vector<std::size_t> idx;
    while (idx.size() < count) {
        if (s.cursor == s.order.size()) {
            s.cursor = 0;
            ++s.epoch;
            std::mt19937_64 rng(s.seed + s.epoch);
            std::shuffle(s.order.begin(), s.order.end(), rng);
        }
        const std::size_t i = s.order[s.cursor++];
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    return idx;
}

Var MultitaskTrainer::task_loss(Tape& tape, TaskKind task, std::vector<std::size_t> idx) {
    if (task == TaskKind::nli) {
        NliBatch b;
        for (auto i : idx) {
            b.premise.push_back(nli_pairs_[i].first);
            b.hypothesis.push_back(nli_pairs_[i].second);
            b.labels.push_back(nli_labels_[i]);
        }
        return heads_->nli_loss(tape, *encoder_, b);
    }
    const auto& pairs = task == TaskKind::neighbor ? neighbor_ : response_;
    RankingBatch b;
    for (auto i : idx) {
        b.left.push_back(pairs[i].first);
        b.right.push_back(pairs[i].second);
    }
    return task == TaskKind::neighbor ? heads_->neighbor_loss(tape, *encoder_, b)
                                      : heads_->response_loss(tape, *encoder_, b);
}

double MultitaskTrainer::probe_loss(TaskKind task) {
    Stream copy = stream(task);
    auto idx = next_indices(copy, config_.batch_size);
    Tape tape(false);
    return task_loss(tape, task, std::move(idx)).value()[0];
}

double MultitaskTrainer::step(TaskKind task) {
    Stream& s = stream(task);
    auto idx = next_indices(s, config_.batch_size);
    const std::size_t step_no = s.losses.size() + 1;
    auto fail = [&](const std::string& why) {
        return TrainingError("task " + std::string(task_name(task)) + " diverged at step " +
                             std::to_string(step_no) + ": " + why);
    };
    encoder_->params().zero_grad();
    heads_->params().zero_grad();
    double loss = 0.0;
    try {
        Tape tape;
        Var l = task_loss(tape, task, std::move(idx));
        loss = l.value()[0];
        tape.backward(scale(l, static_cast<float>(config_.weight(task))));
        ParameterStore* stores[] = {&encoder_->params(), &heads_->params()};
        adam_.step(stores);
    } catch (const NumericError& e) {
        throw fail(e.what());
    } catch (const TrainingError& e) {
        throw fail(e.what());
    }
    if (!std::isfinite(loss)) throw fail("loss is not finite");
    s.losses.push_back(loss);
    return loss;
}

std::vector<double> MultitaskTrainer::run_cycle() {
    std::vector<double> out;
    for (TaskKind t : config_.tasks) out.push_back(step(t));
    ++cycles_;
    return out;
}

void MultitaskTrainer::run(std::ostream* log) {
    if (log) *log << "step\ttask\tloss\n";
    while (cycles_ < config_.cycles) {
        auto losses = run_cycle();
        if (log) {
            for (std::size_t i = 0; i < losses.size(); ++i)
                *log << cycles_ << '\t' << task_name(config_.tasks[i]) << '\t' << std::setprecision(6)
                     << losses[i] << '\n';
        }
        if (config_.checkpoint_every && cycles_ % config_.checkpoint_every == 0 && !config_.checkpoint_dir.empty()) {
            std::filesystem::create_directories(config_.checkpoint_dir);
            save_checkpoint(*encoder_, config_.checkpoint_dir / ("step_" + std::to_string(cycles_) + ".ckpt"));
        }
    }
}

std::unique_ptr<Encoder> train_multitask(const TrainConfig& config) {
    MultitaskTrainer trainer(config, load_train_data(config));
    std::ofstream log_file;
    if (!config.log.empty()) {
        log_file.open(config.log);
        if (!log_file) throw IoError("cannot write " + config.log.string());
    }
    trainer.run(log_file.is_open() ? &log_file : nullptr);
    if (!config.out.empty()) save_checkpoint(trainer.encoder(), config.out);
    return trainer.release_encoder();
}

}  // namespace senc
