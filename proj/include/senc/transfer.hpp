#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "senc/data_io.hpp"
#include "senc/encoders.hpp"

namespace senc {

enum class SentenceSource { none, use_d, use_t };
enum class WordSource { none, pretrained, learned };
enum class HeadKind { dnn, cnn };

struct HeadHyper {
    std::size_t hidden = 64;  // dnn hidden width (tanh)
    std::size_t filters = 32;  // cnn filters per width
    std::vector<std::size_t> widths{2, 3};
    std::size_t learned_dim = 50;  // width of task-learned word embeddings
    float lr = 3e-3f;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 60;
    std::size_t patience = 6;  // epochs without dev-loss improvement
};

// String form: [use_d|use_t][+](dnn|cnn)[:w2v|:lrn], e.g. "use_t+cnn:w2v",
// "dnn:lrn", "use_d+dnn".
struct TransferModelSpec {
    SentenceSource sentence = SentenceSource::none;
    WordSource word = WordSource::none;
    HeadKind head = HeadKind::dnn;
    HeadHyper hyper;

    // ConfigError when no source is set or a cnn head has no word source.
    void validate() const;
    std::string to_string() const;
    static TransferModelSpec parse(std::string_view text);
};

// Frozen resources a spec may draw on; missing ones are a ConfigError.
struct TransferResources {
    const Encoder* use_d = nullptr;
    const Encoder* use_t = nullptr;
    const WordVecTable* word_vectors = nullptr;
};

// Token pathway of a head: ids per example into `table` (frozen pretrained
// rows or trainable task-learned rows). Row `pad` pads cnn inputs.
struct WordPathway {
    bool enabled = false;
    Tensor table;
    bool trainable = false;
    TokenId pad = 0;
};

struct HeadInputs {
    Tensor fixed;  // N x f frozen features (f may be 0)
    std::vector<std::vector<TokenId>> tokens;  // N sequences, empty without a word pathway
    std::size_t size() const { return fixed.rows(); }
};

class Classifier {
public:
    Classifier(HeadKind kind, const HeadHyper& hyper, std::size_t fixed_dim, WordPathway word, int classes,
               std::uint64_t seed);

    Var logits(Tape& tape, const HeadInputs& in, std::span<const std::size_t> rows) const;
    std::vector<int> predict(const HeadInputs& in) const;
    double accuracy(const HeadInputs& in, std::span<const int> labels) const;
    double mean_loss(const HeadInputs& in, std::span<const int> labels) const;

    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    int classes() const { return classes_; }
    // Width of the vector entering the dense layers.
    std::size_t feature_dim() const { return feature_dim_; }

private:
    Var word_features(Tape& tape, const HeadInputs& in, std::span<const std::size_t> rows) const;

    HeadKind kind_;
    HeadHyper hyper_;
    std::size_t fixed_dim_;
    bool has_word_;
    TokenId pad_;
    int classes_;
    std::size_t feature_dim_ = 0;
    ParameterStore params_;
};

// Adam on cross-entropy with early stopping on dev loss (best epoch kept).
// An empty dev set trains for max_epochs. Fewer than two classes in the
// training labels is an InputError.
Classifier train_head(HeadKind kind, const HeadHyper& hyper, WordPathway word, const HeadInputs& train,
                      std::span<const int> train_labels, const HeadInputs& dev, std::span<const int> dev_labels,
                      std::uint64_t seed);

// Fixed feature vectors -> MLP.
Classifier dnn_head_train(const Tensor& features, std::span<const int> labels, const HeadHyper& hyper,
                          std::uint64_t seed, const Tensor* dev = nullptr, std::span<const int> dev_labels = {});

// Token-embedding sequences (n x d_w each) -> convolution + max-over-time.
Classifier cnn_head_train(const std::vector<Tensor>& sequences, std::span<const int> labels, const HeadHyper& hyper,
                          std::uint64_t seed);
std::vector<int> cnn_predict(const Classifier& clf, const std::vector<Tensor>& sequences);

struct TransferSplits {
    LabeledDataset train, dev, test;
};

// Deterministic stratified 80/10/10 split.
TransferSplits split_dataset(const LabeledDataset& data, std::uint64_t seed);

// Prefix order of the training set: the first s entries form the stratified
// subsample of size s, so subsamples are nested across sizes.
std::vector<std::size_t> stratified_order(std::span<const int> labels, std::uint64_t seed);

// Features for one spec over a set of examples. `word_vocab` supplies the
// token ids of a task-learned word source (built from the training text).
struct FeatureSet {
    HeadInputs inputs;
    WordPathway word;
    std::size_t dim() const;  // dense input width: fixed + word part for dnn
};
FeatureSet assemble_features(const TransferModelSpec& spec, const TransferResources& res,
                             std::span<const LabeledExample> examples, TaskSchema schema,
                             const Vocabulary* word_vocab = nullptr);

struct EvalReport {
    std::string task;
    std::string spec;
    std::size_t size = 0;
    std::vector<double> runs;
    double mean() const;
};

inline constexpr std::size_t kFullSize = 0;

struct CurveOptions {
    std::vector<std::size_t> sizes{kFullSize};
    std::size_t repeats = 10;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string task_name = "task";
};

std::vector<EvalReport> run_learning_curve(const TransferSplits& splits, const TransferModelSpec& spec,
                                           const TransferResources& res, const CurveOptions& opts);
EvalReport run_eval(const TransferSplits& splits, const TransferModelSpec& spec, const TransferResources& res,
                    std::size_t repeats, std::uint64_t seed, std::size_t threads = 1,
                    const std::string& task_name = "task");

// task, spec, size, run, accuracy rows, then a "# summary" block of means.
void write_report_tsv(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace senc
