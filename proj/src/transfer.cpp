#include "senc/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <unordered_map>

#include "senc/errors.hpp"
#include "senc/ops.hpp"
#include "senc/optim.hpp"
#include "senc/parallel.hpp"

namespace senc {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Tensor uniform(std::size_t r, std::size_t c, float bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> dist(-bound, bound);
    Tensor t = Tensor::matrix(r, c);
    for (auto& x : t.storage()) x = dist(rng);
    return t;
}

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows) {
    Tensor out = Tensor::matrix(rows.size(), t.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) std::ranges::copy(t.row_span(rows[i]), out.row_span(i).begin());
    return out;
}

HeadInputs select(const HeadInputs& in, std::span<const std::size_t> rows) {
    HeadInputs out;
    out.fixed = select_rows(in.fixed, rows);
    if (!in.tokens.empty())
        for (auto r : rows) out.tokens.push_back(in.tokens[r]);
    return out;
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
    std::vector<std::size_t> r(to - from);
    std::iota(r.begin(), r.end(), from);
    return r;
}

std::vector<std::string> word_tokens(const LabeledExample& ex, TaskSchema schema) {
    auto toks = tokenize(ex.text_a);
    if (schema == TaskSchema::pair_class) {
        auto b = tokenize(ex.text_b);
        toks.insert(toks.end(), b.begin(), b.end());
    }
    return toks;
}

}  // namespace

// ---- spec ----

void TransferModelSpec::validate() const {
    if (sentence == SentenceSource::none && word == WordSource::none)
        throw ConfigError("transfer spec needs a sentence source, a word source or both");
    if (head == HeadKind::cnn && word == WordSource::none)
        throw ConfigError("cnn head needs a word source (:w2v or :lrn)");
    if (hyper.widths.empty() || hyper.filters == 0 || hyper.hidden == 0 || hyper.batch_size == 0)
        throw ConfigError("head hyperparameters must be positive");
}

std::string TransferModelSpec::to_string() const {
    std::string s;
    if (sentence == SentenceSource::use_d) s = "use_d+";
    if (sentence == SentenceSource::use_t) s = "use_t+";
    s += head == HeadKind::dnn ? "dnn" : "cnn";
    if (word == WordSource::pretrained) s += ":w2v";
    if (word == WordSource::learned) s += ":lrn";
    return s;
}

TransferModelSpec TransferModelSpec::parse(std::string_view text) {
    TransferModelSpec spec;
    const std::string whole(text);
    auto bad = [&](const std::string& why) {
        return ConfigError("bad transfer spec '" + whole + "': " + why +
                           " (expected [use_d+|use_t+](dnn|cnn)[:w2v|:lrn])");
    };
    std::string_view left = text;
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
        const auto w = text.substr(colon + 1);
        if (w == "w2v") spec.word = WordSource::pretrained;
        else if (w == "lrn") spec.word = WordSource::learned;
        else throw bad("unknown word source '" + std::string(w) + "'");
        left = text.substr(0, colon);
    }
    std::string_view head = left;
    if (auto plus = left.find('+'); plus != std::string_view::npos) {
        const auto s = left.substr(0, plus);
        if (s == "use_d") spec.sentence = SentenceSource::use_d;
        else if (s == "use_t") spec.sentence = SentenceSource::use_t;
        else throw bad("unknown sentence source '" + std::string(s) + "'");
        head = left.substr(plus + 1);
    }
    if (head == "dnn") spec.head = HeadKind::dnn;
    else if (head == "cnn") spec.head = HeadKind::cnn;
    else throw bad("unknown head '" + std::string(head) + "'");
    spec.validate();
    return spec;
}

// ---- classifier ----

Classifier::Classifier(HeadKind kind, const HeadHyper& hyper, std::size_t fixed_dim, WordPathway word, int classes,
                       std::uint64_t seed)
    : kind_(kind), hyper_(hyper), fixed_dim_(fixed_dim), has_word_(word.enabled), pad_(word.pad), classes_(classes) {
    if (classes < 2) throw InputError("classifier needs at least 2 classes, got " + std::to_string(classes));
    if (kind == HeadKind::cnn && !has_word_) throw ConfigError("cnn head needs a word pathway");
    std::mt19937_64 rng(seed);
    std::size_t dw = 0;
    if (has_word_) {
        dw = word.table.cols();
        if (word.trainable) word.table = uniform(word.table.rows(), dw, 0.1f, rng);
        params_.add("word/table", std::move(word.table), word.trainable);
    }
    auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
        params_.add(name + "/w", uniform(in, out, 1.0f / std::sqrt(static_cast<float>(in)), rng));
        params_.add(name + "/b", Tensor::matrix(1, out));
    };
    if (kind == HeadKind::dnn) {
        feature_dim_ = fixed_dim + dw;
        if (feature_dim_ == 0) throw ConfigError("classifier has no input features");
        dense("dnn/hidden", feature_dim_, hyper.hidden);
        dense("dnn/out", hyper.hidden, static_cast<std::size_t>(classes));
    } else {
        for (auto w : hyper.widths) dense("cnn/conv" + std::to_string(w), w * dw, hyper.filters);
        feature_dim_ = fixed_dim + hyper.filters * hyper.widths.size();
        dense("cnn/out", feature_dim_, static_cast<std::size_t>(classes));
    }
}

Var Classifier::word_features(Tape& tape, const HeadInputs& in, std::span<const std::size_t> rows) const {
    Var table = tape.param(params_.get("word/table"));
    if (kind_ == HeadKind::dnn) {
        std::vector<std::vector<TokenId>> bags;
        std::vector<float> inv;
        for (auto r : rows) {
            bags.push_back(in.tokens[r]);
            inv.push_back(1.0f / static_cast<float>(std::max<std::size_t>(1, in.tokens[r].size())));
        }
        return scale_rows(bag_sum(table, bags), std::move(inv));
    }
    const std::size_t min_len = *std::ranges::max_element(hyper_.widths);
    std::vector<std::vector<TokenId>> seqs;
    for (auto r : rows) {
        auto s = in.tokens[r];
        if (s.empty()) throw InputError("cnn head: empty token sequence");
        if (s.size() < min_len) s.resize(min_len, pad_);
        seqs.push_back(std::move(s));
    }
    std::vector<Var> pooled;
    for (auto w : hyper_.widths) {
        std::vector<Var> offsets;
        for (std::size_t o = 0; o < w; ++o) {
            std::vector<TokenId> ids;
            for (const auto& s : seqs)
                for (std::size_t p = 0; p + w <= s.size(); ++p) ids.push_back(s[p + o]);
            offsets.push_back(gather_rows(table, std::span<const TokenId>(ids)));
        }
        Var win = offsets.size() == 1 ? offsets[0] : concat_cols(offsets);
        const std::string name = "cnn/conv" + std::to_string(w);
        Var act = relu(add_bias(matmul(win, tape.param(params_.get(name + "/w"))), tape.param(params_.get(name + "/b"))));
        std::vector<Var> per_example;
        std::size_t start = 0;
        for (const auto& s : seqs) {
            const std::size_t count = s.size() - w + 1;
            per_example.push_back(max_rows(slice_rows(act, start, count)));
            start += count;
        }
        pooled.push_back(per_example.size() == 1 ? per_example[0] : concat_rows(per_example));
    }
    return pooled.size() == 1 ? pooled[0] : concat_cols(pooled);
}

Var Classifier::logits(Tape& tape, const HeadInputs& in, std::span<const std::size_t> rows) const {
    std::vector<Var> parts;
    if (fixed_dim_ > 0) parts.push_back(tape.constant(select_rows(in.fixed, rows)));
    if (has_word_) parts.push_back(word_features(tape, in, rows));
    Var x = parts.size() == 1 ? parts[0] : concat_cols(parts);
    auto dense = [&](Var v, const std::string& name) {
        return add_bias(matmul(v, tape.param(params_.get(name + "/w"))), tape.param(params_.get(name + "/b")));
    };
    if (kind_ == HeadKind::dnn) return dense(tanh(dense(x, "dnn/hidden")), "dnn/out");
    return dense(x, "cnn/out");
}

std::vector<int> Classifier::predict(const HeadInputs& in) const {
    std::vector<int> out;
    constexpr std::size_t chunk = 256;
    for (std::size_t from = 0; from < in.size(); from += chunk) {
        auto rows = range(from, std::min(in.size(), from + chunk));
        Tape tape(false);
        const Tensor& z = logits(tape, in, rows).value();
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto r = z.row_span(i);
            out.push_back(static_cast<int>(std::ranges::max_element(r) - r.begin()));
        }
    }
    return out;
}

double Classifier::accuracy(const HeadInputs& in, std::span<const int> labels) const {
    if (labels.empty()) return 0.0;
    auto pred = predict(in);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double Classifier::mean_loss(const HeadInputs& in, std::span<const int> labels) const {
    double total = 0.0;
    constexpr std::size_t chunk = 256;
    for (std::size_t from = 0; from < in.size(); from += chunk) {
        const std::size_t to = std::min(in.size(), from + chunk);
        Tape tape(false);
        Var l = cross_entropy(logits(tape, in, range(from, to)), labels.subspan(from, to - from));
        total += static_cast<double>(l.value()[0]) * static_cast<double>(to - from);
    }
    return in.size() ? total / static_cast<double>(in.size()) : 0.0;
}

Classifier train_head(HeadKind kind, const HeadHyper& hyper, WordPathway word, const HeadInputs& train,
                      std::span<const int> train_labels, const HeadInputs& dev, std::span<const int> dev_labels,
                      std::uint64_t seed) {
    if (train.size() != train_labels.size() || dev.size() != dev_labels.size())
        throw DimensionError("head training: feature and label counts differ");
    std::set<int> distinct(train_labels.begin(), train_labels.end());
    if (distinct.size() < 2) throw InputError("head training data has a single class");
    int classes = *distinct.rbegin() + 1;
    for (int y : dev_labels) classes = std::max(classes, y + 1);

    Classifier clf(kind, hyper, train.fixed.cols(), std::move(word), classes, mix(seed));
    Adam adam(AdamOptions{hyper.lr});
    std::mt19937_64 rng(mix(seed + 1));
    std::vector<std::size_t> order = range(0, train.size());

    double best = INFINITY;
    std::size_t since = 0;
    std::vector<Tensor> snapshot;
    for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
        std::ranges::shuffle(order, rng);
        for (std::size_t from = 0; from < order.size(); from += hyper.batch_size) {
            std::span<const std::size_t> rows(order.data() + from, std::min(hyper.batch_size, order.size() - from));
            std::vector<int> y;
            for (auto r : rows) y.push_back(train_labels[r]);
            clf.params().zero_grad();
            Tape tape;
            tape.backward(cross_entropy(clf.logits(tape, train, rows), y));
            adam.step(clf.params());
        }
        if (dev.size() == 0) continue;
        const double dl = clf.mean_loss(dev, dev_labels);
        if (dl < best - 1e-6) {
            best = dl;
            since = 0;
            snapshot.clear();
            for (const auto& p : clf.params()) snapshot.push_back(p->value);
        } else if (++since >= hyper.patience) {
            break;
        }
    }
    if (!snapshot.empty()) {
        std::size_t i = 0;
        for (auto& p : clf.params()) p->value = snapshot[i++];
    }
    return clf;
}

Classifier dnn_head_train(const Tensor& features, std::span<const int> labels, const HeadHyper& hyper,
                          std::uint64_t seed, const Tensor* dev, std::span<const int> dev_labels) {
    HeadInputs tr{features, {}};
    HeadInputs dv{dev ? *dev : Tensor::matrix(0, features.cols()), {}};
    return train_head(HeadKind::dnn, hyper, {}, tr, labels, dv, dev_labels, seed);
}

namespace {

// Stacks the sequences into one frozen table; row 0 is the zero pad row.
std::pair<WordPathway, HeadInputs> stack_sequences(const std::vector<Tensor>& sequences) {
    if (sequences.empty()) throw InputError("cnn head: no sequences");
    const std::size_t dw = sequences[0].cols();
    std::size_t total = 1;
    for (const auto& s : sequences) {
        if (s.rows() == 0) throw InputError("cnn head: empty token sequence");
        if (s.cols() != dw) throw DimensionError("cnn head: sequences differ in embedding width");
        total += s.rows();
    }
    WordPathway word{true, Tensor::matrix(total, dw), false, 0};
    HeadInputs in{Tensor::matrix(sequences.size(), 0), {}};
    TokenId next = 1;
    for (const auto& s : sequences) {
        std::vector<TokenId> ids;
        for (std::size_t r = 0; r < s.rows(); ++r, ++next) {
            std::ranges::copy(s.row_span(r), word.table.row_span(static_cast<std::size_t>(next)).begin());
            ids.push_back(next);
        }
        in.tokens.push_back(std::move(ids));
    }
    return {std::move(word), std::move(in)};
}

}  // namespace

Classifier cnn_head_train(const std::vector<Tensor>& sequences, std::span<const int> labels, const HeadHyper& hyper,
                          std::uint64_t seed) {
    auto [word, in] = stack_sequences(sequences);
    HeadInputs dev{Tensor::matrix(0, 0), {}};
    return train_head(HeadKind::cnn, hyper, std::move(word), in, labels, dev, {}, seed);
}

std::vector<int> cnn_predict(const Classifier& clf, const std::vector<Tensor>& sequences) {
    // rebuild a frozen classifier over the new sequences' table
    auto [word, in] = stack_sequences(sequences);
    const auto& table = clf.params().get("word/table").value;
    if (table.cols() != word.table.cols()) throw DimensionError("cnn_predict: embedding width mismatch");
    auto* self = const_cast<Classifier*>(&clf);
    Tensor saved = std::move(self->params().get("word/table").value);
    self->params().get("word/table").value = std::move(word.table);
    std::vector<int> out;
    try {
        out = clf.predict(in);
    } catch (...) {
        self->params().get("word/table").value = std::move(saved);
        throw;
    }
    self->params().get("word/table").value = std::move(saved);
    return out;
}

// ---- splits and features ----

TransferSplits split_dataset(const LabeledDataset& data, std::uint64_t seed) {
    if (data.schema == TaskSchema::pair_score) throw ConfigError("transfer tasks need class labels");
    std::unordered_map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data.examples[i].label].push_back(i);
    std::vector<int> classes;
    for (const auto& [c, _] : by_class) classes.push_back(c);
    std::ranges::sort(classes);
    std::mt19937_64 rng(mix(seed ^ 0x5eed5eedULL));
    std::vector<std::size_t> tr, dv, te;
    for (int c : classes) {
        auto& idx = by_class[c];
        std::ranges::shuffle(idx, rng);
        const auto n = idx.size();
        const auto nd = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
        const auto nt = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
        for (std::size_t k = 0; k < n; ++k) (k < nd ? dv : k < nd + nt ? te : tr).push_back(idx[k]);
    }
    TransferSplits out;
    auto fill = [&](LabeledDataset& d, std::vector<std::size_t>& idx) {
        std::ranges::sort(idx);
        d.schema = data.schema;
        d.num_classes = data.num_classes;
        for (auto i : idx) d.examples.push_back(data.examples[i]);
    };
    fill(out.train, tr);
    fill(out.dev, dv);
    fill(out.test, te);
    return out;
}

std::vector<std::size_t> stratified_order(std::span<const int> labels, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(mix(seed ^ 0x0dde7ULL));
    struct Item {
        double key;
        int cls;
        std::size_t index;
    };
    std::vector<Item> items;
    for (auto& [c, idx] : by_class) {
        std::ranges::shuffle(idx, rng);
        const double n = static_cast<double>(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) items.push_back({(static_cast<double>(k) + 0.5) / n, c, idx[k]});
    }
    std::ranges::sort(items, [](const Item& a, const Item& b) {
        return a.key != b.key ? a.key < b.key : a.cls < b.cls;
    });
    std::vector<std::size_t> out;
    for (const auto& it : items) out.push_back(it.index);
    return out;
}

std::size_t FeatureSet::dim() const { return inputs.fixed.cols() + (word.enabled ? word.table.cols() : 0); }

namespace {

const Encoder& sentence_encoder(SentenceSource s, const TransferResources& res) {
    const Encoder* enc = s == SentenceSource::use_d ? res.use_d : res.use_t;
    if (!enc)
        throw ConfigError(std::string("spec needs the ") + (s == SentenceSource::use_d ? "use_d" : "use_t") +
                          " encoder checkpoint");
    return *enc;
}

Tensor sentence_features(const Encoder& enc, std::span<const LabeledExample> examples, TaskSchema schema) {
    const std::size_t d = enc.embed_dim();
    const bool pair = schema == TaskSchema::pair_class;
    Tensor out = Tensor::matrix(examples.size(), pair ? 4 * d : d);
    constexpr std::size_t chunk = 256;
    for (std::size_t from = 0; from < examples.size(); from += chunk) {
        const std::size_t to = std::min(examples.size(), from + chunk);
        std::vector<TokenSeq> a, b;
        for (std::size_t i = from; i < to; ++i) {
            a.push_back(enc.prepare(examples[i].text_a));
            if (pair) b.push_back(enc.prepare(examples[i].text_b));
        }
        Tensor ua = enc.encode_batch(a);
        Tensor ub = pair ? enc.encode_batch(b) : Tensor{};
        for (std::size_t i = from; i < to; ++i) {
            auto dst = out.row_span(i);
            auto u = ua.row_span(i - from);
            for (std::size_t j = 0; j < d; ++j) {
                dst[j] = u[j];
                if (!pair) continue;
                const float v = ub.row_span(i - from)[j];
                dst[d + j] = v;
                dst[2 * d + j] = std::abs(u[j] - v);
                dst[3 * d + j] = u[j] * v;
            }
        }
    }
    return out;
}

Tensor concat_features(const Tensor& a, const Tensor& b) {
    if (a.cols() == 0) return b;
    if (b.cols() == 0) return a;
    Tensor out = Tensor::matrix(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row_span(i);
        std::ranges::copy(a.row_span(i), dst.begin());
        std::ranges::copy(b.row_span(i), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

}  // namespace

FeatureSet assemble_features(const TransferModelSpec& spec, const TransferResources& res,
                             std::span<const LabeledExample> examples, TaskSchema schema,
                             const Vocabulary* word_vocab) {
    spec.validate();
    if (schema == TaskSchema::pair_score) throw ConfigError("transfer tasks need class labels");
    FeatureSet fs;
    fs.inputs.fixed = Tensor::matrix(examples.size(), 0);
    if (spec.sentence != SentenceSource::none)
        fs.inputs.fixed = sentence_features(sentence_encoder(spec.sentence, res), examples, schema);

    if (spec.word == WordSource::pretrained) {
        if (!res.word_vectors) throw ConfigError("spec needs pretrained word vectors");
        const auto& wv = *res.word_vectors;
        // task-restricted table: row 0 is the zero OOV/pad row
        std::unordered_map<std::size_t, TokenId> local;
        std::vector<std::size_t> rows;
        std::vector<std::vector<TokenId>> tokens;
        for (const auto& ex : examples) {
            std::vector<TokenId> ids;
            for (const auto& t : word_tokens(ex, schema)) {
                auto it = wv.index.find(t);
                if (it == wv.index.end()) {
                    ids.push_back(0);
                    continue;
                }
                auto [pos, fresh] = local.try_emplace(it->second, static_cast<TokenId>(rows.size() + 1));
                if (fresh) rows.push_back(it->second);
                ids.push_back(pos->second);
            }
            tokens.push_back(std::move(ids));
        }
        Tensor table = Tensor::matrix(rows.size() + 1, wv.dim);
        for (std::size_t r = 0; r < rows.size(); ++r) std::ranges::copy(wv.row(rows[r]), table.row_span(r + 1).begin());
        if (spec.head == HeadKind::dnn) {
            // mean of the known word vectors, a fixed feature
            Tensor mean = Tensor::matrix(examples.size(), wv.dim);
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                std::size_t known = 0;
                for (auto id : tokens[i]) {
                    if (id == 0) continue;
                    ++known;
                    auto src = table.row_span(static_cast<std::size_t>(id));
                    auto dst = mean.row_span(i);
                    for (std::size_t j = 0; j < wv.dim; ++j) dst[j] += src[j];
                }
                if (known)
                    for (auto& x : mean.row_span(i)) x /= static_cast<float>(known);
            }
            fs.inputs.fixed = concat_features(fs.inputs.fixed, mean);
        } else {
            fs.word = {true, std::move(table), false, 0};
            fs.inputs.tokens = std::move(tokens);
        }
    } else if (spec.word == WordSource::learned) {
        if (!word_vocab) throw ConfigError("learned word source needs a task vocabulary");
        for (const auto& ex : examples) fs.inputs.tokens.push_back(word_vocab->encode(word_tokens(ex, schema)).ids);
        fs.word = {true, Tensor::matrix(word_vocab->size(), spec.hyper.learned_dim), true, kPadId};
    }
    return fs;
}

// ---- evaluation ----

double EvalReport::mean() const {
    if (runs.empty()) return 0.0;
    double s = 0.0;
    for (double r : runs) s += r;
    return s / static_cast<double>(runs.size());
}

std::vector<EvalReport> run_learning_curve(const TransferSplits& splits, const TransferModelSpec& spec,
                                           const TransferResources& res, const CurveOptions& opts) {
    spec.validate();
    if (opts.repeats == 0) throw ConfigError("repeats must be at least 1");
    if (splits.train.size() < 2) throw InputError("transfer task needs at least 2 training examples");
    if (splits.test.size() == 0) throw InputError("transfer task has an empty test split");
    const TaskSchema schema = splits.train.schema;
    const std::size_t ntr = splits.train.size(), ndv = splits.dev.size(), nte = splits.test.size();

    std::vector<LabeledExample> all = splits.train.examples;
    all.insert(all.end(), splits.dev.examples.begin(), splits.dev.examples.end());
    all.insert(all.end(), splits.test.examples.begin(), splits.test.examples.end());
    std::vector<int> labels;
    for (const auto& ex : all) labels.push_back(ex.label);
    const std::span<const int> train_labels(labels.data(), ntr);

    // sentence and pretrained parts do not depend on the subsample
    TransferModelSpec base_spec = spec;
    const bool learned = spec.word == WordSource::learned;
    FeatureSet base;
    if (learned) {
        base_spec.word = WordSource::none;
        base.inputs.fixed = Tensor::matrix(all.size(), 0);
        if (spec.sentence != SentenceSource::none)
            base = assemble_features(base_spec, res, all, schema);
    } else {
        base = assemble_features(spec, res, all, schema);
    }

    const auto order = stratified_order(train_labels, opts.seed);
    const auto dev_rows = range(ntr, ntr + ndv), test_rows = range(ntr + ndv, ntr + ndv + nte);
    std::vector<EvalReport> reports;
    for (std::size_t requested : opts.sizes) {
        const std::size_t size = requested == kFullSize ? ntr : requested;
        if (size > ntr)
            throw InputError("learning-curve size " + std::to_string(size) + " exceeds the " + std::to_string(ntr) +
                             " training examples");
        if (size < 2) throw InputError("learning-curve size must be at least 2");
        std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));

        FeatureSet fs;
        if (learned) {
            std::vector<std::vector<std::string>> corpus;
            for (auto r : train_rows) corpus.push_back(word_tokens(all[r], schema));
            const Vocabulary vocab = build_vocab(corpus, 1);
            TransferModelSpec word_only = spec;
            word_only.sentence = SentenceSource::none;
            fs = assemble_features(word_only, res, all, schema, &vocab);
            fs.inputs.fixed = base.inputs.fixed;
        } else {
            fs.inputs = base.inputs;
            fs.word = base.word;
        }
        const HeadInputs tr = select(fs.inputs, train_rows), dv = select(fs.inputs, dev_rows),
                         te = select(fs.inputs, test_rows);
        std::vector<int> ytr, ydv, yte;
        for (auto r : train_rows) ytr.push_back(labels[r]);
        for (auto r : dev_rows) ydv.push_back(labels[r]);
        for (auto r : test_rows) yte.push_back(labels[r]);

        EvalReport rep{opts.task_name, spec.to_string(), size, std::vector<double>(opts.repeats, 0.0)};
        parallel_for(opts.repeats, opts.threads, [&](std::size_t run) {
            const std::uint64_t run_seed = mix(opts.seed * 0x100000001b3ULL + run);
            auto clf = train_head(spec.head, spec.hyper, fs.word, tr, ytr, dv, ydv, run_seed);
            rep.runs[run] = clf.accuracy(te, yte);
        });
        reports.push_back(std::move(rep));
    }
    return reports;
}

EvalReport run_eval(const TransferSplits& splits, const TransferModelSpec& spec, const TransferResources& res,
                    std::size_t repeats, std::uint64_t seed, std::size_t threads, const std::string& task_name) {
    CurveOptions opts;
    opts.repeats = repeats;
    opts.seed = seed;
    opts.threads = threads;
    opts.task_name = task_name;
    return run_learning_curve(splits, spec, res, opts).front();
}

void write_report_tsv(std::ostream& out, std::span<const EvalReport> reports) {
    out << "task\tspec\tsize\trun\taccuracy\n" << std::fixed << std::setprecision(6);
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.runs.size(); ++i)
            out << r.task << '\t' << r.spec << '\t' << r.size << '\t' << i << '\t' << r.runs[i] << '\n';
    out << "# summary\n# task\tspec\tsize\truns\tmean_accuracy\n";
    for (const auto& r : reports)
        out << "# " << r.task << '\t' << r.spec << '\t' << r.size << '\t' << r.runs.size() << '\t' << r.mean()
            << '\n';
}

}  // namespace senc
