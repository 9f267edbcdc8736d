#include "senc/encoders.hpp"

#include <cmath>
#include <random>

#include "senc/errors.hpp"
#include "senc/ops.hpp"

namespace senc {

EncoderKind parse_encoder_kind(std::string_view name) {
    if (name == "dan" || name == "use_d") return EncoderKind::dan;
    if (name == "transformer" || name == "use_t") return EncoderKind::transformer;
    throw ConfigError("unknown encoder '" + std::string(name) + "' (expected dan or transformer)");
}

std::string_view encoder_kind_name(EncoderKind kind) {
    return kind == EncoderKind::dan ? "dan" : "transformer";
}

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation act) {
    switch (act) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    return "?";
}

std::vector<std::size_t> ModelConfig::dan_hidden_dims() const {
    if (!dan.hidden_dims.empty()) return dan.hidden_dims;
    return {embed_dim, embed_dim};
}

void ModelConfig::validate() const {
    if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
    if (kind == EncoderKind::transformer) {
        const auto& t = transformer;
        if (t.num_layers == 0 || t.num_heads == 0 || t.max_len == 0) {
            throw ConfigError("transformer num_layers, num_heads and max_len must be positive");
        }
        if (embed_dim % t.num_heads != 0) {
            throw ConfigError("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
                              std::to_string(t.num_heads));
        }
    } else {
        for (auto h : dan_hidden_dims())
            if (h == 0) throw ConfigError("dan hidden_dims must be positive");
    }
}

const std::vector<std::string>& ModelConfig::keys() {
    static const std::vector<std::string> k = {
        "encoder",    "embed_dim",        "init_seed",         "num_layers",
        "num_heads",  "ffn_dim",          "max_len",           "layer_norm",
        "position_encoding", "output_gain_init", "input_dim",   "hidden_dims",
        "activation", "separate_pool_average"};
    return k;
}

KeyValues ModelConfig::to_key_values() const {
    KeyValues kv;
    kv.set("encoder", std::string(encoder_kind_name(kind)));
    kv.set("embed_dim", std::to_string(embed_dim));
    kv.set("init_seed", std::to_string(init_seed));
    if (kind == EncoderKind::transformer) {
        kv.set("num_layers", std::to_string(transformer.num_layers));
        kv.set("num_heads", std::to_string(transformer.num_heads));
        kv.set("ffn_dim", std::to_string(ffn_dim()));
        kv.set("max_len", std::to_string(transformer.max_len));
        kv.set("layer_norm", transformer.layer_norm ? "true" : "false");
        kv.set("position_encoding", transformer.position_encoding ? "true" : "false");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(transformer.output_gain_init));
        kv.set("output_gain_init", buf);
    } else {
        kv.set("input_dim", std::to_string(dan_input_dim()));
        std::string dims;
        for (auto h : dan_hidden_dims()) dims += (dims.empty() ? "" : ",") + std::to_string(h);
        kv.set("hidden_dims", dims);
        kv.set("activation", std::string(activation_name(dan.activation)));
        kv.set("separate_pool_average", dan.separate_pool_average ? "true" : "false");
    }
    return kv;
}

ModelConfig ModelConfig::from_key_values(const KeyValues& kv) {
    ModelConfig c;
    c.kind = parse_encoder_kind(kv.get_string("encoder", "dan"));
    c.embed_dim = static_cast<std::size_t>(kv.get_int("embed_dim", 128));
    c.init_seed = static_cast<std::uint64_t>(kv.get_int("init_seed", 1));
    c.transformer.num_layers = static_cast<std::size_t>(kv.get_int("num_layers", 2));
    c.transformer.num_heads = static_cast<std::size_t>(kv.get_int("num_heads", 4));
    c.transformer.ffn_dim = static_cast<std::size_t>(kv.get_int("ffn_dim", 0));
    c.transformer.max_len = static_cast<std::size_t>(kv.get_int("max_len", 512));
    c.transformer.layer_norm = kv.get_bool("layer_norm", true);
    c.transformer.position_encoding = kv.get_bool("position_encoding", true);
    c.transformer.output_gain_init = static_cast<float>(kv.get_double("output_gain_init", 0.1));
    c.dan.input_dim = static_cast<std::size_t>(kv.get_int("input_dim", 0));
    for (long h : kv.get_int_list("hidden_dims", {})) {
        if (h <= 0) throw ConfigError("hidden_dims entries must be positive");
        c.dan.hidden_dims.push_back(static_cast<std::size_t>(h));
    }
    c.dan.activation = parse_activation(kv.get_string("activation", "tanh"));
    c.dan.separate_pool_average = kv.get_bool("separate_pool_average", false);
    c.validate();
    return c;
}

void Encoder::check_batch(std::span<const TokenSeq> seqs) const {
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (seqs[i].ids.empty()) throw InputError("sentence " + std::to_string(i) + ": empty token sequence");
        if (seqs[i].bigram_ids.size() + 1 != seqs[i].ids.size()) {
            throw InputError("sentence " + std::to_string(i) + ": bigram ids do not match token count");
        }
    }
}

Tensor Encoder::encode_batch(std::span<const TokenSeq> seqs) const {
    if (seqs.empty()) return Tensor::matrix(0, embed_dim());
    Tape tape(false);
    return forward(tape, seqs).value();
}

std::vector<float> Encoder::encode(const TokenSeq& seq) const {
    Tensor out = encode_batch(std::span<const TokenSeq>(&seq, 1));
    return out.storage();
}

std::vector<float> Encoder::encode_text(std::string_view text) const { return encode(prepare(text)); }

namespace {

Tensor normal_init(std::size_t rows, std::size_t cols, float stddev, std::mt19937_64& rng) {
    std::normal_distribution<float> dist(0.0f, stddev);
    Tensor t = Tensor::matrix(rows, cols);
    for (auto& v : t.storage()) v = dist(rng);
    return t;
}

Tensor uniform_init(std::size_t rows, std::size_t cols, float limit, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> dist(-limit, limit);
    Tensor t = Tensor::matrix(rows, cols);
    for (auto& v : t.storage()) v = dist(rng);
    return t;
}

Var apply_activation(Var x, Activation act) {
    switch (act) {
        case Activation::tanh: return tanh(x);
        case Activation::relu: return relu(x);
        case Activation::identity: return x;
    }
    return x;
}

std::string layer_name(std::size_t l, const char* what) {
    return "layer" + std::to_string(l) + "/" + what;
}

}  // namespace

DanEncoder::DanEncoder(ModelConfig config, Vocabulary vocab) : Encoder(std::move(config), std::move(vocab)) {
    config_.kind = EncoderKind::dan;
    config_.validate();
    std::mt19937_64 rng(config_.init_seed);
    const std::size_t din = config_.dan_input_dim();
    params_.add("unigram_emb", normal_init(vocab_.size(), din, 0.1f, rng));
    params_.add("bigram_emb", normal_init(vocab_.bigram_size(), din, 0.1f, rng));
    std::size_t in = din;
    const auto hidden = config_.dan_hidden_dims();
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        const float lim = 1.0f / std::sqrt(static_cast<float>(in));
        params_.add(layer_name(l, "w"), uniform_init(in, hidden[l], lim, rng));
        params_.add(layer_name(l, "b"), Tensor::matrix(1, hidden[l]));
        in = hidden[l];
    }
    const float lim = 1.0f / std::sqrt(static_cast<float>(in));
    params_.add("out/w", uniform_init(in, config_.embed_dim, lim, rng));
    params_.add("out/b", Tensor::matrix(1, config_.embed_dim));
}

Var DanEncoder::pool(Tape& tape, std::span<const TokenSeq> seqs) const {
    check_batch(seqs);
    std::vector<std::vector<TokenId>> uni, bi;
    uni.reserve(seqs.size());
    bi.reserve(seqs.size());
    for (const auto& s : seqs) {
        uni.push_back(s.ids);
        bi.push_back(s.bigram_ids);
    }
    Var u = bag_sum(tape.param(params_.get("unigram_emb")), uni);
    Var b = bag_sum(tape.param(params_.get("bigram_emb")), bi);
    if (!config_.dan.separate_pool_average) {
        std::vector<float> inv;
        for (const auto& s : seqs) inv.push_back(1.0f / static_cast<float>(2 * s.length() - 1));
        return scale_rows(add(u, b), std::move(inv));
    }
    std::vector<float> fu, fb;
    for (const auto& s : seqs) {
        const float n = static_cast<float>(s.length());
        const bool has_bigrams = s.length() > 1;
        fu.push_back(has_bigrams ? 0.5f / n : 1.0f);
        fb.push_back(has_bigrams ? 0.5f / (n - 1.0f) : 0.0f);
    }
    return add(scale_rows(u, std::move(fu)), scale_rows(b, std::move(fb)));
}

Var DanEncoder::forward(Tape& tape, std::span<const TokenSeq> seqs) const {
    Var x = pool(tape, seqs);
    const auto hidden = config_.dan_hidden_dims();
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        x = add_bias(matmul(x, tape.param(params_.get(layer_name(l, "w")))),
                     tape.param(params_.get(layer_name(l, "b"))));
        x = apply_activation(x, config_.dan.activation);
    }
    return add_bias(matmul(x, tape.param(params_.get("out/w"))), tape.param(params_.get("out/b")));
}

Tensor sinusoidal_positions(std::size_t max_len, std::size_t dim) {
    Tensor pe = Tensor::matrix(max_len, dim);
    for (std::size_t pos = 0; pos < max_len; ++pos)
        for (std::size_t i = 0; i < dim; ++i) {
            const double expo = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
            pe.at(pos, i) = static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    return pe;
}

TransformerEncoder::TransformerEncoder(ModelConfig config, Vocabulary vocab)
    : Encoder(std::move(config), std::move(vocab)) {
    config_.kind = EncoderKind::transformer;
    config_.validate();
    const std::size_t d = config_.embed_dim;
    const std::size_t f = config_.ffn_dim();
    const float lim = 1.0f / std::sqrt(static_cast<float>(d));
    std::mt19937_64 rng(config_.init_seed);
    params_.add("token_emb", normal_init(vocab_.size(), d, 0.1f, rng));
    const std::size_t layers = config_.transformer.num_layers;
    for (std::size_t l = 0; l < layers; ++l) {
        for (const char* w : {"wq", "wk", "wv", "wo"}) params_.add(layer_name(l, w), uniform_init(d, d, lim, rng));
        for (const char* b : {"bq", "bk", "bv", "bo"}) params_.add(layer_name(l, b), Tensor::matrix(1, d));
        params_.add(layer_name(l, "ffn_w1"), uniform_init(d, f, lim, rng));
        params_.add(layer_name(l, "ffn_b1"), Tensor::matrix(1, f));
        params_.add(layer_name(l, "ffn_w2"), uniform_init(f, d, lim, rng));
        params_.add(layer_name(l, "ffn_b2"), Tensor::matrix(1, d));
        if (config_.transformer.layer_norm) {
            const bool last = l + 1 == layers;
            params_.add(layer_name(l, "ln1_gain"), Tensor::matrix(1, d, 1.0f));
            params_.add(layer_name(l, "ln1_bias"), Tensor::matrix(1, d));
            params_.add(layer_name(l, "ln2_gain"),
                        Tensor::matrix(1, d, last ? config_.transformer.output_gain_init : 1.0f));
            params_.add(layer_name(l, "ln2_bias"), Tensor::matrix(1, d));
        }
    }
    if (config_.transformer.position_encoding) positions_ = sinusoidal_positions(config_.transformer.max_len, d);
}

namespace {

// Unfused attention: one slice/matmul/softmax chain per (sentence, head),
// keeping each head's weights as a node. Same values as multi_head_attention;
// used when the weights are inspected.
Var reference_attention(Var q, Var k, Var v, const std::vector<std::size_t>& offsets,
                        const std::vector<std::size_t>& lengths, std::size_t heads, std::vector<Var>* attention) {
    const std::size_t dk = q.value().cols() / heads;
    std::vector<Var> sentences;
    sentences.reserve(lengths.size());
    for (std::size_t s = 0; s < lengths.size(); ++s) {
        const std::size_t n = lengths[s], r0 = offsets[s];
        std::vector<Var> head_out;
        head_out.reserve(heads);
        for (std::size_t h = 0; h < heads; ++h) {
            Var qh = slice(q, r0, n, h * dk, dk);
            Var kh = slice(k, r0, n, h * dk, dk);
            Var vh = slice(v, r0, n, h * dk, dk);
            Var weights = softmax_rows(matmul_transposed(qh, kh));
            attention->push_back(weights);
            head_out.push_back(matmul(weights, vh));
        }
        sentences.push_back(concat_cols(head_out));
    }
    return concat_rows(sentences);
}

}  // namespace

Var TransformerEncoder::context_impl(Tape& tape, std::span<const TokenSeq> seqs,
                                     std::vector<Var>* attention) const {
    check_batch(seqs);
    const std::size_t d = config_.embed_dim;
    const std::size_t heads = config_.transformer.num_heads;
    const std::size_t dk = d / heads;
    const std::size_t max_len = config_.transformer.max_len;
    std::vector<TokenId> ids;
    std::vector<std::size_t> offsets, lengths;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (seqs[i].length() > max_len) {
            throw InputError("sentence " + std::to_string(i) + ": length " + std::to_string(seqs[i].length()) +
                             " exceeds max_len " + std::to_string(max_len));
        }
        offsets.push_back(ids.size());
        lengths.push_back(seqs[i].length());
        ids.insert(ids.end(), seqs[i].ids.begin(), seqs[i].ids.end());
    }
    const std::size_t total = ids.size();

    Var x = gather_rows(tape.param(params_.get("token_emb")), ids);
    if (config_.transformer.position_encoding) {
        Tensor pe = Tensor::matrix(total, d);
        for (std::size_t s = 0; s < seqs.size(); ++s)
            std::copy_n(positions_.data(), seqs[s].length() * d, pe.data() + offsets[s] * d);
        x = add(x, tape.constant(std::move(pe)));
    }

    const float inv_sqrt_dk = 1.0f / std::sqrt(static_cast<float>(dk));
    auto linear = [&](Var in, std::size_t l, const char* w, const char* b) {
        return add_bias(matmul(in, tape.param(params_.get(layer_name(l, w)))),
                        tape.param(params_.get(layer_name(l, b))));
    };
    auto norm = [&](Var in, std::size_t l, const char* gain, const char* bias) {
        if (!config_.transformer.layer_norm) return in;
        return layer_norm(in, tape.param(params_.get(layer_name(l, gain))),
                          tape.param(params_.get(layer_name(l, bias))));
    };

    for (std::size_t l = 0; l < config_.transformer.num_layers; ++l) {
        Var q = scale(linear(x, l, "wq", "bq"), inv_sqrt_dk);
        Var k = linear(x, l, "wk", "bk");
        Var v = linear(x, l, "wv", "bv");
        Var mixed = attention ? reference_attention(q, k, v, offsets, lengths, heads, attention)
                              : multi_head_attention(q, k, v, std::span<const std::size_t>(lengths), heads);
        Var attended = linear(mixed, l, "wo", "bo");
        x = norm(add(x, attended), l, "ln1_gain", "ln1_bias");
        Var hidden = relu(linear(x, l, "ffn_w1", "ffn_b1"));
        x = norm(add(x, linear(hidden, l, "ffn_w2", "ffn_b2")), l, "ln2_gain", "ln2_bias");
    }
    return x;
}

Var TransformerEncoder::context(Tape& tape, std::span<const TokenSeq> seqs) const {
    return context_impl(tape, seqs, nullptr);
}

Var TransformerEncoder::forward(Tape& tape, std::span<const TokenSeq> seqs) const {
    Var ctx = context_impl(tape, seqs, nullptr);
    std::vector<Var> pooled;
    pooled.reserve(seqs.size());
    std::size_t offset = 0;
    for (const auto& s : seqs) {
        const std::size_t n = s.length();
        pooled.push_back(scale(sum_rows(slice_rows(ctx, offset, n)), 1.0f / std::sqrt(static_cast<float>(n))));
        offset += n;
    }
    return concat_rows(pooled);
}

Tensor TransformerEncoder::attention_weights(const TokenSeq& seq, std::size_t layer, std::size_t head) const {
    if (layer >= config_.transformer.num_layers || head >= config_.transformer.num_heads) {
        throw InputError("attention_weights: no layer " + std::to_string(layer) + " head " + std::to_string(head));
    }
    Tape tape(false);
    std::vector<Var> attention;
    context_impl(tape, std::span<const TokenSeq>(&seq, 1), &attention);
    return attention[layer * config_.transformer.num_heads + head].value();
}

std::unique_ptr<Encoder> make_encoder(const ModelConfig& config, Vocabulary vocab) {
    if (config.kind == EncoderKind::transformer) return std::make_unique<TransformerEncoder>(config, std::move(vocab));
    return std::make_unique<DanEncoder>(config, std::move(vocab));
}

}  // namespace senc
