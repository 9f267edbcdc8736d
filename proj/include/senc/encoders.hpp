#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "senc/config.hpp"
#include "senc/tape.hpp"
#include "senc/text.hpp"

namespace senc {

enum class EncoderKind { dan, transformer };
enum class Activation { tanh, relu, identity };

EncoderKind parse_encoder_kind(std::string_view name);
std::string_view encoder_kind_name(EncoderKind kind);
Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

struct TransformerConfig {
    std::size_t num_layers = 2;
    std::size_t num_heads = 4;
    std::size_t ffn_dim = 0;  // 0 means 4 * embed_dim
    std::size_t max_len = 512;
    bool layer_norm = true;
    bool position_encoding = true;
    // Initial gain of the last block's output normalization. Sets the scale
    // of fresh sentence embeddings (and hence of ranking logits at step 0).
    float output_gain_init = 0.1f;
};

struct DanConfig {
    std::size_t input_dim = 0;               // 0 means embed_dim
    std::vector<std::size_t> hidden_dims;    // empty means {embed_dim, embed_dim}
    Activation activation = Activation::tanh;
    bool separate_pool_average = false;
};

struct ModelConfig {
    EncoderKind kind = EncoderKind::dan;
    std::size_t embed_dim = 128;
    std::uint64_t init_seed = 1;
    TransformerConfig transformer;
    DanConfig dan;

    std::size_t ffn_dim() const { return transformer.ffn_dim ? transformer.ffn_dim : 4 * embed_dim; }
    std::size_t dan_input_dim() const { return dan.input_dim ? dan.input_dim : embed_dim; }
    std::vector<std::size_t> dan_hidden_dims() const;

    // Throws ConfigError on violated invariants (h | d, positive sizes).
    void validate() const;

    KeyValues to_key_values() const;
    static ModelConfig from_key_values(const KeyValues& kv);
    static const std::vector<std::string>& keys();
};

// Common interface of both sentence encoders: TokenSeq -> embed_dim floats.
// Parameters live in the encoder; forward() records onto a caller-owned tape
// so any number of threads may encode concurrently with private tapes.
class Encoder {
public:
    virtual ~Encoder() = default;

    const ModelConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    std::size_t embed_dim() const { return config_.embed_dim; }
    EncoderKind kind() const { return config_.kind; }

    // Records the batch onto `tape`; returns a [seqs.size() x embed_dim]
    // value. Row i depends only on seqs[i].
    virtual Var forward(Tape& tape, std::span<const TokenSeq> seqs) const = 0;

    TokenSeq prepare(std::string_view text) const { return vocab_.encode_text(text); }
    Tensor encode_batch(std::span<const TokenSeq> seqs) const;
    std::vector<float> encode(const TokenSeq& seq) const;
    std::vector<float> encode_text(std::string_view text) const;

protected:
    Encoder(ModelConfig config, Vocabulary vocab) : config_(std::move(config)), vocab_(std::move(vocab)) {}
    void check_batch(std::span<const TokenSeq> seqs) const;

    ModelConfig config_;
    Vocabulary vocab_;
    ParameterStore params_;
};

// Unigram and bigram embeddings averaged together, then a feedforward stack.
class DanEncoder final : public Encoder {
public:
    DanEncoder(ModelConfig config, Vocabulary vocab);
    Var forward(Tape& tape, std::span<const TokenSeq> seqs) const override;

    // The averaged input embedding before the feedforward stack, one row per
    // sentence.
    Var pool(Tape& tape, std::span<const TokenSeq> seqs) const;
};

// Transformer encoding sub-graph; context vectors are summed over positions
// and divided by sqrt(n).
class TransformerEncoder final : public Encoder {
public:
    TransformerEncoder(ModelConfig config, Vocabulary vocab);
    Var forward(Tape& tape, std::span<const TokenSeq> seqs) const override;

    // Context vectors c_1..c_n of every sentence, stacked sentence after
    // sentence ([sum of lengths x embed_dim]).
    Var context(Tape& tape, std::span<const TokenSeq> seqs) const;

    // Row-softmax attention weights of the given layer and head for a single
    // sentence; inspection aid for tests.
    Tensor attention_weights(const TokenSeq& seq, std::size_t layer, std::size_t head) const;

private:
    Var context_impl(Tape& tape, std::span<const TokenSeq> seqs, std::vector<Var>* attention) const;
    Tensor positions_;  // max_len x embed_dim sinusoidal table
};

std::unique_ptr<Encoder> make_encoder(const ModelConfig& config, Vocabulary vocab);

// Sinusoidal position table: even columns sin(pos / 10000^(2i/d)), odd columns cos.
Tensor sinusoidal_positions(std::size_t max_len, std::size_t dim);

// Checkpoint container; layout documented in docs/checkpoint_format.md.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Encoder& encoder, const std::filesystem::path& path);
std::unique_ptr<Encoder> load_checkpoint(const std::filesystem::path& path);

struct CheckpointInfo {
    std::uint32_t version = 0;
    ModelConfig config;
    std::size_t vocab_size = 0;
    std::size_t bigram_vocab_size = 0;
    std::size_t parameter_floats = 0;
};
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

// Order-sensitive FNV-1a hash over parameter names and raw float bits.
std::uint64_t parameter_hash(const ParameterStore& params);

}  // namespace senc
