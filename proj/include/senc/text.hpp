#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "senc/ops.hpp"

namespace senc {

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kPadId = 1;
inline constexpr TokenId kFirstFreeId = 2;
inline constexpr std::string_view kEmptyToken = "<empty>";
inline constexpr char kBigramSeparator = '\x1f';

// Simplified PTB tokenization: lowercase, split on whitespace, detach
// . , ! ? ; : " ( ) and split English contractions (don't -> do n't,
// it's -> it 's). Empty input yields the single token "<empty>". The rules
// are frozen; see docs/tokenizer.md.
std::vector<std::string> tokenize(std::string_view raw);

std::string join_tokens(const std::vector<std::string>& tokens);
std::string bigram_key(std::string_view left, std::string_view right);

struct TokenSeq {
    std::vector<std::string> tokens;
    std::vector<TokenId> ids;
    std::vector<TokenId> bigram_ids;  // ids.size() - 1 entries (0 when n == 0)

    std::size_t length() const { return ids.size(); }
};

// Unigram and bigram tables. Id 0 is UNK and id 1 is PAD in both tables;
// real entries start at 2 in descending-frequency order with lexicographic
// tie-breaking.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> unigrams, std::vector<std::string> bigrams, int min_count);

    std::size_t size() const { return unigrams_.size(); }
    std::size_t bigram_size() const { return bigrams_.size(); }
    int min_count() const { return min_count_; }

    TokenId id(std::string_view token) const;
    TokenId bigram_id(std::string_view left, std::string_view right) const;
    const std::string& token(TokenId id) const { return unigrams_.at(static_cast<std::size_t>(id)); }

    // Full entry lists including the reserved <unk> and <pad> slots.
    const std::vector<std::string>& unigrams() const { return unigrams_; }
    const std::vector<std::string>& bigrams() const { return bigrams_; }

    TokenSeq encode(std::vector<std::string> tokens) const;
    TokenSeq encode_text(std::string_view raw) const { return encode(tokenize(raw)); }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.unigrams_ == b.unigrams_ && a.bigrams_ == b.bigrams_ && a.min_count_ == b.min_count_;
    }

private:
    std::vector<std::string> unigrams_;
    std::vector<std::string> bigrams_;
    std::unordered_map<std::string, TokenId> unigram_index_;
    std::unordered_map<std::string, TokenId> bigram_index_;
    int min_count_ = 1;
};

// Builds the vocabulary from tokenized sentences. Throws InputError on an
// empty corpus.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int min_count = 2);

}  // namespace senc
