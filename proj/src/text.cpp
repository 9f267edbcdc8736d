#include "senc/text.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "senc/errors.hpp"

namespace senc {
namespace {

bool is_detached_punct(char c) {
    switch (c) {
        case '.': case ',': case '!': case '?': case ';': case ':':
        case '"': case '(': case ')':
            return true;
        default:
            return false;
    }
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

void push_with_contractions(std::string word, std::vector<std::string>& out) {
    static constexpr std::array<std::string_view, 6> kClitics = {"'s", "'re", "'ve", "'ll", "'d", "'m"};
    if (word.size() > 3 && ends_with(word, "n't")) {
        out.push_back(word.substr(0, word.size() - 3));
        out.emplace_back("n't");
        return;
    }
    for (std::string_view clitic : kClitics) {
        if (word.size() > clitic.size() && ends_with(word, clitic)) {
            out.push_back(word.substr(0, word.size() - clitic.size()));
            out.emplace_back(clitic);
            return;
        }
    }
    out.push_back(std::move(word));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) push_with_contractions(std::move(word), out);
        word.clear();
    };
    for (char c : raw) {
        if (is_space(c)) {
            flush();
        } else if (is_detached_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        }
    }
    flush();
    if (out.empty()) out.emplace_back(kEmptyToken);
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

std::string bigram_key(std::string_view left, std::string_view right) {
    std::string key;
    key.reserve(left.size() + right.size() + 1);
    key.append(left);
    key.push_back(kBigramSeparator);
    key.append(right);
    return key;
}

Vocabulary::Vocabulary(std::vector<std::string> unigrams, std::vector<std::string> bigrams, int min_count)
    : unigrams_(std::move(unigrams)), bigrams_(std::move(bigrams)), min_count_(min_count) {
    if (unigrams_.size() < 2 || bigrams_.size() < 2) {
        throw InputError("vocabulary tables must include the <unk> and <pad> slots");
    }
    for (std::size_t i = kFirstFreeId; i < unigrams_.size(); ++i)
        unigram_index_.emplace(unigrams_[i], static_cast<TokenId>(i));
    for (std::size_t i = kFirstFreeId; i < bigrams_.size(); ++i)
        bigram_index_.emplace(bigrams_[i], static_cast<TokenId>(i));
}

TokenId Vocabulary::id(std::string_view token) const {
    auto it = unigram_index_.find(std::string(token));
    return it == unigram_index_.end() ? kUnkId : it->second;
}

TokenId Vocabulary::bigram_id(std::string_view left, std::string_view right) const {
    auto it = bigram_index_.find(bigram_key(left, right));
    return it == bigram_index_.end() ? kUnkId : it->second;
}

TokenSeq Vocabulary::encode(std::vector<std::string> tokens) const {
    TokenSeq seq;
    seq.ids.reserve(tokens.size());
    for (const auto& t : tokens) seq.ids.push_back(id(t));
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        seq.bigram_ids.push_back(bigram_id(tokens[i], tokens[i + 1]));
    seq.tokens = std::move(tokens);
    return seq;
}

namespace {

std::vector<std::string> ranked_entries(const std::map<std::string, long>& counts, int min_count) {
    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [key, count] : counts)
        if (count >= min_count) kept.emplace_back(key, count);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out = {"<unk>", "<pad>"};
    for (auto& [key, count] : kept) out.push_back(std::move(key));
    return out;
}

}  // namespace

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int min_count) {
    if (corpus.empty()) throw InputError("build_vocab: empty corpus");
    std::map<std::string, long> unigram_counts;
    std::map<std::string, long> bigram_counts;
    for (const auto& sentence : corpus) {
        for (std::size_t i = 0; i < sentence.size(); ++i) {
            ++unigram_counts[sentence[i]];
            if (i + 1 < sentence.size()) ++bigram_counts[bigram_key(sentence[i], sentence[i + 1])];
        }
    }
    // std::map iterates lexicographically, so the stable sort breaks ties
    // lexicographically.
    return Vocabulary(ranked_entries(unigram_counts, min_count),
                      ranked_entries(bigram_counts, min_count), min_count);
}

}  // namespace senc
