#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace senc {

// token -> vector table in word2vec text layout.
struct WordVecTable {
    std::size_t dim = 0;
    std::vector<std::string> words;
    std::vector<float> data;  // words.size() x dim, row-major
    std::unordered_map<std::string, std::size_t> index;
    std::size_t duplicates = 0;  // repeated tokens seen while loading (last one wins)

    std::size_t size() const { return words.size(); }
    const float* find(std::string_view word) const;
    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

// Reads the word2vec text format: an optional "V d" header line, then one
// "token v1 ... vd" line per entry, fields separated by spaces or tabs.
// FormatError messages carry the offending line number.
WordVecTable load_word_vectors(const std::filesystem::path& path);
WordVecTable parse_word_vectors(std::string_view text, const std::string& source = "<memory>");

enum class TaskSchema { single, pair_class, pair_score };

TaskSchema parse_schema(std::string_view name);
std::string_view schema_name(TaskSchema schema);

struct LabeledExample {
    std::string text_a;
    std::string text_b;  // empty for the single schema
    int label = 0;       // class id (single, pair-class)
    double score = 0.0;  // gold similarity (pair-score)
};

struct LabeledDataset {
    TaskSchema schema = TaskSchema::single;
    std::vector<LabeledExample> examples;
    int num_classes = 0;  // 0 for pair-score
    double score_min = 0.0;
    double score_max = 5.0;

    std::size_t size() const { return examples.size(); }
    std::vector<int> labels() const;
};

// Tab-separated, one record per line, blank lines skipped. Class labels must
// be dense in [0, C); scores must lie in [0, 5].
LabeledDataset read_task_tsv(const std::filesystem::path& path, TaskSchema schema);
LabeledDataset parse_task_tsv(std::string_view text, TaskSchema schema,
                              const std::string& source = "<memory>");

// Running text: one sentence per line, blank lines separate documents.
std::vector<std::vector<std::string>> read_documents(const std::filesystem::path& path);

// Conversational pairs: TSV with columns input-utterance, response-utterance.
std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Splits on a single-character separator, keeping empty fields.
std::vector<std::string> split(std::string_view line, char sep);
// Splits on runs of spaces/tabs.
std::vector<std::string_view> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<float> parse_float(std::string_view s);
std::optional<long> parse_long(std::string_view s);

}  // namespace senc
