#include "senc/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "senc/errors.hpp"

namespace senc {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<float> parse_float(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    float v = 0.0f;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<long> parse_long(std::string_view s) {
    s = trim(s);
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

namespace {

std::vector<std::string_view> text_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string at_line(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

const float* WordVecTable::find(std::string_view word) const {
    auto it = index.find(std::string(word));
    return it == index.end() ? nullptr : data.data() + it->second * dim;
}

WordVecTable parse_word_vectors(std::string_view text, const std::string& source) {
    WordVecTable table;
    const auto lines = text_lines(text);
    std::optional<std::size_t> declared_count;
    std::size_t lineno = 0;
    for (auto line : lines) {
        ++lineno;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (lineno == 1 && fields.size() == 2) {
            auto v = parse_long(fields[0]);
            auto d = parse_long(fields[1]);
            if (v && d && *v >= 0 && *d > 0) {
                declared_count = static_cast<std::size_t>(*v);
                table.dim = static_cast<std::size_t>(*d);
                continue;
            }
        }
        const std::size_t dim = fields.size() - 1;
        if (dim == 0) throw FormatError(at_line(source, lineno) + "token without a vector");
        if (table.dim == 0) table.dim = dim;
        if (dim != table.dim) {
            throw FormatError(at_line(source, lineno) + "expected " + std::to_string(table.dim) +
                              " values, found " + std::to_string(dim));
        }
        std::vector<float> row(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            auto v = parse_float(fields[j + 1]);
            if (!v || !std::isfinite(*v)) {
                throw FormatError(at_line(source, lineno) + "unreadable float '" +
                                  std::string(fields[j + 1]) + "'");
            }
            row[j] = *v;
        }
        std::string word(fields[0]);
        auto it = table.index.find(word);
        if (it != table.index.end()) {
            ++table.duplicates;
            std::copy(row.begin(), row.end(), table.data.begin() + it->second * dim);
            continue;
        }
        table.index.emplace(word, table.words.size());
        table.words.push_back(std::move(word));
        table.data.insert(table.data.end(), row.begin(), row.end());
    }
    if (declared_count && *declared_count != table.words.size() + table.duplicates) {
        throw FormatError(at_line(source, lineno) + "header declares " + std::to_string(*declared_count) +
                          " entries, file holds " + std::to_string(table.words.size() + table.duplicates));
    }
    return table;
}

WordVecTable load_word_vectors(const std::filesystem::path& path) {
    return parse_word_vectors(read_text_file(path), path.string());
}

TaskSchema parse_schema(std::string_view name) {
    if (name == "single") return TaskSchema::single;
    if (name == "pair-class") return TaskSchema::pair_class;
    if (name == "pair-score") return TaskSchema::pair_score;
    throw ConfigError("unknown task schema '" + std::string(name) +
                      "' (expected single, pair-class or pair-score)");
}

std::string_view schema_name(TaskSchema schema) {
    switch (schema) {
        case TaskSchema::single: return "single";
        case TaskSchema::pair_class: return "pair-class";
        case TaskSchema::pair_score: return "pair-score";
    }
    return "?";
}

std::vector<int> LabeledDataset::labels() const {
    std::vector<int> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(e.label);
    return out;
}

LabeledDataset parse_task_tsv(std::string_view text, TaskSchema schema, const std::string& source) {
    LabeledDataset ds;
    ds.schema = schema;
    const std::size_t want = schema == TaskSchema::single ? 2 : 3;
    std::size_t lineno = 0;
    std::set<int> seen;
    for (auto line : text_lines(text)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != want) {
            throw FormatError(at_line(source, lineno) + "expected " + std::to_string(want) +
                              " tab-separated columns for schema " +
                              std::string(schema_name(schema)) + ", found " + std::to_string(cols.size()));
        }
        LabeledExample ex;
        ex.text_a = cols[0];
        if (want == 3) ex.text_b = cols[1];
        const std::string& label = cols.back();
        if (schema == TaskSchema::pair_score) {
            auto v = parse_double(label);
            if (!v) throw FormatError(at_line(source, lineno) + "non-numeric score '" + label + "'");
            if (*v < ds.score_min || *v > ds.score_max) {
                throw FormatError(at_line(source, lineno) + "score " + label + " outside [0, 5]");
            }
            ex.score = *v;
        } else {
            auto v = parse_long(label);
            if (!v || *v < 0) {
                throw FormatError(at_line(source, lineno) + "class label '" + label +
                                  "' is not a non-negative integer");
            }
            ex.label = static_cast<int>(*v);
            seen.insert(ex.label);
        }
        ds.examples.push_back(std::move(ex));
    }
    if (schema != TaskSchema::pair_score && !seen.empty()) {
        const int c = *seen.rbegin() + 1;
        if (static_cast<int>(seen.size()) != c) {
            throw InputError(source + ": class labels must be dense in [0, " + std::to_string(c) +
                             "); some ids in between never occur");
        }
        ds.num_classes = c;
    }
    return ds;
}

LabeledDataset read_task_tsv(const std::filesystem::path& path, TaskSchema schema) {
    return parse_task_tsv(read_text_file(path), schema, path.string());
}

std::vector<std::vector<std::string>> read_documents(const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> docs;
    std::vector<std::string> current;
    for (auto& line : read_lines(path)) {
        if (trim(line).empty()) {
            if (!current.empty()) docs.push_back(std::move(current));
            current.clear();
            continue;
        }
        current.push_back(std::move(line));
    }
    if (!current.empty()) docs.push_back(std::move(current));
    return docs;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) {
            throw FormatError(at_line(path.string(), lineno) + "expected 2 tab-separated columns, found " +
                              std::to_string(cols.size()));
        }
        out.emplace_back(std::move(cols[0]), std::move(cols[1]));
    }
    return out;
}

}  // namespace senc
