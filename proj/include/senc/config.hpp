#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace senc {

// Flat key=value settings. Lines starting with '#' are comments. Used for
// training configs and for the config block inside checkpoints.
class KeyValues {
public:
    static KeyValues parse(std::string_view text, const std::string& source = "<memory>");
    static KeyValues load(const std::filesystem::path& path);

    std::string serialize() const;

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    void merge(const KeyValues& overrides);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<long> get_int_list(const std::string& key, const std::vector<long>& fallback) const;
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

    // Throws ConfigError listing any key outside `known`.
    void require_known(const std::vector<std::string>& known) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::string source_ = "<memory>";
};

}  // namespace senc
