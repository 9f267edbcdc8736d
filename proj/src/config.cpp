#include "senc/config.hpp"

#include <algorithm>

#include "senc/data_io.hpp"
#include "senc/errors.hpp"

namespace senc {

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
    KeyValues kv;
    kv.source_ = source;
    std::size_t lineno = 0;
    for (std::size_t start = 0; start < text.size();) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(start, end - start));
        ++lineno;
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto key = std::string(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        kv.values_[key] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    return parse(read_text_file(path), path.string());
}

std::string KeyValues::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

void KeyValues::merge(const KeyValues& overrides) {
    for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long KeyValues::get_int(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = parse_long(it->second);
    if (!v) throw ConfigError(source_ + ": key '" + key + "' expects an integer, got '" + it->second + "'");
    return *v;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = parse_double(it->second);
    if (!v) throw ConfigError(source_ + ": key '" + key + "' expects a number, got '" + it->second + "'");
    return *v;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto& s = it->second;
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError(source_ + ": key '" + key + "' expects a boolean, got '" + s + "'");
}

std::vector<std::string> KeyValues::get_list(const std::string& key,
                                             const std::vector<std::string>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    for (auto& part : split(it->second, ',')) {
        auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::vector<long> KeyValues::get_int_list(const std::string& key, const std::vector<long>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<long> out;
    for (const auto& s : get_list(key, {})) {
        auto v = parse_long(s);
        if (!v) throw ConfigError(source_ + ": key '" + key + "' expects integers, got '" + s + "'");
        out.push_back(*v);
    }
    return out;
}

void KeyValues::require_known(const std::vector<std::string>& known) const {
    std::string unknown;
    for (const auto& [k, v] : values_) {
        if (std::find(known.begin(), known.end(), k) == known.end()) unknown += (unknown.empty() ? "" : ", ") + k;
    }
    if (!unknown.empty()) throw ConfigError(source_ + ": unknown key(s): " + unknown);
}

}  // namespace senc
