#include "stokeslab/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stokeslab/errors.hpp"

namespace stokeslab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
}

const std::string& require(const std::map<std::string, std::string>& values,
                           const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("config key '" + key + "': missing");
    return it->second;
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) bad_key(key, "empty value");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (errno != 0 || end != t.c_str() + t.size())
        bad_key(key, "cannot parse '" + t + "' as a real number");
    return v;
}

}  // namespace

ConfigMap ConfigMap::parse_text(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!out.values.emplace(key, value).second)
            throw ConfigError("config key '" + key + "': duplicated");
    }
    return out;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file '" + path + "': cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

bool ConfigMap::has(const std::string& key) const { return values.count(key) != 0; }

long long ConfigMap::get_int(const std::string& key) const {
    const std::string t = trim(require(values, key));
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (errno != 0 || t.empty() || end != t.c_str() + t.size())
        bad_key(key, "cannot parse '" + t + "' as an integer");
    return v;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

unsigned long long ConfigMap::get_u64(const std::string& key) const {
    const std::string t = trim(require(values, key));
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (errno != 0 || t.empty() || end != t.c_str() + t.size() || t[0] == '-')
        bad_key(key, "cannot parse '" + t + "' as an unsigned integer");
    return v;
}

unsigned long long ConfigMap::get_u64(const std::string& key,
                                      unsigned long long fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

double ConfigMap::get_double(const std::string& key) const {
    return parse_double(key, require(values, key));
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::string ConfigMap::get_string(const std::string& key) const {
    return require(values, key);
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::vector<double> ConfigMap::get_list(const std::string& key) const {
    const std::string text = require(values, key);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item =
            comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
        out.push_back(parse_double(key, item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) bad_key(key, "empty list");
    return out;
}

Rect ConfigMap::get_rect(const std::string& key) const {
    const std::string text = require(values, key);
    try {
        return parse_rect(text);
    } catch (const ConfigError& e) {
        bad_key(key, e.what());
    }
}

}  // namespace stokeslab
