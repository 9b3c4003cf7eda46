#pragma once
// Line-based "key = value" configuration files with '#' comments, plus typed
// accessors that always name the offending key in their error messages, so a
// rejected run tells the user exactly which line to fix.

#include <map>
#include <string>
#include <vector>

#include "stokeslab/grid.hpp"

namespace stokeslab {

struct ConfigMap {
    std::map<std::string, std::string> values;

    // Parses "key = value" lines; blank lines and '#' comments (whole-line or
    // trailing) are ignored. Malformed lines and duplicate keys throw
    // ConfigError naming the line or key.
    static ConfigMap parse_text(const std::string& text);
    // Same from a file; a missing or unreadable file throws ConfigError
    // naming the path.
    static ConfigMap parse_file(const std::string& path);

    bool has(const std::string& key) const;

    // Typed getters. The single-argument forms require the key to be present;
    // the two-argument forms fall back to the given default. Unparsable
    // values always throw ConfigError naming the key.
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    unsigned long long get_u64(const std::string& key) const;
    unsigned long long get_u64(const std::string& key, unsigned long long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    // Comma-separated list of reals, at least one entry.
    std::vector<double> get_list(const std::string& key) const;
    // Four comma-separated reals x0,x1,y0,y1.
    Rect get_rect(const std::string& key) const;
};

}  // namespace stokeslab
