#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

namespace cwdsim {

// Flat `key = value` text with `#` comments. Every key read through one of
// the getters is marked consumed; reject_unconsumed() turns leftovers into a
// ConfigError so typos never pass silently.
class KeyValueText {
public:
    static KeyValueText parse(std::istream& in, std::string_view source_name = "<input>");
    static KeyValueText parse_string(std::string_view text, std::string_view source_name = "<input>");
    static KeyValueText load(const std::string& path);

    bool contains(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    unsigned long long get_uint64(const std::string& key, unsigned long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::string require_string(const std::string& key) const;

    void reject_unconsumed() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    const std::string* find(const std::string& key) const;

    std::string source_;
    std::map<std::string, std::string> entries_;
    std::map<std::string, int> lines_;
    mutable std::map<std::string, bool> consumed_;
};

// Shortest text that parses back to the identical double.
std::string format_double(double value);

}  // namespace cwdsim
