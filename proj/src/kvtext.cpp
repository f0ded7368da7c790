#include "cwdsim/kvtext.hpp"

#include "cwdsim/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cwdsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueText KeyValueText::parse(std::istream& in, std::string_view source_name) {
    KeyValueText doc;
    doc.source_ = std::string(source_name);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(doc.source_ + ":" + std::to_string(lineno) + ": expected `key = value`");
        }
        const std::string key(trim(view.substr(0, eq)));
        const std::string value(trim(view.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(doc.source_ + ":" + std::to_string(lineno) + ": empty key");
        }
        if (doc.entries_.count(key)) {
            throw ConfigError(doc.source_ + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
        }
        doc.entries_[key] = value;
        doc.lines_[key] = lineno;
    }
    return doc;
}

KeyValueText KeyValueText::parse_string(std::string_view text, std::string_view source_name) {
    std::istringstream in{std::string(text)};
    return parse(in, source_name);
}

KeyValueText KeyValueText::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return parse(in, path);
}

bool KeyValueText::contains(const std::string& key) const { return entries_.count(key) != 0; }

const std::string* KeyValueText::find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_[key] = true;
    return &it->second;
}

std::string KeyValueText::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

std::string KeyValueText::require_string(const std::string& key) const {
    const auto* v = find(key);
    if (!v) throw ConfigError(source_ + ": missing required key `" + key + "`");
    return *v;
}

double KeyValueText::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": `" + key + "` is not a number");
    }
    return out;
}

long long KeyValueText::get_int(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    long long out = 0;
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": `" + key + "` is not an integer");
    }
    return out;
}

unsigned long long KeyValueText::get_uint64(const std::string& key, unsigned long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    unsigned long long out = 0;
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": `" + key +
                          "` is not an unsigned integer");
    }
    return out;
}

bool KeyValueText::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": `" + key + "` is not a boolean");
}

void KeyValueText::reject_unconsumed() const {
    for (const auto& [key, value] : entries_) {
        if (!consumed_.count(key)) {
            throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": unknown key `" + key + "`");
        }
    }
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace cwdsim
