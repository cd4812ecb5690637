#include "kaft/kvconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kaft/errors.hpp"

namespace kaft {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig KvConfig::from_string(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw UserError(origin + ": line " + std::to_string(line_no) +
                            ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw UserError(origin + ": line " + std::to_string(line_no) + ": empty key");
        }
        cfg.entries_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KvConfig KvConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw UserError(origin_ + ": key '" + key + "': not an integer: " + it->second);
    }
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw UserError(origin_ + ": key '" + key + "': not an unsigned integer: " + it->second);
    }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw UserError(origin_ + ": key '" + key + "': not a number: " + it->second);
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UserError(origin_ + ": key '" + key + "': not a boolean: " + it->second);
}

std::vector<std::string> KvConfig::get_list(const std::string& key,
                                            const std::vector<std::string>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<std::string> out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace kaft
