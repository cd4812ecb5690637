#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kaft {

// Flat "key = value" config files: one pair per line, '#' starts a comment,
// blank lines ignored. Values keep internal whitespace.
class KvConfig {
  public:
    KvConfig() = default;
    static KvConfig from_file(const std::string& path);
    static KvConfig from_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback) const;  // comma-split

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::string origin_;
    std::map<std::string, std::string> entries_;
};

}  // namespace kaft
