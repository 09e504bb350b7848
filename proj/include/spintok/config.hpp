#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace spintok {

// Minimal key=value text file: one pair per line, '#' starts a comment.
// Keys keep insertion-independent (sorted) order on save so identical
// contents produce identical bytes.
class KeyValueFile {
  public:
    static KeyValueFile load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;

    const std::map<std::string, std::string>& items() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace spintok
