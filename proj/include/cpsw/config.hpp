#pragma once
// Flat key-value experiment configs: `key = value` lines, optional
// `[section]` headers flattening to `section.key`, `#` comments. A JSON
// mirror is accepted for files ending in .json (objects flatten the same
// way). Diff-friendly for sweeps.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cpsw/errors.hpp"

namespace cpsw::config {

class Config {
  public:
    Config() = default;
    explicit Config(std::map<std::string, std::string> values)
        : values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key,
                    const std::string& fallback) const;
    std::string require(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
    }
    const std::map<std::string, std::string>& values() const {
        return values_;
    }

  private:
    std::map<std::string, std::string> values_;
};

Config parse_config_text(const std::string& text);
Config parse_config_json(const std::string& text);
Config load_config_file(const std::string& path); // dispatches on extension

std::vector<std::string> split_list(const std::string& value);

} // namespace cpsw::config
